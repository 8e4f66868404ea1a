use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A density tabulated on a strictly increasing grid, integrated with the
/// trapezoid rule (equivalently, exactly integrating the piecewise-linear
/// interpolant of the values).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridDensity {
    points: Vec<f64>,
    values: Vec<f64>,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridDensity {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridDensity::new(raw.points, raw.values)
    }
}

impl From<GridDensity> for RawGrid {
    fn from(g: GridDensity) -> Self {
        RawGrid {
            points: g.points,
            values: g.values,
        }
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(points: &[f64], values: &[f64]) -> f64 {
    points
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
        .sum()
}

impl GridDensity {
    /// Validates the grid and records its trapezoid mass in `norm`.
    /// Values are kept as given; see [`GridDensity::normalized`].
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::LengthMismatch(points.len(), values.len()));
        }
        if points.len() < 2 {
            return Err(Error::param("grid", "at least two points are required"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("grid", "points must be finite"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("grid", "points must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("grid", "values must be finite and nonnegative"));
        }
        let norm = trapezoid(&points, &values);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::param("grid", format!("density has no mass (norm = {norm})")));
        }
        Ok(GridDensity { points, values, norm })
    }

    /// Same grid with values divided by the trapezoid mass.
    pub fn normalized(&self) -> GridDensity {
        if self.norm == 1.0 {
            return self.clone();
        }
        let values: Vec<f64> = self.values.iter().map(|v| v / self.norm).collect();
        let norm = trapezoid(&self.points, &values);
        GridDensity {
            points: self.points.clone(),
            values,
            norm,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Linear interpolation inside the grid, zero outside.
    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= self.lo() && x <= self.hi()) {
            return 0.0;
        }
        let i = self.cell_of(x);
        let (x0, x1) = (self.points[i], self.points[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Index `i` with `points[i] <= x <= points[i + 1]` (clamped).
    fn cell_of(&self, x: f64) -> usize {
        let idx = self.points.partition_point(|p| *p <= x);
        idx.saturating_sub(1).min(self.points.len() - 2)
    }

    /// Cumulative trapezoid mass at every grid point (unnormalized).
    pub fn cumulative(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for (x, v) in self.points.windows(2).zip(self.values.windows(2)) {
            acc += 0.5 * (v[0] + v[1]) * (x[1] - x[0]);
            cum.push(acc);
        }
        cum
    }

    /// Mass of `[lo, x]` under the interpolant, relative to `norm`, given the
    /// cumulative table from [`GridDensity::cumulative`].
    pub(crate) fn cdf_with(&self, cum: &[f64], x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let i = self.cell_of(x);
        let (x0, v0) = (self.points[i], self.values[i]);
        let vx = self.eval(x);
        let partial = 0.5 * (v0 + vx) * (x - x0);
        ((cum[i] + partial) / self.norm).clamp(0.0, 1.0)
    }

    /// Inverse of [`GridDensity::cdf_with`]; solves the quadratic inside the cell.
    pub(crate) fn quantile_with(&self, cum: &[f64], p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.norm;
        let i = cum.partition_point(|c| *c < target).clamp(1, cum.len() - 1) - 1;
        let (x0, x1) = (self.points[i], self.points[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let need = target - cum[i];
        let h = x1 - x0;
        let slope = (v1 - v0) / h;
        // v0 * t + slope * t^2 / 2 = need
        let t = if slope.abs() < 1e-300 {
            if v0 > 0.0 {
                need / v0
            } else {
                0.0
            }
        } else {
            let disc = (v0 * v0 + 2.0 * slope * need).max(0.0);
            let q = v0 + disc.sqrt();
            if q > 0.0 {
                2.0 * need / q
            } else {
                (-v0 + disc.sqrt()) / slope
            }
        };
        (x0 + t.clamp(0.0, h)).clamp(x0, x1)
    }

    /// `(mean, variance)` of the piecewise-linear interpolant, integrated
    /// exactly cell by cell.
    pub fn moments(&self) -> (f64, f64) {
        let cells = || {
            self.points
                .windows(2)
                .zip(self.values.windows(2))
                .map(|(x, v)| (x[0], x[1], v[0], v[1]))
        };
        let first: f64 = cells()
            .map(|(x0, x1, v0, v1)| (x1 - x0) * (v0 * (2.0 * x0 + x1) + v1 * (x0 + 2.0 * x1)) / 6.0)
            .sum();
        let mean = first / self.norm;
        // Center before squaring to avoid cancellation.
        let second: f64 = cells()
            .map(|(x0, x1, v0, v1)| {
                let (a, b) = (x0 - mean, x1 - mean);
                (x1 - x0) * (v0 * (3.0 * a * a + 2.0 * a * b + b * b) + v1 * (a * a + 2.0 * a * b + 3.0 * b * b)) / 12.0
            })
            .sum();
        (mean, second / self.norm)
    }
}
