use rayon::prelude::*;

use crate::distributions::{trapezoid, Distribution, DistributionSpec, GridDensity};
use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

use super::{
    canonical_inputs, hull_intersection, ConflationForm, ConflationResult, Engine, NON_INTEGRABLE_PRODUCT,
    SLOW_CONVERGENCE,
};

/// Settings for the quadrature engine.
///
/// With `points` set, the product is evaluated on exactly those points.
/// Otherwise an automatic grid of `base_points` sinh-spaced points is placed
/// around the mode of the product and doubled up to `max_refinements` times
/// until the normalizer changes by less than `rel_tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridOptions {
    pub points: Option<Vec<f64>>,
    pub base_points: usize,
    pub max_refinements: u32,
    pub rel_tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            points: None,
            base_points: 4096,
            max_refinements: 8,
            rel_tol: 1e-9,
        }
    }
}

/// Log-density range kept around the maximum of the product.
const LN_RANGE: f64 = 70.0;
/// Octaves of the first geometric ladder toward a finite endpoint.
const LADDER_OCTAVES: u32 = 40;
/// Refinements with a relative normalizer change above this mark a
/// non-integrable product.
const DIVERGENCE_CHANGE: f64 = 0.1;

/// Grid conflation of continuous inputs, on `grid` when given.
pub fn conflate_grid(specs: &[DistributionSpec], grid: Option<&[f64]>) -> Result<ConflationResult> {
    let opts = GridOptions {
        points: grid.map(<[f64]>::to_vec),
        ..GridOptions::default()
    };
    conflate_grid_with(specs, &opts)
}

pub fn conflate_grid_with(specs: &[DistributionSpec], opts: &GridOptions) -> Result<ConflationResult> {
    let dists = canonical_inputs(specs)?;
    grid_engine(&dists, opts)
}

fn ln_product(dists: &[Distribution], x: f64) -> f64 {
    let mut s = 0.0;
    for d in dists {
        let v = d.ln_eval(x);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        s += v;
    }
    s
}

fn ln_values(dists: &[Distribution], xs: &[f64]) -> Vec<f64> {
    xs.par_iter().map(|&x| ln_product(dists, x)).collect()
}

/// Points where the density product has a jump or a kink.
fn kinks(spec: &DistributionSpec, out: &mut Vec<f64>) {
    use DistributionSpec as S;
    match spec {
        S::Laplace { .. } | S::Exponential { .. } | S::Gamma { .. } | S::ChiSquare { .. } => out.push(0.0),
        S::Uniform { a, b } => out.extend([*a, *b]),
        S::Beta { .. } => out.extend([0.0, 1.0]),
        S::Pareto { beta, .. } => out.push(*beta),
        S::Grid(g) => out.extend_from_slice(g.points()),
        S::Truncated { inner, lo, hi } => {
            out.extend([*lo, *hi]);
            kinks(inner, out);
        }
        _ => {}
    }
}

/// Placement of the automatic grid: the effective range `[a, b]` where the
/// log product is within `LN_RANGE` of its maximum, the mode `m`, the width
/// `w` over which the log product drops by 1/2, and whether the range runs
/// into a finite support endpoint.
struct Frame {
    a: f64,
    b: f64,
    m: f64,
    w: f64,
    touch_lo: bool,
    touch_hi: bool,
    breaks: Vec<f64>,
}

fn spread(d: &Distribution) -> (f64, f64) {
    let c = d.median();
    let s = d.quantile(0.75) - d.quantile(0.25);
    let s = if s.is_finite() && s > 0.0 {
        s
    } else {
        1e-6 * c.abs().max(1.0)
    };
    (c, s)
}

impl Frame {
    fn scan(dists: &[Distribution], lo: f64, hi: f64) -> Result<Frame> {
        let mut breaks = Vec::new();
        for d in dists {
            kinks(d.spec(), &mut breaks);
        }
        let mut xs = Vec::new();
        for d in dists {
            let (c, s) = spread(d);
            xs.extend((0..=1200).map(|i| c + s * (-28.0 + 56.0 * i as f64 / 1200.0).sinh()));
            for k in -80..=20 {
                let h = s * 2f64.powi(k);
                xs.extend([lo + h, hi - h]);
            }
        }
        xs.extend([lo, hi]);
        if lo.is_finite() && hi.is_finite() {
            xs.extend((1..256).map(|i| lo + (hi - lo) * i as f64 / 256.0));
        }
        xs.extend_from_slice(&breaks);
        xs.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let lv = ln_values(dists, &xs);
        let (mut im, mut top) = (usize::MAX, f64::NEG_INFINITY);
        for (i, &l) in lv.iter().enumerate() {
            if l.is_finite() && l > top {
                im = i;
                top = l;
            }
        }
        if im == usize::MAX {
            return Err(Error::Incompatible(
                "the density product vanishes on the common support".into(),
            ));
        }
        let f = |x: f64| ln_product(dists, x);
        let mut m = xs[im];
        if im > 0 && im + 1 < xs.len() {
            let (x, v) = golden_max(&f, xs[im - 1], xs[im + 1]);
            if v > top {
                m = x;
                top = v;
            }
        }
        // The range is judged by mass per scan cell rather than by density,
        // so a density singularity at an endpoint does not shrink it.
        let cell_mass: Vec<f64> = (0..xs.len())
            .map(|i| {
                let l = xs[i.saturating_sub(1)];
                let r = xs[(i + 1).min(xs.len() - 1)];
                lv[i] + (0.5 * (r - l)).ln()
            })
            .collect();
        let peak = cell_mass
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let keep = |i: usize| lv[i] == f64::INFINITY || cell_mass[i] >= peak - LN_RANGE;
        let first = (0..xs.len()).find(|&i| keep(i)).unwrap_or(im);
        let last = (0..xs.len()).rev().find(|&i| keep(i)).unwrap_or(im);
        let a = xs[first.saturating_sub(1)].min(m);
        let b = xs[(last + 1).min(xs.len() - 1)].max(m);
        if a == lo && f(a) == f64::INFINITY {
            // Singular endpoint: log-like spacing from the endpoint outward.
            breaks.retain(|x| *x > a && *x < b);
            return Ok(Frame {
                a,
                b,
                m: a,
                w: (b - a) * (-(LADDER_OCTAVES as f64)).exp2(),
                touch_lo: true,
                touch_hi: b == hi,
                breaks,
            });
        }
        if b == hi && f(b) == f64::INFINITY {
            breaks.retain(|x| *x > a && *x < b);
            return Ok(Frame {
                a,
                b,
                m: b,
                w: (b - a) * (-(LADDER_OCTAVES as f64)).exp2(),
                touch_lo: a == lo,
                touch_hi: true,
                breaks,
            });
        }
        let half = top - 0.5;
        let width = |end: f64| {
            if f(end) >= half || end == m {
                return (end - m).abs();
            }
            let (mut inside, mut outside) = (m, end);
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if f(mid) >= half {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            (inside - m).abs()
        };
        let (wl, wr) = (width(a), width(b));
        let w = [wl, wr].into_iter().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let w = if w.is_finite() { w } else { (b - a) * 1e-3 };
        breaks.retain(|x| *x > a && *x < b);
        Ok(Frame {
            a,
            b,
            m,
            w,
            touch_lo: a == lo,
            touch_hi: b == hi,
            breaks,
        })
    }

    /// Grid at refinement level `r`: `base << r` sinh-spaced points plus
    /// geometric ladders toward touched endpoints, with `40 + 20 r` octaves
    /// at `2^r` points per octave.
    fn points(&self, r: u32, base: usize) -> Vec<f64> {
        let n = (base.max(2)) << r;
        let ua = ((self.a - self.m) / self.w).asinh();
        let ub = ((self.b - self.m) / self.w).asinh();
        let mut xs: Vec<f64> = (0..n)
            .map(|i| self.m + self.w * (ua + (ub - ua) * i as f64 / (n - 1) as f64).sinh())
            .collect();
        let per = 1u32 << r;
        let steps = (LADDER_OCTAVES + 20 * r) * per;
        let span = self.b - self.a;
        for k in 1..=steps {
            let h = span * (-(k as f64) / per as f64).exp2();
            if self.touch_lo {
                xs.push(self.a + h);
            }
            if self.touch_hi {
                xs.push(self.b - h);
            }
        }
        xs.extend_from_slice(&self.breaks);
        xs.extend([self.a, self.b, self.m]);
        // Below the last rung the ladder alone resolves a touched endpoint;
        // stray points there would form cells spanning many octaves.
        let floor = span * (-((LADDER_OCTAVES + 20 * r) as f64)).exp2();
        let (lo_cut, hi_cut) = (
            if self.touch_lo { self.a + floor } else { self.a },
            if self.touch_hi { self.b - floor } else { self.b },
        );
        xs.retain(|x| *x == self.a || *x == self.b || (*x >= lo_cut && *x <= hi_cut));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if !(hi - lo > 1e-15 * (lo.abs() + hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Product values on a grid, scaled by `exp(-shift)`, with the log of the
/// trapezoid normalizer. Points where the product is infinite are dropped.
struct Evaluated {
    points: Vec<f64>,
    values: Vec<f64>,
    ln_norm: f64,
}

fn evaluate(dists: &[Distribution], xs: Vec<f64>) -> Result<Evaluated> {
    let lv = ln_values(dists, &xs);
    let singular_lo = lv.first() == Some(&f64::INFINITY);
    let singular_hi = lv.last() == Some(&f64::INFINITY);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let (points, lv): (Vec<f64>, Vec<f64>) = xs
        .into_iter()
        .zip(lv)
        .filter(|(_, l)| !l.is_nan() && *l != f64::INFINITY)
        .unzip();
    let shift = lv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() || points.len() < 2 {
        return Err(Error::Incompatible("the density product vanishes on the grid".into()));
    }
    let values: Vec<f64> = lv.iter().map(|l| (l - shift).exp()).collect();
    let mut z = trapezoid(&points, &values);
    let k = points.len();
    if singular_lo {
        z += power_law_end(points[0] - lo, points[1] - lo, values[0], values[1]);
    }
    if singular_hi {
        z += power_law_end(hi - points[k - 1], hi - points[k - 2], values[k - 1], values[k - 2]);
    }
    if !(z > 0.0) {
        return Err(Error::Incompatible("the density product vanishes on the grid".into()));
    }
    Ok(Evaluated {
        points,
        values,
        ln_norm: z.ln() + shift,
    })
}

/// Mass between a singular endpoint and the nearest grid point, fitting
/// `f(d) = c d^-p` through the two points nearest the endpoint (distances
/// `d0 < d1`). Zero unless the fit is integrable.
fn power_law_end(d0: f64, d1: f64, f0: f64, f1: f64) -> f64 {
    if !(f0 > f1 && f1 > 0.0 && d1 > d0 && d0 > 0.0) {
        return 0.0;
    }
    let p = (f0 / f1).ln() / (d1 / d0).ln();
    if p < 1.0 {
        f0 * d0 / (1.0 - p)
    } else {
        0.0
    }
}

fn finish(e: Evaluated) -> Result<ConflationResult> {
    if e.ln_norm < -745.0 {
        return Err(Error::NormalizerUnderflow { ln_norm: e.ln_norm });
    }
    let g = GridDensity::new(e.points, e.values)?.normalized();
    Ok(ConflationResult::new(
        ConflationForm::Grid(g),
        e.ln_norm.exp(),
        Engine::GridQuadrature,
    ))
}

pub(crate) fn grid_engine(dists: &[Distribution], opts: &GridOptions) -> Result<ConflationResult> {
    if let Some(d) = dists.iter().find(|d| d.is_discrete()) {
        return Err(Error::NotAbsolutelyContinuous(format!(
            "{} input to the grid engine",
            d.family().name()
        )));
    }
    let all: Vec<&Distribution> = dists.iter().collect();
    let (lo, hi) = hull_intersection(&all);
    if !(lo < hi) {
        return Err(Error::Incompatible(format!(
            "supports do not overlap (common hull [{lo}, {hi}])"
        )));
    }
    if let Some(points) = &opts.points {
        if points.len() < 2 || points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid points must be finite and strictly increasing".into(),
            ));
        }
        return finish(evaluate(dists, points.clone())?);
    }

    let frame = Frame::scan(dists, lo, hi)?;
    // The raw trapezoid normalizers decide both divergence and convergence;
    // when successive changes shrink by about 4 (second-order error) the
    // remaining error is a third of the last change, and the reported
    // normalizer is Richardson-extrapolated.
    let mut raw: Vec<f64> = Vec::new();
    let mut jumps = 0;
    let mut change = f64::NAN;
    let mut prev_change = f64::NAN;
    let mut converged = false;
    let mut current = None;
    for r in 0..=opts.max_refinements {
        let e = evaluate(dists, frame.points(r, opts.base_points))?;
        if let Some(&p) = raw.last() {
            prev_change = change;
            change = (e.ln_norm - p).exp_m1();
            if change.abs() > DIVERGENCE_CHANGE {
                jumps += 1;
            }
        }
        raw.push(e.ln_norm);
        current = Some(e);
        if jumps >= 2 {
            return non_integrable(current.unwrap(), change.abs());
        }
        let ratio = prev_change / change;
        let error = if (2.5..=6.0).contains(&ratio) {
            change.abs() / 3.0
        } else {
            change.abs()
        };
        if error < opts.rel_tol {
            converged = true;
            break;
        }
    }
    let mut best = current.expect("at least one evaluation");
    let ratio = prev_change / change;
    if (2.5..=6.0).contains(&ratio) && 1.0 + change / 3.0 > 0.0 {
        best.ln_norm += (change / 3.0).ln_1p();
    }
    let mut result = finish(best)?;
    if !converged {
        result.warnings.push(format!(
            "{SLOW_CONVERGENCE}: normalizer still changed by {change:.3e} (relative) at the last refinement"
        ));
    }
    Ok(result)
}

/// The normalizer keeps growing under refinement: report where the mass
/// piles up (the median of the finest grid) as a point mass.
fn non_integrable(e: Evaluated, change: f64) -> Result<ConflationResult> {
    let g = GridDensity::new(e.points, e.values)?;
    let cum = g.cumulative();
    let x = g.quantile_with(&cum, 0.5);
    let pmf = DiscretePmf::new(vec![(x, 1.0)], 0.0)?;
    let mut result = ConflationResult::new(ConflationForm::Discrete(pmf), f64::INFINITY, Engine::GridQuadrature);
    result.warnings.push(format!(
        "{NON_INTEGRABLE_PRODUCT}: the normalizer grew by {change:.3e} (relative) under repeated refinement; \
         mass concentrates near x = {x:e}"
    ));
    result.concentration = Some(x);
    Ok(result)
}
