//! Input distributions: validation, evaluation, interval probabilities,
//! quantiles, moments and support.
//!
//! [`DistributionSpec`] is the plain serializable description;
//! [`Distribution`] is a validated spec with cached normalizers and tables.

pub mod grid;
mod spec;
pub mod special;

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature;
pub use grid::{trapezoid, GridDensity};
pub use spec::{DistributionSpec, Family};
use special::{hurwitz_zeta, ln_choose, ln_factorial, power_sum, zeta};

/// Largest number of atoms any enumeration will produce.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Tail mass left out when an infinite lattice must be enumerated.
pub const DEFAULT_TAIL_CUT: f64 = 1e-12;

/// Where a distribution puts its mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportDescriptor {
    /// Finitely many atoms, sorted ascending.
    Atoms { atoms: Vec<f64> },
    /// The integers `start..=end`; `end = None` means unbounded above.
    Lattice { start: i64, end: Option<i64> },
    /// An interval with extended-real endpoints.
    Interval {
        #[serde(with = "crate::json::ext_real")]
        lo: f64,
        #[serde(with = "crate::json::ext_real")]
        hi: f64,
    },
}

impl SupportDescriptor {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, SupportDescriptor::Interval { .. })
    }

    /// Smallest closed interval containing the support.
    pub fn hull(&self) -> (f64, f64) {
        match self {
            SupportDescriptor::Atoms { atoms } => (atoms[0], atoms[atoms.len() - 1]),
            SupportDescriptor::Lattice { start, end } => (*start as f64, end.map_or(f64::INFINITY, |e| e as f64)),
            SupportDescriptor::Interval { lo, hi } => (*lo, *hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            SupportDescriptor::Atoms { atoms } => atoms.binary_search_by(|a| a.total_cmp(&x)).is_ok(),
            SupportDescriptor::Lattice { start, end } => {
                x.fract() == 0.0 && x >= *start as f64 && end.is_none_or(|e| x <= e as f64)
            }
            SupportDescriptor::Interval { lo, hi } => x >= *lo && x <= *hi,
        }
    }
}

/// Parameter checks, pmf renormalization and grid normalization.
///
/// Returns the canonical validated spec: duplicate pmf atoms are merged,
/// zero masses dropped and the table renormalized when its total is within
/// 1e-9 of 1; grids are scaled to unit trapezoid mass; nested truncations are
/// flattened into one window.
pub fn validate(spec: &DistributionSpec) -> Result<DistributionSpec> {
    Distribution::new(spec.clone()).map(|d| d.spec)
}

#[derive(Clone, Debug)]
struct Table {
    xs: Vec<f64>,
    ps: Vec<f64>,
    // cum[i] = P(X <= xs[i]), suf[i] = P(X >= xs[i])
    cum: Vec<f64>,
    suf: Vec<f64>,
}

impl Table {
    fn new(xs: Vec<f64>, ps: Vec<f64>) -> Table {
        let mut cum = Vec::with_capacity(ps.len());
        let mut acc = 0.0;
        for p in &ps {
            acc += p;
            cum.push(acc.min(1.0));
        }
        let mut suf = vec![0.0; ps.len()];
        let mut acc = 0.0;
        for i in (0..ps.len()).rev() {
            acc += ps[i];
            suf[i] = acc.min(1.0);
        }
        Table { xs, ps, cum, suf }
    }

    fn index(&self, x: f64) -> std::result::Result<usize, usize> {
        self.xs.binary_search_by(|a| a.total_cmp(&x))
    }

    fn mass(&self, x: f64) -> f64 {
        self.index(x).map_or(0.0, |i| self.ps[i])
    }

    /// Number of atoms `<= x`.
    fn count_le(&self, x: f64) -> usize {
        self.xs.partition_point(|a| *a <= x)
    }

    fn prefix(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.cum[n - 1]
        }
    }

    fn suffix(&self, n: usize) -> f64 {
        if n >= self.ps.len() {
            0.0
        } else {
            self.suf[n]
        }
    }

    /// Mass of atoms with index in `i..j`.
    fn range(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            return 0.0;
        }
        if j - i <= 64 {
            return self.ps[i..j].iter().sum();
        }
        if self.prefix(i) < 0.5 {
            (self.prefix(j) - self.prefix(i)).max(0.0)
        } else {
            (self.suffix(i) - self.suffix(j)).max(0.0)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cum.partition_point(|c| *c < p);
        self.xs[i.min(self.xs.len() - 1)]
    }

    fn isf(&self, q: f64) -> f64 {
        // smallest x with P(X > x) <= q
        let (mut lo, mut hi) = (0usize, self.xs.len() - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.suffix(mid + 1) > q {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        self.xs[lo]
    }

    fn moments(&self) -> (f64, f64) {
        let mean: f64 = self.xs.iter().zip(&self.ps).map(|(x, p)| x * p).sum();
        let var: f64 = self
            .xs
            .iter()
            .zip(&self.ps)
            .map(|(x, p)| (x - mean) * (x - mean) * p)
            .sum();
        (mean, var)
    }
}

#[derive(Clone, Debug)]
enum Cache {
    Plain,
    LnNorm(f64),
    Table(Table),
    Grid(GridDensity, Vec<f64>),
    Truncated {
        inner: Box<Distribution>,
        lo: f64,
        hi: f64,
        mass: f64,
    },
}

/// A validated distribution.
///
/// Discrete kinds evaluate to their pmf, absolutely continuous kinds to their
/// density. Truncation windows are closed intervals `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct Distribution {
    spec: DistributionSpec,
    cache: Cache,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn check(ok: bool, family: &'static str, detail: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(family, detail))
    }
}

fn pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn floor_i64(x: f64) -> i64 {
    x.floor() as i64
}

/// `floor` of the largest integer strictly below `x`.
fn below_i64(x: f64) -> i64 {
    (x.ceil() as i64).saturating_sub(1)
}

fn validate_pmf(atoms: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    for &(x, m) in atoms {
        if !x.is_finite() {
            return Err(Error::param("pmf", "atom locations must be finite"));
        }
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::param("pmf", "masses must be finite and nonnegative"));
        }
    }
    let mut v: Vec<(f64, f64)> = atoms
        .iter()
        .map(|&(x, m)| (if x == 0.0 { 0.0 } else { x }, m))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (x, m) in v {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += m,
            _ => merged.push((x, m)),
        }
    }
    merged.retain(|a| a.1 > 0.0);
    let sum: f64 = merged.iter().map(|a| a.1).sum();
    if merged.is_empty() || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalizable { sum });
    }
    if sum != 1.0 {
        for a in &mut merged {
            a.1 /= sum;
        }
    }
    Ok(merged)
}

fn cmp_table(lambda: f64, nu: u32) -> Result<Table> {
    let ln_l = lambda.ln();
    let nu = nu as f64;
    let ln_term = |k: u64| k as f64 * ln_l - nu * ln_factorial(k);
    // Terms rise until the mode near lambda^(1/nu), then fall super-geometrically.
    let mode = lambda.powf(1.0 / nu).floor() as u64;
    let peak = ln_term(mode).max(ln_term(mode + 1));
    let mut lns = Vec::new();
    let mut k = 0u64;
    loop {
        let t = ln_term(k);
        if k > mode && t - peak < -750.0 {
            break;
        }
        lns.push(t);
        k += 1;
        if k > MAX_ENUMERATION {
            return Err(Error::param("cmp", "too many atoms to tabulate"));
        }
    }
    let ln_z = special::log_sum_exp(&lns);
    let (xs, ps): (Vec<f64>, Vec<f64>) = lns
        .iter()
        .enumerate()
        .map(|(k, t)| (k as f64, (t - ln_z).exp()))
        .filter(|(_, p)| *p > 0.0)
        .unzip();
    Ok(Table::new(xs, ps))
}

impl Distribution {
    /// Validates `spec` and precomputes what evaluation needs.
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        use DistributionSpec as S;
        let cache = match &spec {
            S::Normal { mu, sigma2 } => {
                check(mu.is_finite(), "normal", "mu must be finite")?;
                check(pos(*sigma2), "normal", "sigma2 must be positive")?;
                Cache::Plain
            }
            S::Exponential { mean } => {
                check(pos(*mean), "exponential", "mean must be positive")?;
                Cache::Plain
            }
            S::Gamma { alpha, beta } => {
                check(pos(*alpha) && pos(*beta), "gamma", "alpha and beta must be positive")?;
                Cache::LnNorm(ln_gamma(*alpha) + alpha * beta.ln())
            }
            S::Beta { alpha, beta } => {
                check(pos(*alpha) && pos(*beta), "beta", "alpha and beta must be positive")?;
                Cache::LnNorm(ln_beta(*alpha, *beta))
            }
            S::Uniform { a, b } => {
                check(a.is_finite() && b.is_finite() && a < b, "uniform", "need finite a < b")?;
                Cache::Plain
            }
            S::Laplace { scale } => {
                check(pos(*scale), "laplace", "scale must be positive")?;
                Cache::Plain
            }
            S::Pareto { alpha, beta } => {
                check(pos(*alpha) && pos(*beta), "pareto", "alpha and beta must be positive")?;
                Cache::Plain
            }
            S::Cauchy { loc, scale } => {
                check(loc.is_finite(), "cauchy", "loc must be finite")?;
                check(pos(*scale), "cauchy", "scale must be positive")?;
                Cache::Plain
            }
            S::ChiSquare { k } => {
                check(*k >= 1, "chi_square", "k must be a positive integer")?;
                let a = *k as f64 / 2.0;
                Cache::LnNorm(ln_gamma(a) + a * 2f64.ln())
            }
            S::Bernoulli { p } => {
                check(prob(*p), "bernoulli", "p must lie in [0, 1]")?;
                Cache::Plain
            }
            S::Geometric { p } => {
                check(*p > 0.0 && *p <= 1.0, "geometric", "p must lie in (0, 1]")?;
                Cache::Plain
            }
            S::DiscreteUniform { n } => {
                check(*n >= 1, "discrete_uniform", "n must be a positive integer")?;
                Cache::Plain
            }
            S::Zipf { alpha, n } => {
                check(pos(*alpha), "zipf", "alpha must be positive")?;
                check(*n >= 1, "zipf", "n must be a positive integer")?;
                Cache::LnNorm(power_sum(*alpha, 1, *n).ln())
            }
            S::Zeta { alpha } => {
                check(
                    alpha.is_finite() && *alpha > 1.0,
                    "zeta",
                    "alpha must exceed 1 (the series diverges otherwise)",
                )?;
                Cache::LnNorm(zeta(*alpha).ln())
            }
            S::Poisson { lambda } => {
                check(pos(*lambda), "poisson", "lambda must be positive")?;
                Cache::Plain
            }
            S::Cmp { lambda, nu } => {
                check(pos(*lambda), "cmp", "lambda must be positive")?;
                check(*nu >= 1, "cmp", "nu must be a positive integer")?;
                Cache::Table(cmp_table(*lambda, *nu)?)
            }
            S::Binomial { n, p } => {
                check(*n >= 1, "binomial", "n must be a positive integer")?;
                check(prob(*p), "binomial", "p must lie in [0, 1]")?;
                Cache::Plain
            }
            S::PmfTable { atoms } => {
                let atoms = validate_pmf(atoms)?;
                let (xs, ps) = atoms.iter().copied().unzip();
                let cache = Cache::Table(Table::new(xs, ps));
                return Ok(Distribution {
                    spec: S::PmfTable { atoms },
                    cache,
                });
            }
            S::Grid(g) => {
                let g = g.normalized();
                let cum = g.cumulative();
                return Ok(Distribution {
                    spec: S::Grid(g.clone()),
                    cache: Cache::Grid(g, cum),
                });
            }
            S::Truncated { inner, lo, hi } => {
                let (mut inner, mut lo, mut hi) = ((**inner).clone(), *lo, *hi);
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(Error::param("truncated", format!("window [{lo}, {hi}] is empty")));
                }
                while let S::Truncated {
                    inner: i2,
                    lo: l2,
                    hi: h2,
                } = inner
                {
                    lo = lo.max(l2);
                    hi = hi.min(h2);
                    inner = *i2;
                }
                if lo > hi || (lo == hi && !inner.is_discrete()) {
                    return Err(Error::param("truncated", "nested windows do not overlap"));
                }
                let inner = Distribution::new(inner)?;
                let mass = inner.prob_closed(lo, hi);
                if !(mass > 0.0) {
                    return Err(Error::param(
                        "truncated",
                        format!("window [{lo}, {hi}] has zero probability under the inner distribution"),
                    ));
                }
                return Ok(Distribution {
                    spec: S::Truncated {
                        inner: Box::new(inner.spec.clone()),
                        lo,
                        hi,
                    },
                    cache: Cache::Truncated {
                        inner: Box::new(inner),
                        lo,
                        hi,
                        mass,
                    },
                });
            }
        };
        Ok(Distribution { spec, cache })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn into_spec(self) -> DistributionSpec {
        self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn is_discrete(&self) -> bool {
        self.spec.is_discrete()
    }

    fn ln_norm(&self) -> f64 {
        match self.cache {
            Cache::LnNorm(z) => z,
            _ => 0.0,
        }
    }

    // ----- lattice primitives (integer-valued families) -----

    /// `(start, end)` of the integer range holding the mass of a lattice family.
    fn lattice(&self) -> Option<(i64, Option<i64>)> {
        use DistributionSpec as S;
        Some(match self.spec {
            S::Bernoulli { p } => (if p == 1.0 { 1 } else { 0 }, Some(if p == 0.0 { 0 } else { 1 })),
            S::Geometric { p } => (1, if p == 1.0 { Some(1) } else { None }),
            S::DiscreteUniform { n } => (1, Some(n as i64)),
            S::Zipf { n, .. } => (1, Some(n as i64)),
            S::Zeta { .. } => (1, None),
            S::Poisson { .. } => (0, None),
            S::Binomial { n, p } => (
                if p == 1.0 { n as i64 } else { 0 },
                Some(if p == 0.0 { 0 } else { n as i64 }),
            ),
            _ => return None,
        })
    }

    fn lattice_pmf(&self, k: i64) -> f64 {
        use DistributionSpec as S;
        let (start, end) = self.lattice().expect("lattice family");
        if k < start || end.is_some_and(|e| k > e) {
            return 0.0;
        }
        match self.spec {
            S::Bernoulli { p } => {
                if k == 1 {
                    p
                } else {
                    1.0 - p
                }
            }
            S::DiscreteUniform { n } => 1.0 / n as f64,
            S::Geometric { p } => {
                if p == 1.0 {
                    1.0
                } else if k - 1 <= i32::MAX as i64 {
                    p * (1.0 - p).powi((k - 1) as i32)
                } else {
                    (p.ln() + (k - 1) as f64 * (-p).ln_1p()).exp()
                }
            }
            _ => self.lattice_ln_pmf(k).exp(),
        }
    }

    fn lattice_ln_pmf(&self, k: i64) -> f64 {
        use DistributionSpec as S;
        let (start, end) = self.lattice().expect("lattice family");
        if k < start || end.is_some_and(|e| k > e) {
            return f64::NEG_INFINITY;
        }
        let kf = k as f64;
        match self.spec {
            S::Zipf { alpha, .. } | S::Zeta { alpha } => -alpha * kf.ln() - self.ln_norm(),
            S::Poisson { lambda } => kf * lambda.ln() - lambda - ln_factorial(k as u64),
            S::Binomial { n, p } => {
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    ln_choose(n, k as u64) + kf * p.ln() + (n as f64 - kf) * (-p).ln_1p()
                }
            }
            _ => self.lattice_pmf(k).ln(),
        }
    }

    /// `P(X <= k)` for a lattice family.
    fn lattice_cdf(&self, k: i64) -> f64 {
        use DistributionSpec as S;
        let (start, end) = self.lattice().expect("lattice family");
        if k < start {
            return 0.0;
        }
        if end.is_some_and(|e| k >= e) {
            return 1.0;
        }
        if k - start < 64 {
            return (start..=k).map(|i| self.lattice_pmf(i)).sum::<f64>().min(1.0);
        }
        match self.spec {
            S::Geometric { p } => -(k as f64 * (-p).ln_1p()).exp_m1(),
            S::DiscreteUniform { n } => k as f64 / n as f64,
            S::Zipf { alpha, .. } | S::Zeta { alpha } => {
                (power_sum(alpha, 1, k as u64).ln() - self.ln_norm()).exp().min(1.0)
            }
            S::Poisson { lambda } => gamma_ur(k as f64 + 1.0, lambda),
            S::Binomial { n, p } => beta_reg((n as i64 - k) as f64, k as f64 + 1.0, 1.0 - p),
            _ => unreachable!("lattice family"),
        }
    }

    /// `P(X > k)` for a lattice family.
    fn lattice_sf(&self, k: i64) -> f64 {
        use DistributionSpec as S;
        let (start, end) = self.lattice().expect("lattice family");
        if k < start {
            return 1.0;
        }
        if end.is_some_and(|e| k >= e) {
            return 0.0;
        }
        if let Some(e) = end {
            if e - k <= 64 {
                return (k + 1..=e).map(|i| self.lattice_pmf(i)).sum::<f64>().min(1.0);
            }
        }
        match self.spec {
            S::Geometric { p } => (k as f64 * (-p).ln_1p()).exp(),
            S::DiscreteUniform { n } => (n as i64 - k) as f64 / n as f64,
            S::Zipf { alpha, n } => (power_sum(alpha, k as u64 + 1, n).ln() - self.ln_norm()).exp().min(1.0),
            S::Zeta { alpha } => (hurwitz_zeta(alpha, k as f64 + 1.0).ln() - self.ln_norm())
                .exp()
                .min(1.0),
            S::Poisson { lambda } => gamma_lr(k as f64 + 1.0, lambda),
            S::Binomial { n, p } => beta_reg(k as f64 + 1.0, (n as i64 - k) as f64, p),
            _ => unreachable!("lattice family"),
        }
    }

    /// Smallest lattice point `k` with `P(X > k) <= q`.
    fn lattice_isf(&self, q: f64) -> i64 {
        let (start, end) = self.lattice().expect("lattice family");
        if self.lattice_sf(start) <= q {
            return start;
        }
        let mut lo = start; // sf(lo) > q
        let mut step = 1i64;
        let mut hi = loop {
            let cand = lo.saturating_add(step);
            if let Some(e) = end {
                if cand >= e {
                    break e;
                }
            }
            if self.lattice_sf(cand) <= q || cand == i64::MAX {
                break cand;
            }
            lo = cand;
            step = step.saturating_mul(2);
        };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.lattice_sf(mid) <= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    // ----- evaluation -----

    /// `ln` of the pmf (discrete) or density (continuous) at `x`.
    pub fn ln_eval(&self, x: f64) -> f64 {
        use DistributionSpec as S;
        if x.is_nan() {
            return f64::NEG_INFINITY;
        }
        if self.lattice().is_some() {
            if x.fract() != 0.0 || x.abs() > 9.0e15 {
                return f64::NEG_INFINITY;
            }
            return self.lattice_ln_pmf(x as i64);
        }
        let xlogy = |a: f64, y: f64| if a == 0.0 { 0.0 } else { a * y.ln() };
        match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => {
                let z = x - mu;
                -z * z / (2.0 * sigma2) - 0.5 * (2.0 * PI * sigma2).ln()
            }
            (S::Exponential { mean }, _) => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -x / mean - mean.ln()
                }
            }
            (S::Gamma { alpha, beta }, _) => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    xlogy(alpha - 1.0, x) - x / beta - self.ln_norm()
                }
            }
            (S::ChiSquare { k }, _) => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    xlogy(*k as f64 / 2.0 - 1.0, x) - x / 2.0 - self.ln_norm()
                }
            }
            (S::Beta { alpha, beta }, _) => {
                if !(0.0..=1.0).contains(&x) {
                    f64::NEG_INFINITY
                } else {
                    xlogy(alpha - 1.0, x) + xlogy(beta - 1.0, 1.0 - x) - self.ln_norm()
                }
            }
            (S::Uniform { a, b }, _) => {
                if x < *a || x > *b {
                    f64::NEG_INFINITY
                } else {
                    -(b - a).ln()
                }
            }
            (S::Laplace { scale }, _) => -x.abs() / scale - (2.0 * scale).ln(),
            (S::Pareto { alpha, beta }, _) => {
                if x < *beta {
                    f64::NEG_INFINITY
                } else {
                    alpha.ln() + alpha * beta.ln() - (alpha + 1.0) * x.ln()
                }
            }
            (S::Cauchy { loc, scale }, _) => {
                let z = (x - loc) / scale;
                -(PI * scale).ln() - z.mul_add(z, 1.0).ln()
            }
            (_, Cache::Table(t)) => t.mass(if x == 0.0 { 0.0 } else { x }).ln(),
            (_, Cache::Grid(g, _)) => g.eval(x).ln(),
            (_, Cache::Truncated { inner, lo, hi, mass }) => {
                if x < *lo || x > *hi {
                    f64::NEG_INFINITY
                } else {
                    inner.ln_eval(x) - mass.ln()
                }
            }
            _ => unreachable!("every family has an evaluation rule"),
        }
    }

    /// Pmf (discrete) or density (continuous) at `x`; 0 outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        use DistributionSpec as S;
        if self.lattice().is_some() {
            if x.fract() != 0.0 || x.abs() > 9.0e15 {
                return 0.0;
            }
            return self.lattice_pmf(x as i64);
        }
        match (&self.spec, &self.cache) {
            (_, Cache::Table(t)) => t.mass(if x == 0.0 { 0.0 } else { x }),
            (_, Cache::Grid(g, _)) => g.eval(x),
            (S::Uniform { a, b }, _) => {
                if x < *a || x > *b {
                    0.0
                } else {
                    1.0 / (b - a)
                }
            }
            (_, Cache::Truncated { inner, lo, hi, mass }) => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    inner.eval(x) / mass
                }
            }
            _ => self.ln_eval(x).exp(),
        }
    }

    /// Point mass at `x` (always 0 for continuous kinds).
    pub fn atom_mass(&self, x: f64) -> f64 {
        if self.is_discrete() {
            self.eval(x)
        } else {
            0.0
        }
    }

    // ----- distribution functions -----

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        use DistributionSpec as S;
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if self.lattice().is_some() {
            return self.lattice_cdf(floor_i64(x));
        }
        match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => 0.5 * erfc(-(x - mu) / (SQRT_2 * sigma2.sqrt())),
            (S::Exponential { mean }, _) => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            (S::Gamma { alpha, beta }, _) => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*alpha, x / beta)
                }
            }
            (S::ChiSquare { k }, _) => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*k as f64 / 2.0, x / 2.0)
                }
            }
            (S::Beta { alpha, beta }, _) => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(*alpha, *beta, x)
                }
            }
            (S::Uniform { a, b }, _) => ((x - a) / (b - a)).clamp(0.0, 1.0),
            (S::Laplace { scale }, _) => {
                if x < 0.0 {
                    0.5 * (x / scale).exp()
                } else {
                    1.0 - 0.5 * (-x / scale).exp()
                }
            }
            (S::Pareto { alpha, beta }, _) => {
                if x <= *beta {
                    0.0
                } else {
                    -(alpha * (beta / x).ln()).exp_m1()
                }
            }
            (S::Cauchy { loc, scale }, _) => (1.0f64).atan2(-(x - loc) / scale) / PI,
            (_, Cache::Table(t)) => t.prefix(t.count_le(x)),
            (_, Cache::Grid(g, cum)) => g.cdf_with(cum, x),
            (_, Cache::Truncated { inner, lo, hi, mass }) => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (inner.prob_closed(*lo, x) / mass).clamp(0.0, 1.0)
                }
            }
            _ => unreachable!("every family has a cdf"),
        }
    }

    /// `P(X > x)`, computed without cancellation where a closed form exists.
    pub fn sf(&self, x: f64) -> f64 {
        use DistributionSpec as S;
        if x == f64::INFINITY {
            return 0.0;
        }
        if x == f64::NEG_INFINITY {
            return 1.0;
        }
        if self.lattice().is_some() {
            return self.lattice_sf(floor_i64(x));
        }
        match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => 0.5 * erfc((x - mu) / (SQRT_2 * sigma2.sqrt())),
            (S::Exponential { mean }, _) => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            (S::Gamma { alpha, beta }, _) => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*alpha, x / beta)
                }
            }
            (S::ChiSquare { k }, _) => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*k as f64 / 2.0, x / 2.0)
                }
            }
            (S::Beta { alpha, beta }, _) => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(*beta, *alpha, 1.0 - x)
                }
            }
            (S::Uniform { a, b }, _) => ((b - x) / (b - a)).clamp(0.0, 1.0),
            (S::Laplace { scale }, _) => {
                if x < 0.0 {
                    1.0 - 0.5 * (x / scale).exp()
                } else {
                    0.5 * (-x / scale).exp()
                }
            }
            (S::Pareto { alpha, beta }, _) => {
                if x <= *beta {
                    1.0
                } else {
                    (alpha * (beta / x).ln()).exp()
                }
            }
            (S::Cauchy { loc, scale }, _) => (1.0f64).atan2((x - loc) / scale) / PI,
            (_, Cache::Table(t)) => t.suffix(t.count_le(x)),
            (_, Cache::Grid(g, cum)) => 1.0 - g.cdf_with(cum, x),
            (_, Cache::Truncated { inner, lo, hi, mass }) => {
                if x < *lo {
                    1.0
                } else if x >= *hi {
                    0.0
                } else {
                    (inner.interval_prob_unchecked(x, *hi) / mass).clamp(0.0, 1.0)
                }
            }
            _ => unreachable!("every family has a survival function"),
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if !self.is_discrete() {
            return self.cdf(x);
        }
        if self.lattice().is_some() {
            if x == f64::INFINITY {
                return 1.0;
            }
            if x == f64::NEG_INFINITY {
                return 0.0;
            }
            return self.lattice_cdf(below_i64(x));
        }
        (self.cdf(x) - self.atom_mass(x)).max(0.0)
    }

    /// `P(X >= x)`.
    pub fn sf_left(&self, x: f64) -> f64 {
        if !self.is_discrete() {
            return self.sf(x);
        }
        if self.lattice().is_some() {
            if x == f64::INFINITY {
                return 0.0;
            }
            if x == f64::NEG_INFINITY {
                return 1.0;
            }
            return self.lattice_sf(below_i64(x));
        }
        (self.sf(x) + self.atom_mass(x)).min(1.0)
    }

    /// `P((a, b])`. Errors unless `a < b`.
    pub fn interval_prob(&self, a: f64, b: f64) -> Result<f64> {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        Ok(self.interval_prob_unchecked(a, b))
    }

    /// `P((a, b])` assuming `a < b`; 0 for an empty interval.
    pub(crate) fn interval_prob_unchecked(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        if self.lattice().is_some() {
            let (start, end) = self.lattice().unwrap();
            let k0 = if a == f64::NEG_INFINITY {
                start
            } else {
                (floor_i64(a) + 1).max(start)
            };
            let k1 = if b == f64::INFINITY { i64::MAX } else { floor_i64(b) };
            let k1 = end.map_or(k1, |e| k1.min(e));
            if k1 < k0 {
                return 0.0;
            }
            if k1 - k0 < 64 {
                return (k0..=k1).map(|k| self.lattice_pmf(k)).sum::<f64>().min(1.0);
            }
        }
        match &self.cache {
            Cache::Table(t) => {
                let i = t.count_le(a);
                let j = t.count_le(b);
                return t.range(i, j).min(1.0);
            }
            Cache::Truncated { inner, lo, hi, mass } => {
                let a2 = a.max(*lo);
                let b2 = b.min(*hi);
                if a < *lo {
                    // include the left window edge itself
                    return (inner.prob_closed(*lo, b2) / mass).clamp(0.0, 1.0);
                }
                return (inner.interval_prob_unchecked(a2, b2) / mass).clamp(0.0, 1.0);
            }
            _ => {}
        }
        let ca = self.cdf(a);
        let p = if ca <= 0.5 {
            self.cdf(b) - ca
        } else {
            self.sf(a) - self.sf(b)
        };
        p.clamp(0.0, 1.0)
    }

    /// `P([a, b))`.
    pub fn interval_prob_left_closed(&self, a: f64, b: f64) -> Result<f64> {
        let p = self.interval_prob(a, b)?;
        Ok((p + self.atom_mass(a) - self.atom_mass(b)).clamp(0.0, 1.0))
    }

    /// `P([a, b])`, with `a <= b`.
    pub(crate) fn prob_closed(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return 0.0;
        }
        let at = if a.is_finite() { self.atom_mass(a) } else { 0.0 };
        (self.interval_prob_unchecked(a, b) + at).min(1.0)
    }

    // ----- support -----

    /// Tight description of the support.
    pub fn support(&self) -> SupportDescriptor {
        use DistributionSpec as S;
        use SupportDescriptor as D;
        let iv = |lo: f64, hi: f64| D::Interval { lo, hi };
        let inf = f64::INFINITY;
        if let Some((start, end)) = self.lattice() {
            if let S::Bernoulli { .. } = self.spec {
                return D::Atoms {
                    atoms: (start..=end.unwrap()).map(|k| k as f64).collect(),
                };
            }
            return D::Lattice { start, end };
        }
        match (&self.spec, &self.cache) {
            (S::Normal { .. } | S::Laplace { .. } | S::Cauchy { .. }, _) => iv(-inf, inf),
            (S::Exponential { .. } | S::Gamma { .. } | S::ChiSquare { .. }, _) => iv(0.0, inf),
            (S::Beta { .. }, _) => iv(0.0, 1.0),
            (S::Uniform { a, b }, _) => iv(*a, *b),
            (S::Pareto { beta, .. }, _) => iv(*beta, inf),
            (S::Cmp { .. }, _) => D::Lattice { start: 0, end: None },
            (_, Cache::Table(t)) => D::Atoms { atoms: t.xs.clone() },
            (_, Cache::Grid(g, _)) => {
                let v = g.values();
                let p = g.points();
                let first = v.iter().position(|y| *y > 0.0).unwrap();
                let last = v.iter().rposition(|y| *y > 0.0).unwrap();
                iv(p[first.saturating_sub(1)], p[(last + 1).min(p.len() - 1)])
            }
            (_, Cache::Truncated { inner, lo, hi, .. }) => match inner.support() {
                D::Interval { lo: a, hi: b } => iv(a.max(*lo), b.min(*hi)),
                D::Atoms { atoms } => D::Atoms {
                    atoms: atoms.into_iter().filter(|x| x >= lo && x <= hi).collect(),
                },
                D::Lattice { start, end } => {
                    let s = start.max(lo.ceil().max(-9.0e15) as i64);
                    let e = if hi.is_finite() {
                        Some(end.map_or(hi.floor() as i64, |e| e.min(hi.floor() as i64)))
                    } else {
                        end
                    };
                    D::Lattice { start: s, end: e }
                }
            },
            _ => unreachable!("every family has a support"),
        }
    }

    // ----- quantiles -----

    /// Lower quantile `inf { x : P(X <= x) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        use DistributionSpec as S;
        let p = p.clamp(0.0, 1.0);
        if self.lattice().is_some() {
            let (start, _) = self.lattice().unwrap();
            if p <= 0.0 {
                return start as f64;
            }
            return self.lattice_isf_from_cdf(p) as f64;
        }
        match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => mu - SQRT_2 * sigma2.sqrt() * erfc_inv(2.0 * p),
            (S::Exponential { mean }, _) => -mean * (-p).ln_1p(),
            (S::Uniform { a, b }, _) => a + p * (b - a),
            (S::Laplace { scale }, _) => {
                if p < 0.5 {
                    scale * (2.0 * p).ln()
                } else {
                    -scale * (2.0 * (1.0 - p)).ln()
                }
            }
            (S::Pareto { alpha, beta }, _) => beta * (1.0 - p).powf(-1.0 / alpha),
            (S::Cauchy { loc, scale }, _) => loc + scale * (PI * (p - 0.5)).tan(),
            (S::Beta { alpha, beta }, _) => inv_beta_reg(*alpha, *beta, p),
            (_, Cache::Table(t)) => t.quantile(p),
            (_, Cache::Grid(g, cum)) => g.quantile_with(cum, p),
            _ => self.bisect(p, |d, x| d.cdf(x), true),
        }
    }

    /// Upper quantile: smallest `x` with `P(X > x) <= q`.
    pub fn isf(&self, q: f64) -> f64 {
        use DistributionSpec as S;
        let q = q.clamp(0.0, 1.0);
        if self.lattice().is_some() {
            return self.lattice_isf(q) as f64;
        }
        match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => mu + SQRT_2 * sigma2.sqrt() * erfc_inv(2.0 * q),
            (S::Exponential { mean }, _) => -mean * q.ln(),
            (S::Pareto { alpha, beta }, _) => beta * q.powf(-1.0 / alpha),
            (S::Laplace { scale }, _) if q < 0.5 => -scale * (2.0 * q).ln(),
            (S::Cauchy { loc, scale }, _) if q < 0.5 => loc + scale / (PI * q).tan(),
            (_, Cache::Table(t)) => t.isf(q),
            (S::Uniform { .. } | S::Laplace { .. } | S::Cauchy { .. } | S::Beta { .. }, _) | (_, Cache::Grid(..)) => {
                self.quantile(1.0 - q)
            }
            _ => self.bisect(q, |d, x| d.sf(x), false),
        }
    }

    /// Smallest lattice `k` with `P(X <= k) >= p`.
    fn lattice_isf_from_cdf(&self, p: f64) -> i64 {
        let (start, end) = self.lattice().unwrap();
        if self.lattice_cdf(start) >= p {
            return start;
        }
        let mut lo = start;
        let mut step = 1i64;
        let mut hi = loop {
            let cand = lo.saturating_add(step);
            if let Some(e) = end {
                if cand >= e {
                    break e;
                }
            }
            if self.lattice_cdf(cand) >= p || cand == i64::MAX {
                break cand;
            }
            lo = cand;
            step = step.saturating_mul(2);
        };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.lattice_cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Bisection for continuous kinds. `increasing` selects whether `g`
    /// is a cdf (target reached from below) or a survival function.
    fn bisect(&self, target: f64, g: impl Fn(&Self, f64) -> f64, increasing: bool) -> f64 {
        let (slo, shi) = self.support().hull();
        let reached = |x: f64| {
            let v = g(self, x);
            if increasing {
                v >= target
            } else {
                v <= target
            }
        };
        let mut lo = if slo.is_finite() { slo } else { -1.0 };
        while !slo.is_finite() && reached(lo) {
            lo = 2.0 * lo - 1.0;
            if lo < -1e300 {
                return f64::NEG_INFINITY;
            }
        }
        let mut hi = if shi.is_finite() { shi } else { lo.abs().max(1.0) };
        while !shi.is_finite() && !reached(hi) {
            hi = 2.0 * hi + 1.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        if reached(lo) {
            return lo;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if reached(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    // ----- moments -----

    pub fn mean(&self) -> Result<f64> {
        self.moments().map(|m| m.0)
    }

    pub fn variance(&self) -> Result<f64> {
        self.moments().map(|m| m.1)
    }

    /// `(mean, variance)`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        use DistributionSpec as S;
        let diverge = |what: &str| {
            Err(Error::DivergentMoment(format!(
                "{} has no finite {what}",
                self.family().name()
            )))
        };
        Ok(match (&self.spec, &self.cache) {
            (S::Normal { mu, sigma2 }, _) => (*mu, *sigma2),
            (S::Exponential { mean }, _) => (*mean, mean * mean),
            (S::Gamma { alpha, beta }, _) => (alpha * beta, alpha * beta * beta),
            (S::ChiSquare { k }, _) => (*k as f64, 2.0 * *k as f64),
            (S::Beta { alpha, beta }, _) => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            (S::Uniform { a, b }, _) => (0.5 * (a + b), (b - a) * (b - a) / 12.0),
            (S::Laplace { scale }, _) => (0.0, 2.0 * scale * scale),
            (S::Pareto { alpha, beta }, _) => {
                if *alpha <= 1.0 {
                    return diverge("mean");
                }
                if *alpha <= 2.0 {
                    return diverge("variance");
                }
                let m = alpha * beta / (alpha - 1.0);
                (m, beta * beta * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0)))
            }
            (S::Cauchy { .. }, _) => return diverge("mean"),
            (S::Bernoulli { p }, _) => (*p, p * (1.0 - p)),
            (S::Geometric { p }, _) => (1.0 / p, (1.0 - p) / (p * p)),
            (S::DiscreteUniform { n }, _) => {
                let n = *n as f64;
                (0.5 * (n + 1.0), (n * n - 1.0) / 12.0)
            }
            (S::Zipf { alpha, n }, _) => {
                let h = self.ln_norm().exp();
                let m = power_sum(alpha - 1.0, 1, *n) / h;
                (m, (power_sum(alpha - 2.0, 1, *n) / h - m * m).max(0.0))
            }
            (S::Zeta { alpha }, _) => {
                if *alpha <= 2.0 {
                    return diverge("mean");
                }
                if *alpha <= 3.0 {
                    return diverge("variance");
                }
                let z = zeta(*alpha);
                let m = zeta(alpha - 1.0) / z;
                (m, zeta(alpha - 2.0) / z - m * m)
            }
            (S::Poisson { lambda }, _) => (*lambda, *lambda),
            (S::Binomial { n, p }, _) => (*n as f64 * p, *n as f64 * p * (1.0 - p)),
            (_, Cache::Table(t)) => t.moments(),
            (_, Cache::Grid(g, _)) => g.moments(),
            (_, Cache::Truncated { inner, lo, hi, .. }) => {
                if self.is_discrete() {
                    let (atoms, _) = self.atoms(1e-16)?;
                    let m: f64 = atoms.iter().map(|(x, p)| x * p).sum();
                    let v: f64 = atoms.iter().map(|(x, p)| (x - m) * (x - m) * p).sum();
                    let s: f64 = atoms.iter().map(|a| a.1).sum();
                    (m / s, v / s)
                } else {
                    if (!lo.is_finite() || !hi.is_finite()) && inner.moments().is_err() {
                        return diverge("mean");
                    }
                    let (a, b) = self.support().hull();
                    let c = self.median();
                    let q =
                        |f: &dyn Fn(f64) -> f64| quadrature::integrate_with_breaks(f, a, b, &[c], 1e-14, 1e-13).value;
                    let m = q(&|x| x * self.eval(x));
                    let v = q(&|x| (x - m) * (x - m) * self.eval(x));
                    (m, v)
                }
            }
            _ => unreachable!("every family has moments or an error"),
        })
    }

    // ----- atom enumeration -----

    /// Number of atoms an enumeration down to tail mass `tail_cut` visits,
    /// or `None` for continuous kinds.
    pub fn enumeration_size(&self, tail_cut: f64) -> Option<u64> {
        if !self.is_discrete() {
            return None;
        }
        match self.support() {
            SupportDescriptor::Atoms { atoms } => Some(atoms.len() as u64),
            SupportDescriptor::Lattice { start, end } => {
                let top = match (&self.cache, end) {
                    (Cache::Table(t), _) => *t.xs.last().unwrap() as i64,
                    (_, Some(e)) if e.saturating_sub(start) < MAX_ENUMERATION as i64 => e,
                    _ => self.isf(tail_cut).min(9.0e15) as i64,
                };
                let top = end.map_or(top, |e| top.min(e));
                Some((top.saturating_sub(start).max(-1) + 1) as u64)
            }
            SupportDescriptor::Interval { .. } => None,
        }
    }

    /// All atoms in increasing order with their masses, stopping once the
    /// remaining mass is at most `tail_cut`. Returns the atoms and that
    /// remaining mass.
    pub fn atoms(&self, tail_cut: f64) -> Result<(Vec<(f64, f64)>, f64)> {
        if !self.is_discrete() {
            return Err(Error::InvalidArgument(format!(
                "{} is not discrete and has no atoms",
                self.family().name()
            )));
        }
        match self.support() {
            SupportDescriptor::Atoms { atoms } => {
                let v = atoms.iter().map(|&x| (x, self.eval(x))).filter(|a| a.1 > 0.0).collect();
                Ok((v, 0.0))
            }
            SupportDescriptor::Lattice { start, end } => {
                let count = self.enumeration_size(tail_cut).unwrap();
                if count > MAX_ENUMERATION {
                    return Err(Error::TooManyAtoms {
                        count: count as usize,
                        limit: MAX_ENUMERATION as usize,
                    });
                }
                let top = start + count as i64 - 1;
                let v: Vec<(f64, f64)> = (start..=top)
                    .map(|k| (k as f64, self.eval(k as f64)))
                    .filter(|a| a.1 > 0.0)
                    .collect();
                let tail = if end.is_some_and(|e| top >= e) {
                    0.0
                } else {
                    self.sf(top as f64)
                };
                Ok((v, tail))
            }
            SupportDescriptor::Interval { .. } => unreachable!(),
        }
    }

    /// Atoms in the closed window `[lo, hi]` with positive mass.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        if !self.is_discrete() {
            return Err(Error::InvalidArgument(format!(
                "{} is not discrete and has no atoms",
                self.family().name()
            )));
        }
        match self.support() {
            SupportDescriptor::Atoms { atoms } => Ok(atoms
                .into_iter()
                .filter(|x| *x >= lo && *x <= hi)
                .map(|x| (x, self.eval(x)))
                .filter(|a| a.1 > 0.0)
                .collect()),
            SupportDescriptor::Lattice { start, end } => {
                let mut top = if hi.is_finite() {
                    hi.floor().min(9.0e15) as i64
                } else {
                    i64::MAX
                };
                if let Some(e) = end {
                    top = top.min(e);
                }
                if let Cache::Table(t) = &self.cache {
                    top = top.min(*t.xs.last().unwrap() as i64);
                }
                let bottom = if lo.is_finite() {
                    (lo.ceil().max(-9.0e15) as i64).max(start)
                } else {
                    start
                };
                if top < bottom {
                    return Ok(Vec::new());
                }
                let count = (top - bottom) as u64 + 1;
                if count > MAX_ENUMERATION {
                    return Err(Error::TooManyAtoms {
                        count: count.min(usize::MAX as u64) as usize,
                        limit: MAX_ENUMERATION as usize,
                    });
                }
                Ok((bottom..=top)
                    .map(|k| (k as f64, self.eval(k as f64)))
                    .filter(|a| a.1 > 0.0)
                    .collect())
            }
            SupportDescriptor::Interval { .. } => unreachable!(),
        }
    }

    /// The validated inner distribution and window of a truncation.
    pub fn truncation(&self) -> Option<(&Distribution, f64, f64)> {
        match &self.cache {
            Cache::Truncated { inner, lo, hi, .. } => Some((inner, *lo, *hi)),
            _ => None,
        }
    }
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        Distribution::new(spec)
    }
}
