//! Optimality diagnostics for candidate consolidations.
//!
//! Shannon-information loss against the product of the inputs, the spread of
//! the likelihood ratio candidate / product (with `0/0 := 1`), pairwise
//! proportionality to the product, and a numerical check that the
//! characteristic function of the conflation is the normalized convolution
//! of the inputs' characteristic functions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflation::{conflate, conflate_discrete};
use crate::distributions::{Distribution, DistributionSpec, GridDensity, SupportDescriptor};
use crate::dyadic::{default_window, DyadicConvention, WINDOW_TAIL};
use crate::error::{Error, Result};
use crate::quadrature::integrate_with_breaks;

/// Largest number of candidate atoms searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;
/// Dyadic level of the cells searched for continuous inputs.
pub const CONTINUOUS_SEARCH_LEVEL: u32 = 8;
/// Products below this are treated as underflow, not as zero.
const UNDERFLOW: f64 = 1e-300;
const TAIL_CUT: f64 = 1e-15;

/// Half-open interval `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::json::ext_real")]
    pub lo: f64,
    #[serde(with = "crate::json::ext_real")]
    pub hi: f64,
}

/// An event: a finite set of points or a finite union of disjoint intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSet {
    AtomUnion { atoms: Vec<f64> },
    IntervalUnion { intervals: Vec<Interval> },
}

impl EventSet {
    /// Sorted distinct atoms.
    pub fn atoms(atoms: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut atoms: Vec<f64> = atoms.into_iter().collect();
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("event atoms must be finite".into()));
        }
        atoms.sort_by(f64::total_cmp);
        if atoms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("event atoms must be distinct".into()));
        }
        Ok(EventSet::AtomUnion { atoms })
    }

    /// Sorted nonempty disjoint intervals `(lo, hi]`.
    pub fn intervals(intervals: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<Interval> = intervals.into_iter().map(|(lo, hi)| Interval { lo, hi }).collect();
        if v.iter().any(|i| !(i.lo < i.hi)) {
            return Err(Error::InvalidArgument("event intervals must be nonempty".into()));
        }
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if v.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::InvalidArgument("event intervals must be disjoint".into()));
        }
        Ok(EventSet::IntervalUnion { intervals: v })
    }

    pub fn whole_line() -> Self {
        EventSet::IntervalUnion {
            intervals: vec![Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }],
        }
    }

    pub fn prob(&self, d: &Distribution) -> f64 {
        let p: f64 = match self {
            EventSet::AtomUnion { atoms } => atoms.iter().map(|&x| d.atom_mass(x)).sum(),
            EventSet::IntervalUnion { intervals } => {
                intervals.iter().map(|i| d.interval_prob_unchecked(i.lo, i.hi)).sum()
            }
        };
        p.min(1.0)
    }
}

fn dists_of(specs: &[DistributionSpec]) -> Result<Vec<Distribution>> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    specs.iter().cloned().map(Distribution::new).collect()
}

/// `prod_i P_i(A)` with factors multiplied in ascending order.
fn product_prob(dists: &[Distribution], event: &EventSet) -> f64 {
    let mut ps: Vec<f64> = dists.iter().map(|d| event.prob(d)).collect();
    ps.sort_by(f64::total_cmp);
    ps.into_iter().product()
}

/// `-log2 prod_i P_i(A)`; infinite when the product vanishes.
pub fn joint_information(specs: &[DistributionSpec], event: &EventSet) -> Result<f64> {
    let dists = dists_of(specs)?;
    Ok(-product_prob(&dists, event).log2())
}

fn loss(q_a: f64, p_a: f64) -> f64 {
    if q_a == 0.0 && p_a == 0.0 {
        0.0
    } else {
        q_a.log2() - p_a.log2()
    }
}

/// Joint information of the inputs minus the information of `q` on `A`:
/// `log2(Q(A) / prod_i P_i(A))`, and 0 when both probabilities are 0.
pub fn information_loss(q: &DistributionSpec, specs: &[DistributionSpec], event: &EventSet) -> Result<f64> {
    let dists = dists_of(specs)?;
    let q = Distribution::new(q.clone())?;
    Ok(loss(event.prob(&q), product_prob(&dists, event)))
}

/// Result of the maximal information-loss search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationReport {
    /// `log2(1 / ||mu||)`, the smallest achievable maximal loss.
    #[serde(with = "crate::json::ext_real")]
    pub bound: f64,
    #[serde(with = "crate::json::ext_real")]
    pub max_loss: f64,
    /// Lexicographically smallest event attaining `max_loss`.
    pub witness: EventSet,
    pub attains_bound: bool,
    /// The event family that was searched.
    pub searched: String,
}

fn same_kind(q: &Distribution, dists: &[Distribution]) -> Result<bool> {
    let discrete = q.is_discrete();
    if dists.iter().any(|d| d.is_discrete() != discrete) {
        return Err(Error::MixedKinds(
            "candidate and inputs must be all discrete or all continuous".into(),
        ));
    }
    Ok(discrete)
}

fn candidate_atoms(q: &Distribution) -> Result<Vec<(f64, f64)>> {
    let (atoms, _) = q.atoms(TAIL_CUT)?;
    Ok(atoms)
}

/// Maximal information loss of `q` over events.
///
/// Discrete inputs: every subset of the candidate's atoms (events outside
/// them can only lower the loss), at most [`EXHAUSTIVE_LIMIT`] atoms.
/// Continuous inputs: single dyadic cells of levels 0 to 8, with the bound
/// taken from the level-8 product measure.
pub fn max_information_loss(q: &DistributionSpec, specs: &[DistributionSpec]) -> Result<InformationReport> {
    let dists = dists_of(specs)?;
    let qd = Distribution::new(q.clone())?;
    if same_kind(&qd, &dists)? {
        discrete_max_loss(&qd, &dists, specs)
    } else {
        continuous_max_loss(&qd, &dists)
    }
}

fn near(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9
}

fn discrete_max_loss(
    q: &Distribution,
    dists: &[Distribution],
    specs: &[DistributionSpec],
) -> Result<InformationReport> {
    let norm = match conflate_discrete(specs) {
        Ok(r) => r.norm_constant,
        Err(Error::ConflationUndefined(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let bound = -norm.log2();
    let atoms = candidate_atoms(q)?;
    if atoms.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManyAtoms {
            count: atoms.len(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let m = atoms.len();
    let qs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let ps: Vec<Vec<f64>> = dists
        .iter()
        .map(|d| atoms.iter().map(|a| d.eval(a.0)).collect())
        .collect();
    let eval = |mask: u32| -> f64 {
        let bits = (0..m).filter(|i| mask >> i & 1 == 1);
        let q_a: f64 = bits.clone().map(|i| qs[i]).sum();
        let mut factors: Vec<f64> = ps.iter().map(|p| bits.clone().map(|i| p[i]).sum::<f64>()).collect();
        factors.sort_by(f64::total_cmp);
        loss(q_a, factors.into_iter().product())
    };
    let total = 1u32 << m;
    let losses: Vec<f64> = (0..total).into_par_iter().map(eval).collect();
    let max_loss = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let members = |mask: u32| -> Vec<f64> { (0..m).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i].0).collect() };
    let witness = (0..total)
        .filter(|&mask| near(losses[mask as usize], max_loss))
        .map(members)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap_or_default();
    Ok(InformationReport {
        bound,
        max_loss,
        witness: EventSet::AtomUnion { atoms: witness },
        attains_bound: near(max_loss, bound),
        searched: format!("all {total} subsets of the candidate's {m} atoms"),
    })
}

fn continuous_max_loss(q: &Distribution, dists: &[Distribution]) -> Result<InformationReport> {
    let top = CONTINUOUS_SEARCH_LEVEL;
    let (window, _) = default_window(dists, WINDOW_TAIL);
    let mu = crate::dyadic::mu_j_of(dists, top, window, DyadicConvention::RightClosed)?;
    let bound = -mu.total_mass.log2();
    let fine = (-(top as f64)).exp2();
    let (lo, hi) = ((mu.window.0 - 1) as f64 * fine, mu.window.1 as f64 * fine);
    let cells: Vec<(f64, f64)> = (0..=top)
        .flat_map(|j| {
            let s = (j as f64).exp2();
            let (k0, k1) = ((lo * s).floor() as i64 + 1, (hi * s).ceil() as i64);
            (k0..=k1).map(move |k| ((k - 1) as f64 / s, k as f64 / s))
        })
        .collect();
    let losses: Vec<f64> = cells
        .par_iter()
        .map(|&(a, b)| {
            let mut ps: Vec<f64> = dists.iter().map(|d| d.interval_prob_unchecked(a, b)).collect();
            ps.sort_by(f64::total_cmp);
            loss(q.interval_prob_unchecked(a, b), ps.into_iter().product())
        })
        .collect();
    let max_loss = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = cells
        .iter()
        .zip(&losses)
        .filter(|c| near(*c.1, max_loss))
        .map(|c| *c.0)
        .min_by(|x, y| x.partial_cmp(y).unwrap())
        .unwrap_or((lo, hi));
    Ok(InformationReport {
        bound,
        max_loss,
        witness: EventSet::IntervalUnion {
            intervals: vec![Interval { lo: a, hi: b }],
        },
        attains_bound: near(max_loss, bound),
        searched: format!(
            "single dyadic cells of levels 0 to {top} in [{lo}, {hi}] (a restriction of all Borel events)"
        ),
    })
}

/// Spread of the likelihood ratio `q / prod_i p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlrReport {
    #[serde(with = "crate::json::ext_real")]
    pub delta: f64,
    #[serde(with = "crate::json::ext_real")]
    pub max_ratio: f64,
    #[serde(with = "crate::json::ext_real")]
    pub min_ratio: f64,
    pub argmax_point: f64,
    pub argmin_point: f64,
}

/// Where the ratio is examined. Discrete: the candidate's atoms, the common
/// atoms and one point outside every support. Continuous: sinh-spaced scans
/// around every law, geometric ladders (down to ~1e-300) toward every finite
/// support endpoint, and points beyond all supports; a grid candidate is
/// examined on its own nodes inside its range.
fn ratio_points(q: &Distribution, dists: &[Distribution], discrete: bool) -> Result<Vec<f64>> {
    let mut xs = Vec::new();
    let mut top = f64::NEG_INFINITY;
    let mut bottom = f64::INFINITY;
    if discrete {
        for (x, _) in candidate_atoms(q)? {
            xs.push(x);
        }
        if let Ok(r) = conflate_discrete(&dists.iter().map(|d| d.spec().clone()).collect::<Vec<_>>()) {
            if let crate::conflation::ConflationForm::Discrete(p) = &r.form {
                xs.extend(p.atoms().iter().map(|a| a.0));
            }
        }
        top = xs.iter().copied().fold(top, f64::max);
        xs.push(if top.is_finite() { top + 0.5 } else { 0.5 });
    } else {
        if let DistributionSpec::Grid(g) = q.spec() {
            xs.extend_from_slice(g.points());
            return Ok(xs);
        }
        for d in dists.iter().chain(std::iter::once(q)) {
            let c = d.median();
            let s = d.quantile(0.75) - d.quantile(0.25);
            let s = if s.is_finite() && s > 0.0 {
                s
            } else {
                1e-6 * c.abs().max(1.0)
            };
            xs.extend((0..=2000).map(|i| c + s * (-30.0 + 60.0 * i as f64 / 2000.0).sinh()));
            let (lo, hi) = d.support().hull();
            for e in [lo, hi] {
                if e.is_finite() {
                    xs.push(e);
                    xs.extend((0..=996).step_by(4).flat_map(|k| {
                        let off = s * (-(k as f64)).exp2();
                        [e - off, e + off]
                    }));
                    top = top.max(e);
                    bottom = bottom.min(e);
                }
            }
        }
        if top.is_finite() {
            xs.push(top + 1.0);
        }
        if bottom.is_finite() {
            xs.push(bottom - 1.0);
        }
    }
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(xs)
}

enum Ratio {
    /// `ln(q / prod p)`; `-inf` when `q = 0` under a positive product.
    Ln(f64),
    /// `q > 0` where the product vanishes.
    Infinite,
    /// `0 / 0`.
    Indeterminate,
    /// Product positive but below the underflow threshold.
    Skip,
}

/// A zero density value counts as a true zero only off the support;
/// inside it the value has underflowed.
fn ratio_at(q: &Distribution, dists: &[Distribution], supports: &[SupportDescriptor], x: f64) -> Ratio {
    let qv = q.eval(x);
    let ps: Vec<f64> = dists.iter().map(|d| d.eval(x)).collect();
    if ps.contains(&0.0) {
        if supports.iter().all(|s| s.contains(x)) {
            return Ratio::Skip;
        }
        return if qv > 0.0 {
            Ratio::Infinite
        } else {
            Ratio::Indeterminate
        };
    }
    let direct: f64 = ps.iter().product();
    if direct > UNDERFLOW && direct.is_finite() {
        return Ratio::Ln((qv / direct).ln());
    }
    let ln_p: f64 = dists.iter().map(|d| d.ln_eval(x)).sum();
    if ln_p < UNDERFLOW.ln() {
        return Ratio::Skip;
    }
    Ratio::Ln(qv.ln() - ln_p)
}

/// `max_x q(x)/prod p_i(x) - min_x q(x)/prod p_i(x)` with `0/0 := 1`.
///
/// For continuous laws the extremes are taken over the evaluation points
/// where the product exceeds 1e-300.
pub fn mlr_delta(q: &DistributionSpec, specs: &[DistributionSpec]) -> Result<MlrReport> {
    let dists = dists_of(specs)?;
    let qd = Distribution::new(q.clone())?;
    let discrete = same_kind(&qd, &dists)?;
    let xs = ratio_points(&qd, &dists, discrete)?;
    let supports: Vec<SupportDescriptor> = dists.iter().map(|d| d.support()).collect();
    let mut hi = (f64::NEG_INFINITY, f64::NAN);
    let mut lo = (f64::INFINITY, f64::NAN);
    for x in xs {
        let r = match ratio_at(&qd, &dists, &supports, x) {
            Ratio::Ln(l) => l.exp(),
            Ratio::Infinite => f64::INFINITY,
            Ratio::Indeterminate => 1.0,
            Ratio::Skip => continue,
        };
        if r > hi.0 {
            hi = (r, x);
        }
        if r < lo.0 {
            lo = (r, x);
        }
    }
    Ok(MlrReport {
        delta: hi.0 - lo.0,
        max_ratio: hi.0,
        min_ratio: lo.0,
        argmax_point: hi.1,
        argmin_point: lo.1,
    })
}

/// Outcome of [`proportionality_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionalityReport {
    pub proportional: bool,
    /// Points `x < y` whose ratios `q(x)/q(y)` and `prod p(x)/prod p(y)`
    /// disagree most.
    pub worst_pair: Option<(f64, f64)>,
    /// `max ln(q/prod p) - min ln(q/prod p)` over points with positive
    /// product; infinite when `q` vanishes there or lives where the product
    /// vanishes.
    #[serde(with = "crate::json::ext_real")]
    pub log_spread: f64,
}

/// Whether `q(x)/q(y) = prod p_i(x) / prod p_i(y)` for all examined points,
/// within `tol` on the log scale.
pub fn proportionality_check(
    q: &DistributionSpec,
    specs: &[DistributionSpec],
    tol: f64,
) -> Result<ProportionalityReport> {
    let dists = dists_of(specs)?;
    let qd = Distribution::new(q.clone())?;
    let discrete = same_kind(&qd, &dists)?;
    let xs = ratio_points(&qd, &dists, discrete)?;
    let supports: Vec<SupportDescriptor> = dists.iter().map(|d| d.support()).collect();
    let mut hi = (f64::NEG_INFINITY, f64::NAN);
    let mut lo = (f64::INFINITY, f64::NAN);
    let mut stray = None;
    for x in xs {
        match ratio_at(&qd, &dists, &supports, x) {
            Ratio::Ln(l) => {
                if l > hi.0 {
                    hi = (l, x);
                }
                if l < lo.0 {
                    lo = (l, x);
                }
            }
            Ratio::Infinite => {
                stray.get_or_insert(x);
            }
            _ => {}
        }
    }
    if hi.1.is_nan() {
        return Ok(ProportionalityReport {
            proportional: false,
            worst_pair: None,
            log_spread: f64::INFINITY,
        });
    }
    let order = |a: f64, b: f64| if a <= b { (a, b) } else { (b, a) };
    if let Some(x) = stray {
        return Ok(ProportionalityReport {
            proportional: false,
            worst_pair: Some(order(x, hi.1)),
            log_spread: f64::INFINITY,
        });
    }
    let spread = hi.0 - lo.0;
    Ok(ProportionalityReport {
        proportional: spread <= tol,
        worst_pair: if spread > 0.0 { Some(order(lo.1, hi.1)) } else { None },
        log_spread: spread,
    })
}

/// Characteristic function values on a grid of `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicGrid {
    pub t_points: Vec<f64>,
    /// `(re, im)` pairs.
    pub values: Vec<(f64, f64)>,
}

impl CharacteristicGrid {
    pub fn value(&self, i: usize) -> Complex64 {
        Complex64::new(self.values[i].0, self.values[i].1)
    }
}

/// `n` equally spaced points on `[-t_max, t_max]` (`n` odd keeps `t = 0`).
pub fn symmetric_grid(t_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let t = -t_max + 2.0 * t_max * i as f64 / (n - 1) as f64;
            if 2 * i + 1 == n {
                0.0
            } else {
                t
            }
        })
        .collect()
}

/// `int_0^1 (1 - u) e^(i th u) du` and `int_0^1 u e^(i th u) du`.
fn linear_cell_weights(th: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    if th.abs() < 0.1 {
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w1 = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..16 {
            let kf = k as f64;
            // (i th)^k / k! times 1/(k+1) and 1/(k+2)
            let a = term / (kf + 1.0);
            let b = term / (kf + 2.0);
            w0 += a - b;
            w1 += b;
            term *= i * th / (kf + 1.0);
        }
        return (w0, w1);
    }
    let e = Complex64::new(0.0, th).exp();
    let it = i * th;
    let e0 = (e - 1.0) / it;
    let w1 = e / it - (e - 1.0) / (it * it);
    (e0 - w1, w1)
}

/// Exact transform of the piecewise-linear interpolant.
fn grid_cf(g: &GridDensity, t: f64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (x, v) in g.points().windows(2).zip(g.values().windows(2)) {
        let h = x[1] - x[0];
        let (w0, w1) = linear_cell_weights(t * h);
        s += Complex64::new(0.0, t * x[0]).exp() * h * (w0 * v[0] + w1 * v[1]);
    }
    s / g.norm()
}

fn quadrature_cf(d: &Distribution, t: f64) -> Complex64 {
    let (lo, hi) = d.support().hull();
    let mut breaks = vec![d.median()];
    if let Some((_, a, b)) = d.truncation() {
        breaks.extend([a, b]);
    }
    breaks.retain(|x| *x > lo && *x < hi);
    breaks.sort_by(f64::total_cmp);
    let re = integrate_with_breaks(|x| (t * x).cos() * d.eval(x), lo, hi, &breaks, 1e-13, 1e-11).value;
    let im = integrate_with_breaks(|x| (t * x).sin() * d.eval(x), lo, hi, &breaks, 1e-13, 1e-11).value;
    Complex64::new(re, im)
}

fn cf_value(d: &Distribution, atoms: Option<&[(f64, f64)]>, t: f64) -> Complex64 {
    use DistributionSpec as S;
    let i = Complex64::i();
    if let Some(atoms) = atoms {
        return atoms.iter().map(|&(x, p)| Complex64::new(0.0, t * x).exp() * p).sum();
    }
    match d.spec() {
        S::Normal { mu, sigma2 } => Complex64::new(-0.5 * sigma2 * t * t, mu * t).exp(),
        S::Exponential { mean } => 1.0 / (1.0 - i * (mean * t)),
        S::Uniform { a, b } => {
            if t == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (Complex64::new(0.0, t * b).exp() - Complex64::new(0.0, t * a).exp()) / (i * (t * (b - a)))
            }
        }
        S::Laplace { scale } => Complex64::new(1.0 / (1.0 + scale * scale * t * t), 0.0),
        S::Cauchy { loc, scale } => Complex64::new(-scale * t.abs(), loc * t).exp(),
        S::Gamma { alpha, beta } => (1.0 - i * (beta * t)).powf(-alpha),
        S::ChiSquare { k } => (1.0 - i * (2.0 * t)).powf(-(*k as f64) / 2.0),
        S::Grid(g) => grid_cf(g, t),
        _ => quadrature_cf(d, t),
    }
}

/// `psi(t) = E exp(i t X)` at every `t`. Closed forms for the standard
/// families, an exact sum for discrete laws (enumerated to tail 1e-15),
/// exact integration of the interpolant for grids, quadrature otherwise.
pub fn characteristic_fn(spec: &DistributionSpec, t_grid: &[f64]) -> Result<CharacteristicGrid> {
    let d = Distribution::new(spec.clone())?;
    let atoms = if d.is_discrete() {
        Some(d.atoms(TAIL_CUT)?.0)
    } else {
        None
    };
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let v = cf_value(&d, atoms.as_deref(), t);
            (v.re, v.im)
        })
        .collect();
    Ok(CharacteristicGrid {
        t_points: t_grid.to_vec(),
        values,
    })
}

/// Half-width and point count of the integration lattice for the
/// convolution of characteristic functions.
pub const CONVOLUTION_HALF_WIDTH: f64 = 20.0;
pub const CONVOLUTION_POINTS: usize = 8193;

/// Largest deviation between the characteristic function of the conflation
/// of two continuous laws and `(psi_1 conv psi_2)(t) / (2 pi int f_1 f_2)`.
///
/// The convolution is a trapezoid sum over the lattice `s = k d` with
/// `|s| <= 20` (8193 points); each `t` is rounded to the nearest lattice
/// multiple so that `t - s` stays on the lattice.
pub fn convolution_check(spec1: &DistributionSpec, spec2: &DistributionSpec, t_grid: &[f64]) -> Result<f64> {
    for s in [spec1, spec2] {
        if s.is_discrete() {
            return Err(Error::NotAbsolutelyContinuous(format!(
                "{} has a characteristic function that is not integrable, so the convolution of the \
                 characteristic functions does not exist",
                s.family().name()
            )));
        }
    }
    let step = 2.0 * CONVOLUTION_HALF_WIDTH / (CONVOLUTION_POINTS - 1) as f64;
    let half = (CONVOLUTION_POINTS / 2) as i64;
    let ks: Vec<i64> = t_grid.iter().map(|t| (t / step).round() as i64).collect();
    let reach = ks.iter().map(|k| k.abs()).max().unwrap_or(0);
    let lattice = |lo: i64, hi: i64| -> Vec<f64> { (lo..=hi).map(|k| k as f64 * step).collect() };
    let psi1 = characteristic_fn(spec1, &lattice(-half, half))?;
    let psi2 = characteristic_fn(spec2, &lattice(-half - reach, half + reach))?;
    let q = conflate(&[spec1.clone(), spec2.clone()])?;
    let z = q.norm_constant;
    let ts: Vec<f64> = ks.iter().map(|&k| k as f64 * step).collect();
    let psi_q = characteristic_fn(&q.to_spec(), &ts)?;
    let worst = ks
        .par_iter()
        .enumerate()
        .map(|(idx, &k)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, s_idx) in (-half..=half).enumerate() {
                let w = if s_idx == -half || s_idx == half { 0.5 } else { 1.0 };
                let j = (k - s_idx + half + reach) as usize;
                acc += psi1.value(m) * psi2.value(j) * w;
            }
            let conv = acc * step / (2.0 * std::f64::consts::PI * z);
            (conv - psi_q.value(idx)).norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Support hull of a law, for reports.
pub fn support_of(spec: &DistributionSpec) -> Result<SupportDescriptor> {
    Ok(Distribution::new(spec.clone())?.support())
}
