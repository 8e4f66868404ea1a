//! Dyadic product measures and the brute-force conflation oracle.
//!
//! At level `j` the line is cut into cells of width `h = 2^-j`. The measure
//! `mu_j` puts on cell `k` the product over the inputs of the cell's
//! probability. With the default [`DyadicConvention::RightClosed`] the cell is
//! `((k-1)h, kh]` and its mass sits at `kh`. Normalizing `mu_j` and letting
//! `j` grow recovers the conflation, which makes this an oracle for the
//! engines that never looks at densities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::pmf::{tv_sorted, DiscretePmf};

/// Highest supported level: cell coordinates `k * 2^-j` stay exact in `f64`.
pub const LEVEL_CAP: u32 = 30;

/// Largest dense cell count one level may enumerate.
pub const MAX_CELLS: u64 = 1 << 26;

/// Per-side tail mass targeted by [`default_window`].
pub const WINDOW_TAIL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicConvention {
    /// Cells `((k-1)h, kh]`, mass at `kh`.
    #[default]
    RightClosed,
    /// Cells `[kh, (k+1)h)`, mass at `kh`.
    LeftClosed,
}

impl DyadicConvention {
    /// Index of the level `j-1` cell containing level `j` cell `k`.
    pub fn parent(self, k: i64) -> i64 {
        match self {
            DyadicConvention::RightClosed => k.div_euclid(2) + k.rem_euclid(2),
            DyadicConvention::LeftClosed => k.div_euclid(2),
        }
    }

    /// Index of the level `j` cell containing `x`.
    pub fn cell_of(self, x: f64, j: u32) -> i64 {
        let y = x * scale(j);
        match self {
            DyadicConvention::RightClosed => y.ceil() as i64,
            DyadicConvention::LeftClosed => y.floor() as i64,
        }
    }

    fn cell_prob(self, d: &Distribution, k: i64, h: f64) -> f64 {
        let x = k as f64 * h;
        match self {
            DyadicConvention::RightClosed => d.interval_prob_unchecked(x - h, x),
            DyadicConvention::LeftClosed => {
                let p = d.interval_prob_unchecked(x, x + h) + d.atom_mass(x) - d.atom_mass(x + h);
                p.clamp(0.0, 1.0)
            }
        }
    }
}

fn scale(j: u32) -> f64 {
    (1u64 << j) as f64
}

/// The sub-probability `mu_j` restricted to a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicMeasure {
    pub level: u32,
    /// `(k, mass)` pairs sorted by `k`; the atom sits at `k * 2^-level`.
    pub masses: Vec<(i64, f64)>,
    pub total_mass: f64,
    /// Inclusive range of cell indices enumerated.
    pub window: (i64, i64),
    /// Upper bound on the mass of cells outside the window.
    pub tail_bound: f64,
    pub convention: DyadicConvention,
}

impl DyadicMeasure {
    pub fn cell_width(&self) -> f64 {
        1.0 / scale(self.level)
    }

    /// `(x, mass)` pairs with atom locations.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let h = self.cell_width();
        self.masses.iter().map(|&(k, m)| (k as f64 * h, m)).collect()
    }

    /// Mass of the parent cells one level down.
    pub fn aggregate(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for &(k, m) in &self.masses {
            let p = self.convention.parent(k);
            match out.last_mut() {
                Some(last) if last.0 == p => last.1 += m,
                _ => out.push((p, m)),
            }
        }
        out
    }

    /// CSV with columns `x,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,mass\n");
        for (x, m) in self.points() {
            s.push_str(&format!("{x},{m}\n"));
        }
        s
    }
}

/// Divides `mu` by its total mass.
pub fn normalized(mu: &DyadicMeasure) -> Result<DiscretePmf> {
    if !(mu.total_mass > 0.0) {
        return Err(Error::Incompatible(format!(
            "the level-{} dyadic product measure is zero",
            mu.level
        )));
    }
    let atoms = mu.points().into_iter().map(|(x, m)| (x, m / mu.total_mass)).collect();
    DiscretePmf::new(atoms, mu.tail_bound / mu.total_mass)
}

/// A window `[lo, hi]` with integer ends outside of which the product
/// measure has mass at most about `2 * tail` at every level, together with
/// that bound.
///
/// The product of the inputs' tail probabilities beyond an edge bounds the
/// dyadic mass beyond it, since a product of sums dominates the sum of
/// products.
pub fn default_window(dists: &[Distribution], tail: f64) -> ((f64, f64), f64) {
    let ln_t = tail.ln();
    let ln_lower = |x: f64| dists.iter().map(|d| d.cdf(x).ln()).sum::<f64>();
    let ln_upper = |x: f64| dists.iter().map(|d| d.sf(x).ln()).sum::<f64>();
    let hulls: Vec<(f64, f64)> = dists.iter().map(|d| d.support().hull()).collect();
    let lo_q = dists.iter().map(|d| d.quantile(tail)).fold(f64::INFINITY, f64::min);
    let hi_q = dists.iter().map(|d| d.isf(tail)).fold(f64::NEG_INFINITY, f64::max);
    let max_lo = hulls.iter().map(|h| h.0).fold(f64::NEG_INFINITY, f64::max);
    let min_hi = hulls.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);

    // Smallest window edge with product of lower tails <= tail, by bisection
    // between the loosest single-input quantile and the union's far edge.
    let search = |mut a: f64, mut b: f64, ok: &dyn Fn(f64) -> bool| {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if ok(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let lo_union = lo_q.max(-1e15);
    let hi_union = hi_q.min(1e15);
    let mut lo = if ln_lower(lo_union) <= ln_t {
        let top = hi_union.max(lo_union);
        if ln_lower(top) <= ln_t {
            top
        } else {
            search(lo_union, top, &|x| ln_lower(x) <= ln_t)
        }
    } else {
        lo_union
    };
    let mut hi = if ln_upper(hi_union) <= ln_t {
        let bottom = lo_union.min(hi_union);
        if ln_upper(bottom) <= ln_t {
            bottom
        } else {
            -search(-hi_union, -bottom, &|x| ln_upper(-x) <= ln_t)
        }
    } else {
        hi_union
    };
    if lo >= hi {
        lo = lo_union;
        hi = hi_union;
    }
    lo = lo.max(max_lo);
    hi = hi.min(min_hi);
    if lo > hi {
        // Disjoint hulls: keep a window so callers see a zero measure.
        lo = max_lo.min(min_hi);
        hi = max_lo.max(min_hi);
    }
    let lo = lo.floor() - 1.0;
    let hi = hi.ceil() + 1.0;
    let bound = ln_lower(lo).exp() + ln_upper(hi).exp();
    ((lo, hi), bound)
}

/// Cells of level `j` whose atoms lie in `window` and that can carry mass.
fn candidate_cells(
    dists: &[Distribution],
    j: u32,
    window: (f64, f64),
    convention: DyadicConvention,
) -> Result<CellSet> {
    let s = scale(j);
    let k0 = (window.0 * s).ceil();
    let k1 = (window.1 * s).floor();
    if !(k0.is_finite() && k1.is_finite()) || k0.abs() > 9e15 || k1.abs() > 9e15 {
        return Err(Error::InvalidArgument(format!(
            "dyadic window [{}, {}] must be finite",
            window.0, window.1
        )));
    }
    let (k0, k1) = (k0 as i64, k1 as i64);
    // A discrete input confines the mass to cells holding its atoms.
    let (lo, hi) = match convention {
        DyadicConvention::RightClosed => (window.0 - 1.0 / s, window.1),
        DyadicConvention::LeftClosed => (window.0, window.1 + 1.0 / s),
    };
    let listed: Vec<Result<Vec<(f64, f64)>>> = dists
        .iter()
        .filter(|d| d.is_discrete())
        .map(|d| d.atoms_in(lo, hi))
        .collect();
    if !listed.is_empty() {
        let fewest = listed.iter().filter_map(|r| r.as_ref().ok()).min_by_key(|a| a.len());
        let Some(atoms) = fewest else {
            return Err(listed.into_iter().find_map(|r| r.err()).unwrap());
        };
        let mut ks: Vec<i64> = atoms
            .iter()
            .map(|a| convention.cell_of(a.0, j))
            .filter(|k| *k >= k0 && *k <= k1)
            .collect();
        ks.dedup();
        return Ok(CellSet::Sparse(ks, (k0, k1)));
    }
    let count = (k1 - k0 + 1).max(0) as u64;
    if count > MAX_CELLS {
        return Err(Error::WindowTooLarge {
            cells: count,
            limit: MAX_CELLS,
        });
    }
    Ok(CellSet::Dense(k0, k1))
}

enum CellSet {
    Dense(i64, i64),
    Sparse(Vec<i64>, (i64, i64)),
}

/// Product taken in ascending order, so it does not depend on input order.
fn sorted_product(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().product()
}

fn product(dists: &[Distribution], k: i64, h: f64, convention: DyadicConvention) -> f64 {
    let mut ps: Vec<f64> = Vec::with_capacity(dists.len());
    for d in dists {
        let p = convention.cell_prob(d, k, h);
        if p == 0.0 {
            return 0.0;
        }
        ps.push(p);
    }
    sorted_product(ps.into_iter())
}

/// `mu_j` of validated inputs over the cells whose atoms lie in `window`.
pub fn mu_j_of(
    dists: &[Distribution],
    j: u32,
    window: (f64, f64),
    convention: DyadicConvention,
) -> Result<DyadicMeasure> {
    if dists.is_empty() {
        return Err(Error::EmptyInput);
    }
    if j > LEVEL_CAP {
        return Err(Error::LevelCap {
            level: j,
            cap: LEVEL_CAP,
        });
    }
    if !(window.0 <= window.1) {
        return Err(Error::InvalidInterval {
            lo: window.0,
            hi: window.1,
        });
    }
    let h = 1.0 / scale(j);
    let (cells, range) = match candidate_cells(dists, j, window, convention)? {
        CellSet::Dense(k0, k1) => {
            let masses: Vec<(i64, f64)> = (k0..=k1)
                .into_par_iter()
                .map(|k| (k, product(dists, k, h, convention)))
                .filter(|c| c.1 > 0.0)
                .collect();
            (masses, (k0, k1))
        }
        CellSet::Sparse(ks, range) => {
            let masses: Vec<(i64, f64)> = ks
                .into_par_iter()
                .map(|k| (k, product(dists, k, h, convention)))
                .filter(|c| c.1 > 0.0)
                .collect();
            (masses, range)
        }
    };
    let total_mass: f64 = cells.iter().map(|c| c.1).sum();
    let (a, b) = (range.0 as f64 * h, range.1 as f64 * h);
    // Mass outside the window is at most the product of the inputs' tails.
    let tail_bound = match convention {
        DyadicConvention::RightClosed => {
            sorted_product(dists.iter().map(|d| d.cdf(a - h))) + sorted_product(dists.iter().map(|d| d.sf(b)))
        }
        DyadicConvention::LeftClosed => {
            sorted_product(dists.iter().map(|d| d.cdf_left(a))) + sorted_product(dists.iter().map(|d| d.sf_left(b + h)))
        }
    };
    Ok(DyadicMeasure {
        level: j,
        masses: cells,
        total_mass,
        window: range,
        tail_bound: tail_bound.max(0.0),
        convention,
    })
}

/// `mu_j` of the given specs on `window` with the right-closed convention.
pub fn mu_j(specs: &[DistributionSpec], j: u32, window: (f64, f64)) -> Result<DyadicMeasure> {
    let dists = validated(specs)?;
    mu_j_of(&dists, j, window, DyadicConvention::RightClosed)
}

fn validated(specs: &[DistributionSpec]) -> Result<Vec<Distribution>> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    specs.iter().cloned().map(Distribution::new).collect()
}

/// Cell probabilities of one distribution at level `j` over `window`.
pub fn discretize(
    dist: &Distribution,
    j: u32,
    window: (f64, f64),
    convention: DyadicConvention,
) -> Result<Vec<(i64, f64)>> {
    let m = mu_j_of(std::slice::from_ref(dist), j, window, convention)?;
    Ok(m.masses)
}

/// Total variation between two cell lists after normalizing each.
pub fn tv_cells(a: &[(i64, f64)], b: &[(i64, f64)]) -> f64 {
    let na: f64 = a.iter().map(|c| c.1).sum();
    let nb: f64 = b.iter().map(|c| c.1).sum();
    let a: Vec<(i64, f64)> = a.iter().map(|c| (c.0, c.1 / na)).collect();
    let b: Vec<(i64, f64)> = b.iter().map(|c| (c.0, c.1 / nb)).collect();
    tv_sorted(&a, &b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub j_max: u32,
    pub tv_tol: f64,
    /// Explicit window; `None` selects [`default_window`].
    pub window: Option<(f64, f64)>,
    pub convention: DyadicConvention,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            j_max: 16,
            tv_tol: 1e-4,
            window: None,
            convention: DyadicConvention::RightClosed,
        }
    }
}

/// Outcome of the level-by-level oracle run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Normalized `mu_J` at the final level.
    pub approx: DiscretePmf,
    /// `||mu_j||` for `j = 1..=J`.
    pub mass_sequence: Vec<f64>,
    /// Distance between successive normalized levels, compared on the
    /// coarser cells (first entry is for `j = 2`).
    pub tv_sequence: Vec<f64>,
    /// Every coarse cell lost mass (up to 1e-12) when refined, and the
    /// total masses never increased.
    pub monotonicity_ok: bool,
    /// Mass drifted steadily in one direction over several levels.
    pub escape_flag: bool,
    pub converged: bool,
    pub achieved_level: u32,
    pub window: (f64, f64),
    pub tail_bound: f64,
}

/// Levels in a row whose quantiles must drift for the escape flag.
const ESCAPE_RUN: usize = 5;

/// Runs `mu_j` for `j = 1..=j_max` on a fixed window until successive
/// normalized levels agree within `tv_tol`.
pub fn oracle_conflation_with(dists: &[Distribution], opts: &OracleOptions) -> Result<OracleReport> {
    if dists.is_empty() {
        return Err(Error::EmptyInput);
    }
    if opts.j_max == 0 || opts.j_max > LEVEL_CAP {
        return Err(Error::LevelCap {
            level: opts.j_max,
            cap: LEVEL_CAP,
        });
    }
    let window = opts.window.unwrap_or_else(|| default_window(dists, WINDOW_TAIL).0);
    let mut mass_sequence = Vec::new();
    let mut tv_sequence = Vec::new();
    let mut monotonicity_ok = true;
    let mut prev: Option<DyadicMeasure> = None;
    let mut quantiles: Vec<[f64; 3]> = Vec::new();
    let mut drift_run = 0usize;
    let mut escape_flag = false;
    let mut converged = false;
    let mut last = None;
    for j in 1..=opts.j_max {
        let mu = match mu_j_of(dists, j, window, opts.convention) {
            // Finer levels no longer fit in memory; report the last one that did.
            Err(Error::WindowTooLarge { .. }) if last.is_some() => break,
            r => r?,
        };
        if !(mu.total_mass > 0.0) {
            if escape_flag {
                // The mass has left the window for good; report what was seen.
                break;
            }
            return Err(Error::Incompatible(format!(
                "the dyadic product measure vanishes at level {j}"
            )));
        }
        mass_sequence.push(mu.total_mass);
        let pmf = normalized(&mu)?;
        let q = [pmf.quantile(0.005), pmf.quantile(0.5), pmf.quantile(0.995)];
        if let Some(prev_q) = quantiles.last() {
            let step = 8.0 / scale(j - 1);
            let d: Vec<f64> = q.iter().zip(prev_q).map(|(a, b)| a - b).collect();
            let up = d.iter().all(|x| *x > step);
            let down = d.iter().all(|x| *x < -step);
            drift_run = if up || down { drift_run + 1 } else { 0 };
            if drift_run >= ESCAPE_RUN {
                escape_flag = true;
            }
        }
        quantiles.push(q);
        let mut stop = false;
        if let Some(p) = &prev {
            let agg = mu.aggregate();
            if mu.total_mass > p.total_mass + 1e-12 {
                monotonicity_ok = false;
            }
            let coarse = &p.masses;
            let mut i = 0;
            for &(k, m) in &agg {
                while i < coarse.len() && coarse[i].0 < k {
                    i += 1;
                }
                let before = if i < coarse.len() && coarse[i].0 == k {
                    coarse[i].1
                } else {
                    0.0
                };
                if m > before + 1e-12 {
                    monotonicity_ok = false;
                }
            }
            let tv = tv_cells(&agg, coarse);
            tv_sequence.push(tv);
            if tv < opts.tv_tol && !escape_flag {
                converged = true;
                stop = true;
            }
        }
        last = Some((pmf, mu.tail_bound, j));
        prev = Some(mu);
        if stop {
            break;
        }
    }
    let (approx, tail_bound, achieved_level) = last.expect("at least one level");
    Ok(OracleReport {
        approx,
        mass_sequence,
        tv_sequence,
        monotonicity_ok,
        escape_flag,
        converged,
        achieved_level,
        window,
        tail_bound,
    })
}

/// Oracle on raw specs with the default window and convention.
pub fn oracle_conflation(specs: &[DistributionSpec], j_max: u32, tv_tol: f64) -> Result<OracleReport> {
    let dists = validated(specs)?;
    oracle_conflation_with(
        &dists,
        &OracleOptions {
            j_max,
            tv_tol,
            ..OracleOptions::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use DistributionSpec as S;

    fn dists(specs: &[DistributionSpec]) -> Vec<Distribution> {
        validated(specs).unwrap()
    }

    #[test]
    fn bernoulli_pair_is_level_independent() {
        let specs = [S::bernoulli(1.0 / 3.0), S::bernoulli(0.25)];
        for j in 1..=10 {
            let mu = mu_j(&specs, j, (-2.0, 3.0)).unwrap();
            let pts = mu.points();
            assert_eq!(pts.len(), 2);
            assert_eq!(pts[0].0, 0.0);
            assert!((pts[0].1 - 0.5).abs() <= 1e-15);
            assert_eq!(pts[1].0, 1.0);
            assert!((pts[1].1 - 1.0 / 12.0).abs() <= 1e-15);
            assert!((mu.total_mass - 7.0 / 12.0).abs() <= 1e-15);
            let n = normalized(&mu).unwrap();
            assert!((n.mass(0.0) - 6.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_is_fixed() {
        let mu = mu_j(&[S::pmf([(0.0, 1.0)])], 7, (-1.0, 1.0)).unwrap();
        assert_eq!(mu.masses, vec![(0, 1.0)]);
        assert_eq!(mu.total_mass, 1.0);
        assert_eq!(normalized(&mu).unwrap().atoms(), &[(0.0, 1.0)]);
    }

    #[test]
    fn zero_measure_does_not_normalize() {
        let mu = mu_j(&[S::pmf([(0.0, 1.0)]), S::pmf([(1.0, 1.0)])], 3, (-2.0, 2.0)).unwrap();
        assert_eq!(mu.total_mass, 0.0);
        assert!(matches!(normalized(&mu), Err(Error::Incompatible(_))));
    }

    #[test]
    fn normal_pair_level_one_matches_direct_sum() {
        let specs = [S::normal(0.0, 1.0), S::normal(0.0, 1.0)];
        let mu = mu_j(&specs, 1, (-8.0, 8.0)).unwrap();
        // Cell probabilities by integrating the density directly.
        let pdf = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cell = |a: f64, b: f64| crate::quadrature::integrate(pdf, a, b, 1e-16, 1e-14).value;
        let expect: f64 = (-16..=16)
            .map(|k| cell((k as f64 - 1.0) / 2.0, k as f64 / 2.0).powi(2))
            .sum();
        assert!((mu.total_mass - expect).abs() < 1e-13, "{} vs {expect}", mu.total_mass);
    }

    #[test]
    fn parents_and_cells() {
        let r = DyadicConvention::RightClosed;
        assert_eq!((r.parent(3), r.parent(4), r.parent(-1), r.parent(0)), (2, 2, 0, 0));
        let l = DyadicConvention::LeftClosed;
        assert_eq!((l.parent(3), l.parent(4), l.parent(-1)), (1, 2, -1));
        assert_eq!(r.cell_of(0.5, 1), 1);
        assert_eq!(r.cell_of(0.6, 1), 2);
        assert_eq!(l.cell_of(0.6, 1), 1);
    }

    #[test]
    fn products_of_sums_dominate_sums_of_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..5);
            let k = rng.random_range(1..8);
            let a: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect();
            let prod_of_sums: f64 = a.iter().map(|r| r.iter().sum::<f64>()).product();
            let sum_of_prods: f64 = (0..k).map(|c| a.iter().map(|r| r[c]).product::<f64>()).sum();
            assert!(prod_of_sums >= sum_of_prods * (1.0 - 1e-15));
        }
    }

    #[test]
    fn oracle_on_bernoulli_pair_stabilizes_immediately() {
        let r = oracle_conflation(&[S::bernoulli(1.0 / 3.0), S::bernoulli(0.25)], 10, 1e-12).unwrap();
        assert_eq!(r.achieved_level, 2);
        assert!(r.converged && r.monotonicity_ok && !r.escape_flag);
        assert!((r.approx.mass(0.0) - 6.0 / 7.0).abs() < 1e-15);
        assert!((r.approx.mass(1.0) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_on_normal_pair_approaches_half_variance_normal() {
        let d = dists(&[S::normal(0.0, 1.0), S::normal(0.0, 1.0)]);
        let r = oracle_conflation_with(
            &d,
            &OracleOptions {
                j_max: 12,
                tv_tol: 1e-6,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.monotonicity_ok && !r.escape_flag);
        let target = Distribution::new(S::normal(0.0, 0.5)).unwrap();
        let cells = discretize(&target, r.achieved_level, r.window, DyadicConvention::RightClosed).unwrap();
        let h = 1.0 / scale(r.achieved_level);
        let approx: Vec<(i64, f64)> = r
            .approx
            .atoms()
            .iter()
            .map(|(x, m)| ((x / h).round() as i64, *m))
            .collect();
        assert!(tv_cells(&approx, &cells) < 0.01);
        for w in r.mass_sequence.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn order_of_inputs_does_not_change_masses() {
        let a = [S::normal(0.3, 2.0), S::exponential(1.5), S::Laplace { scale: 0.7 }];
        let b = [a[2].clone(), a[0].clone(), a[1].clone()];
        let ma = mu_j(&a, 6, (-10.0, 10.0)).unwrap();
        let mb = mu_j(&b, 6, (-10.0, 10.0)).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn escaping_mass_is_flagged() {
        let k_max = 40;
        let p1: Vec<(f64, f64)> = (1..=k_max).map(|k| (k as f64, 0.5f64.powi(k))).collect();
        let mirrored: Vec<(f64, f64)> = (1..=k_max)
            .map(|k| (k as f64 - 0.5f64.powi(k), 0.5f64.powi(k)))
            .collect();
        let renorm = |v: Vec<(f64, f64)>| {
            let s: f64 = v.iter().map(|a| a.1).sum();
            S::pmf(v.into_iter().map(|(x, m)| (x, m / s)))
        };
        let specs = [renorm(p1), renorm(mirrored)];
        let r = oracle_conflation(&specs, 16, 1e-6).unwrap();
        assert!(r.escape_flag);
        assert!(!r.converged);
    }

    #[test]
    fn level_cap_and_empty_input() {
        assert!(matches!(
            mu_j(&[S::normal(0.0, 1.0)], 31, (0.0, 1.0)),
            Err(Error::LevelCap { .. })
        ));
        assert!(matches!(mu_j(&[], 3, (0.0, 1.0)), Err(Error::EmptyInput)));
    }

    #[test]
    fn default_window_bounds_tails() {
        let d = dists(&[S::normal(0.0, 1.0), S::normal(0.0, 1.0)]);
        let ((lo, hi), bound) = default_window(&d, WINDOW_TAIL);
        assert!(lo <= -4.0 && hi >= 4.0 && hi - lo < 14.0, "{lo} {hi}");
        assert!(bound <= 2.0 * WINDOW_TAIL);
        let d = dists(&[S::exponential(1.0), S::Pareto { alpha: 3.0, beta: 1.0 }]);
        let ((lo, _), _) = default_window(&d, WINDOW_TAIL);
        assert!(lo >= -1.0);
    }

    #[test]
    fn oracle_stops_at_the_finest_level_that_fits() {
        let specs = [S::Cauchy { loc: -1.0, scale: 2.0 }, S::Cauchy { loc: 1.0, scale: 2.0 }];
        let d = dists(&specs);
        let ((lo, hi), _) = default_window(&d, WINDOW_TAIL);
        assert!((hi - lo) * 4096.0 > MAX_CELLS as f64);
        let r = oracle_conflation_with(
            &d,
            &OracleOptions {
                j_max: 12,
                tv_tol: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.achieved_level < 12 && !r.converged && r.monotonicity_ok);
        assert_eq!(r.mass_sequence.len() as u32, r.achieved_level);
    }
}
