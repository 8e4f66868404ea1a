//! Conflation as a conditional law, by rejection.
//!
//! Independent draws `(X_1, ..., X_n)` are accepted when they agree exactly
//! (discrete inputs) or when every pairwise gap is below `epsilon`
//! (continuous inputs); the accepted `X_1` values follow the conflation
//! exactly, respectively in the limit `epsilon -> 0`.
//!
//! Work is split over a fixed number of chains. Chain `c` draws variable `i`
//! from a ChaCha8 stream seeded by `seed` with stream id `c * n + i`, so a
//! batch depends only on the seed and parameters, not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Beta, Binomial, Cauchy, ChiSquared, Distribution as _, Exp, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflation::{conflate, ConflationResult};
use crate::distributions::{Distribution, DistributionSpec};
use crate::error::{Error, Result};

/// Number of independent chains a batch is split into.
pub const CHAINS: u64 = 16;
pub const DEFAULT_PROPOSAL_CAP: u64 = 100_000_000;
/// Acceptance rate targeted by [`default_epsilon`].
pub const TARGET_ACCEPTANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub accepted: u64,
    pub proposed: u64,
    pub acceptance_rate: f64,
    /// 0 for exact agreement.
    pub epsilon: f64,
    pub seed: u64,
}

impl SampleBatch {
    /// Single-column CSV with header `x`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x\n");
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    /// Everything except the values.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "accepted": self.accepted,
            "proposed": self.proposed,
            "acceptance_rate": self.acceptance_rate,
            "epsilon": self.epsilon,
            "seed": self.seed,
        })
    }
}

enum Draw {
    Normal(Normal<f64>),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Beta(Beta<f64>),
    Cauchy(Cauchy<f64>),
    ChiSquared(ChiSquared<f64>),
    Uniform(f64, f64),
    Bernoulli(Bernoulli),
    Poisson(Poisson<f64>),
    Binomial(Binomial),
    Inverse(Distribution),
}

impl Draw {
    fn new(d: Distribution) -> Result<Self> {
        use DistributionSpec as S;
        let bad = |e: &dyn std::fmt::Display| Error::InvalidArgument(format!("sampler: {e}"));
        Ok(match *d.spec() {
            S::Normal { mu, sigma2 } => Draw::Normal(Normal::new(mu, sigma2.sqrt()).map_err(|e| bad(&e))?),
            S::Exponential { mean } => Draw::Exp(Exp::new(1.0 / mean).map_err(|e| bad(&e))?),
            S::Gamma { alpha, beta } => Draw::Gamma(Gamma::new(alpha, beta).map_err(|e| bad(&e))?),
            S::Beta { alpha, beta } => Draw::Beta(Beta::new(alpha, beta).map_err(|e| bad(&e))?),
            S::Cauchy { loc, scale } => Draw::Cauchy(Cauchy::new(loc, scale).map_err(|e| bad(&e))?),
            S::ChiSquare { k } => Draw::ChiSquared(ChiSquared::new(k as f64).map_err(|e| bad(&e))?),
            S::Uniform { a, b } => Draw::Uniform(a, b),
            S::Bernoulli { p } => Draw::Bernoulli(Bernoulli::new(p).map_err(|e| bad(&e))?),
            S::Poisson { lambda } => Draw::Poisson(Poisson::new(lambda).map_err(|e| bad(&e))?),
            S::Binomial { n, p } => Draw::Binomial(Binomial::new(n, p).map_err(|e| bad(&e))?),
            _ => Draw::Inverse(d),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Draw::Normal(d) => d.sample(rng),
            Draw::Exp(d) => d.sample(rng),
            Draw::Gamma(d) => d.sample(rng),
            Draw::Beta(d) => d.sample(rng),
            Draw::Cauchy(d) => d.sample(rng),
            Draw::ChiSquared(d) => d.sample(rng),
            Draw::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
            Draw::Bernoulli(d) => d.sample(rng) as u8 as f64,
            Draw::Poisson(d) => d.sample(rng),
            Draw::Binomial(d) => d.sample(rng) as f64,
            Draw::Inverse(d) => loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break d.quantile(u);
                }
            },
        }
    }
}

fn share(total: u64, chain: u64) -> u64 {
    total / CHAINS + u64::from(chain < total % CHAINS)
}

struct Chain {
    values: Vec<f64>,
    proposed: u64,
}

/// `n_target = None` runs exactly `cap` proposals.
fn run(specs: &[DistributionSpec], epsilon: f64, n_target: Option<u64>, seed: u64, cap: u64) -> Result<SampleBatch> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if n_target == Some(0) || cap == 0 {
        return Err(Error::InvalidArgument(
            "n_target and the proposal cap must be positive".into(),
        ));
    }
    let draws: Vec<Draw> = specs
        .iter()
        .map(|s| Distribution::new(s.clone()).and_then(Draw::new))
        .collect::<Result<_>>()?;
    let n = draws.len() as u64;
    let chains: Vec<Chain> = (0..CHAINS)
        .into_par_iter()
        .map(|c| {
            let mut rngs: Vec<ChaCha8Rng> = (0..n)
                .map(|i| {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    r.set_stream(c * n + i);
                    r
                })
                .collect();
            let want = n_target.map_or(u64::MAX, |t| share(t, c));
            let budget = share(cap, c);
            let mut values = Vec::with_capacity(want.min(1 << 20) as usize);
            let mut proposed = 0;
            while (values.len() as u64) < want && proposed < budget {
                proposed += 1;
                let x1 = draws[0].sample(&mut rngs[0]);
                let (mut lo, mut hi) = (x1, x1);
                for (d, r) in draws.iter().zip(rngs.iter_mut()).skip(1) {
                    let x = d.sample(r);
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                let agree = if epsilon == 0.0 { lo == hi } else { hi - lo < epsilon };
                if agree {
                    values.push(x1);
                }
            }
            Chain { values, proposed }
        })
        .collect();
    let proposed: u64 = chains.iter().map(|c| c.proposed).sum();
    let values: Vec<f64> = chains.into_iter().flat_map(|c| c.values).collect();
    let accepted = values.len() as u64;
    if accepted == 0 {
        return Err(Error::Incompatible(format!(
            "none of {proposed} proposals agreed; the inputs have no common atoms or overlapping supports"
        )));
    }
    if let Some(needed) = n_target.filter(|&t| accepted < t) {
        return Err(Error::SamplerExhausted {
            accepted,
            proposed,
            needed,
        });
    }
    Ok(SampleBatch {
        values,
        accepted,
        proposed,
        acceptance_rate: accepted as f64 / proposed as f64,
        epsilon,
        seed,
    })
}

/// Accepted draws of `X_1` given `X_1 = ... = X_n`.
pub fn sample_agree_discrete(
    specs: &[DistributionSpec],
    n_target: u64,
    seed: u64,
    proposal_cap: u64,
) -> Result<SampleBatch> {
    if let Some(s) = specs.iter().find(|s| !s.is_discrete()) {
        return Err(Error::MixedKinds(format!("{} is not discrete", s.family().name())));
    }
    run(specs, 0.0, Some(n_target), seed, proposal_cap)
}

/// Accepted draws of `X_1` given `|X_i - X_j| < epsilon` for all pairs.
pub fn sample_agree_ac(
    specs: &[DistributionSpec],
    epsilon: f64,
    n_target: u64,
    seed: u64,
    proposal_cap: u64,
) -> Result<SampleBatch> {
    if let Some(s) = specs.iter().find(|s| s.is_discrete()) {
        return Err(Error::MixedKinds(format!(
            "{} is not absolutely continuous",
            s.family().name()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    run(specs, epsilon, Some(n_target), seed, proposal_cap)
}

/// Exactly `proposals` proposals, keeping whatever is accepted; `epsilon = 0`
/// asks for exact agreement.
pub fn sample_fixed_proposals(
    specs: &[DistributionSpec],
    epsilon: f64,
    proposals: u64,
    seed: u64,
) -> Result<SampleBatch> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    run(specs, epsilon, None, seed, proposals)
}

/// `epsilon` whose predicted acceptance `(2 epsilon)^(n-1) int prod f_i` is
/// [`TARGET_ACCEPTANCE`].
pub fn default_epsilon(specs: &[DistributionSpec]) -> Result<f64> {
    if specs.len() < 2 {
        return Ok(1.0);
    }
    let z = conflate(specs)?.norm_constant;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidArgument(format!("no default epsilon for normalizer {z}")));
    }
    Ok(0.5 * (TARGET_ACCEPTANCE / z).powf(1.0 / (specs.len() - 1) as f64))
}

/// Total variation on atoms for discrete targets, Kolmogorov-Smirnov
/// statistic against the target CDF otherwise.
pub fn empirical_distance(batch: &SampleBatch, target: &ConflationResult) -> Result<f64> {
    if batch.values.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let q = target.distribution()?;
    let n = batch.values.len() as f64;
    let mut xs = batch.values.clone();
    xs.sort_by(f64::total_cmp);
    if q.is_discrete() {
        let mut counts: Vec<(f64, f64)> = Vec::new();
        for x in xs {
            match counts.last_mut() {
                Some(last) if last.0 == x => last.1 += 1.0,
                _ => counts.push((x, 1.0)),
            }
        }
        let (atoms, tail) = q.atoms(1e-15)?;
        let mut diff = tail;
        let mut covered = 0.0;
        for &(x, m) in &atoms {
            let c = counts
                .binary_search_by(|a| a.0.total_cmp(&x))
                .map_or(0.0, |i| counts[i].1 / n);
            covered += c;
            diff += (m - c).abs();
        }
        diff += 1.0 - covered;
        return Ok(0.5 * diff);
    }
    let mut ks: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = q.cdf(x);
        ks = ks.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(ks)
}
