use crate::distributions::{Distribution, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::fusion::gaussian_conflation_params;

use super::{canonical_inputs, conflate_dists, ConflationForm, ConflationResult, Engine, GridOptions};

pub(crate) enum Outcome {
    Spec(DistributionSpec),
    /// A rule applies but its derived parameters are invalid.
    Fallback(String),
    /// The inputs provably have no conflation.
    Undefined(Error),
}

/// Closure rules, keyed by the family of every input. Poisson and CMP inputs
/// combine as CMP; chi-square and exponential inputs mixed with gamma inputs
/// are read as gamma laws.
fn rule(specs: &[&DistributionSpec]) -> Option<Outcome> {
    use DistributionSpec as S;
    let n = specs.len() as f64;
    let fam = specs[0].family();
    let same = specs.iter().all(|s| s.family() == fam);
    let params = |f: &dyn Fn(&DistributionSpec) -> Option<(f64, f64)>| -> Option<Vec<(f64, f64)>> {
        specs.iter().map(|s| f(s)).collect()
    };
    let spec = if same {
        match fam {
            Family::Normal => {
                let (m, v): (Vec<f64>, Vec<f64>) = params(&|s| match s {
                    S::Normal { mu, sigma2 } => Some((*mu, *sigma2)),
                    _ => None,
                })?
                .into_iter()
                .unzip();
                let (mu, sigma2) = gaussian_conflation_params(&m, &v).ok()?;
                S::Normal { mu, sigma2 }
            }
            Family::Bernoulli => {
                let ps = params(&|s| match s {
                    S::Bernoulli { p } => Some((*p, 0.0)),
                    _ => None,
                })?;
                let on: f64 = ps.iter().map(|p| p.0).product();
                let off: f64 = ps.iter().map(|p| 1.0 - p.0).product();
                if on + off == 0.0 {
                    return Some(Outcome::Undefined(Error::ConflationUndefined("no common atoms".into())));
                }
                S::Bernoulli { p: on / (on + off) }
            }
            Family::Geometric => {
                let q: f64 = params(&|s| match s {
                    S::Geometric { p } => Some((1.0 - p, 0.0)),
                    _ => None,
                })?
                .iter()
                .map(|a| a.0)
                .product();
                S::Geometric { p: 1.0 - q }
            }
            Family::DiscreteUniform => S::DiscreteUniform {
                n: specs
                    .iter()
                    .filter_map(|s| match s {
                        S::DiscreteUniform { n } => Some(*n),
                        _ => None,
                    })
                    .min()?,
            },
            Family::Zipf => {
                let mut alpha = 0.0;
                let mut n = u64::MAX;
                for s in specs {
                    let S::Zipf { alpha: a, n: m } = s else { return None };
                    alpha += a;
                    n = n.min(*m);
                }
                S::Zipf { alpha, n }
            }
            Family::Zeta => S::Zeta {
                alpha: params(&|s| match s {
                    S::Zeta { alpha } => Some((*alpha, 0.0)),
                    _ => None,
                })?
                .iter()
                .map(|a| a.0)
                .sum(),
            },
            Family::Beta => {
                let ab = params(&|s| match s {
                    S::Beta { alpha, beta } => Some((*alpha, *beta)),
                    _ => None,
                })?;
                let alpha = ab.iter().map(|a| a.0).sum::<f64>() - (n - 1.0);
                let beta = ab.iter().map(|a| a.1).sum::<f64>() - (n - 1.0);
                if !(alpha > 0.0 && beta > 0.0) {
                    return Some(Outcome::Fallback(format!(
                        "beta rule gives alpha = {alpha}, beta = {beta}; the density product may not be integrable"
                    )));
                }
                S::Beta { alpha, beta }
            }
            Family::Uniform => {
                let ab = params(&|s| match s {
                    S::Uniform { a, b } => Some((*a, *b)),
                    _ => None,
                })?;
                let a = ab.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
                let b = ab.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
                if a >= b {
                    return Some(Outcome::Undefined(Error::Incompatible(format!(
                        "uniform supports do not overlap (max a = {a}, min b = {b})"
                    ))));
                }
                S::Uniform { a, b }
            }
            Family::Laplace => S::Laplace {
                scale: 1.0
                    / params(&|s| match s {
                        S::Laplace { scale } => Some((1.0 / scale, 0.0)),
                        _ => None,
                    })?
                    .iter()
                    .map(|a| a.0)
                    .sum::<f64>(),
            },
            Family::Pareto => {
                let ab = params(&|s| match s {
                    S::Pareto { alpha, beta } => Some((*alpha, *beta)),
                    _ => None,
                })?;
                S::Pareto {
                    alpha: ab.iter().map(|a| a.0).sum::<f64>() + n - 1.0,
                    beta: ab.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max),
                }
            }
            Family::Exponential => S::Exponential {
                mean: 1.0
                    / params(&|s| match s {
                        S::Exponential { mean } => Some((1.0 / mean, 0.0)),
                        _ => None,
                    })?
                    .iter()
                    .map(|a| a.0)
                    .sum::<f64>(),
            },
            Family::Gamma | Family::ChiSquare => return gamma_rule(specs),
            Family::Poisson | Family::Cmp => return cmp_rule(specs),
            Family::Truncated => return truncated_rule(specs),
            _ => return None,
        }
    } else {
        let fams: Vec<Family> = specs.iter().map(|s| s.family()).collect();
        if fams.iter().all(|f| matches!(f, Family::Poisson | Family::Cmp)) {
            return cmp_rule(specs);
        }
        if fams
            .iter()
            .all(|f| matches!(f, Family::Gamma | Family::ChiSquare | Family::Exponential))
        {
            return gamma_rule(specs);
        }
        return None;
    };
    Some(Outcome::Spec(spec))
}

fn gamma_rule(specs: &[&DistributionSpec]) -> Option<Outcome> {
    use DistributionSpec as S;
    let n = specs.len() as f64;
    let mut alpha = -(n - 1.0);
    let mut rate = 0.0;
    for s in specs {
        let (a, b) = match s {
            S::Gamma { alpha, beta } => (*alpha, *beta),
            S::ChiSquare { k } => (*k as f64 / 2.0, 2.0),
            S::Exponential { mean } => (1.0, *mean),
            _ => return None,
        };
        alpha += a;
        rate += 1.0 / b;
    }
    if !(alpha > 0.0) {
        return Some(Outcome::Fallback(format!(
            "gamma rule gives alpha = {alpha}; the density product is not integrable at 0"
        )));
    }
    Some(Outcome::Spec(S::Gamma {
        alpha,
        beta: 1.0 / rate,
    }))
}

fn cmp_rule(specs: &[&DistributionSpec]) -> Option<Outcome> {
    use DistributionSpec as S;
    let mut lambda = 1.0;
    let mut nu = 0u32;
    for s in specs {
        let (l, v) = match s {
            S::Poisson { lambda } => (*lambda, 1),
            S::Cmp { lambda, nu } => (*lambda, *nu),
            _ => return None,
        };
        lambda *= l;
        nu = nu.checked_add(v)?;
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Some(Outcome::Fallback(format!("CMP rule gives lambda = {lambda}")));
    }
    Some(Outcome::Spec(S::Cmp { lambda, nu }))
}

/// Truncations of one family: conflate the inner laws and intersect windows.
fn truncated_rule(specs: &[&DistributionSpec]) -> Option<Outcome> {
    use DistributionSpec as S;
    let mut inners = Vec::new();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for s in specs {
        let S::Truncated { inner, lo: l, hi: h } = s else {
            return None;
        };
        inners.push(&**inner);
        lo = lo.max(*l);
        hi = hi.min(*h);
    }
    let fam = inners[0].family();
    if inners.iter().any(|s| s.family() != fam) {
        return None;
    }
    let discrete = inners[0].is_discrete();
    if lo > hi || (lo == hi && !discrete) {
        return Some(Outcome::Undefined(Error::Incompatible(format!(
            "truncation windows do not intersect (lo = {lo}, hi = {hi})"
        ))));
    }
    match rule(&inners)? {
        Outcome::Spec(inner) => {
            let spec = S::Truncated {
                inner: Box::new(inner),
                lo,
                hi,
            };
            match Distribution::new(spec.clone()) {
                Ok(_) => Some(Outcome::Spec(spec)),
                Err(e) => Some(Outcome::Fallback(format!("truncated rule: {e}"))),
            }
        }
        // The window may make a product integrable that is not on the full line.
        Outcome::Undefined(e) => Some(Outcome::Fallback(e.to_string())),
        fallback => Some(fallback),
    }
}

pub(crate) fn closed_form_outcome(dists: &[Distribution]) -> Option<Outcome> {
    let specs: Vec<&DistributionSpec> = dists.iter().map(|d| d.spec()).collect();
    match rule(&specs)? {
        Outcome::Spec(spec) => match Distribution::new(spec) {
            Ok(d) => Some(Outcome::Spec(d.into_spec())),
            Err(e) => Some(Outcome::Fallback(format!("derived parameters are invalid: {e}"))),
        },
        other => Some(other),
    }
}

/// The closed-form conflation spec of the inputs, when a family rule applies
/// and its parameters are valid.
pub fn closed_form_spec(specs: &[DistributionSpec]) -> Result<Option<DistributionSpec>> {
    let dists = canonical_inputs(specs)?;
    match closed_form_outcome(&dists) {
        Some(Outcome::Spec(s)) => Ok(Some(s)),
        Some(Outcome::Undefined(e)) => Err(e),
        _ => Ok(None),
    }
}

/// Builds the result for a closed-form spec; the normalizer is
/// `prod f_i(x) / q(x)` at a central point `x` of the result `q`.
pub(crate) fn finish(dists: &[Distribution], spec: DistributionSpec) -> Result<ConflationResult> {
    let q = Distribution::new(spec.clone())?;
    let mut ln_norm = f64::NAN;
    for p in [0.5, 0.25, 0.75, 0.1, 0.9] {
        let x = q.quantile(p);
        let lq = q.ln_eval(x);
        let lp: f64 = dists.iter().map(|d| d.ln_eval(x)).sum();
        if lq.is_finite() && lp.is_finite() {
            ln_norm = lp - lq;
            break;
        }
    }
    if ln_norm < -745.0 {
        return Err(Error::NormalizerUnderflow { ln_norm });
    }
    Ok(ConflationResult::new(
        ConflationForm::ClosedForm(spec),
        ln_norm.exp(),
        Engine::ClosedForm,
    ))
}

/// Closed-form conflation. When the family rule yields invalid parameters
/// the grid (or discrete) engine is used instead and a warning records why.
pub fn conflate_closed_form(specs: &[DistributionSpec]) -> Result<ConflationResult> {
    let dists = canonical_inputs(specs)?;
    if dists.len() > 1 && closed_form_outcome(&dists).is_none() {
        return Err(Error::InvalidArgument(
            "no closed-form rule applies to these families".into(),
        ));
    }
    conflate_dists(&dists, &GridOptions::default())
}

/// Conflation of truncated laws sharing an inner family.
pub fn conflate_truncated(specs: &[DistributionSpec]) -> Result<ConflationResult> {
    if !specs.iter().all(|s| matches!(s, DistributionSpec::Truncated { .. })) {
        return Err(Error::InvalidArgument("every input must be truncated".into()));
    }
    conflate_closed_form(specs)
}
