use crate::distributions::{Distribution, DistributionSpec, DEFAULT_TAIL_CUT};
use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

use super::{canonical_inputs, hull_intersection, ConflationForm, ConflationResult, Engine, MIXED_KINDS};

/// Exact normalized product of pmfs over the common atoms.
///
/// Infinite lattices are enumerated until the remaining mass of the input
/// with the fewest atoms drops below 1e-12; the result's `tail_bound` is that
/// remainder divided by the normalizer.
pub fn conflate_discrete(specs: &[DistributionSpec]) -> Result<ConflationResult> {
    let dists = canonical_inputs(specs)?;
    if let Some(d) = dists.iter().find(|d| !d.is_discrete()) {
        return Err(Error::MixedKinds(format!(
            "{} is not discrete; use conflate for mixed inputs",
            d.family().name()
        )));
    }
    discrete_engine(&dists)
}

/// Candidate atoms: those of the discrete input with the smallest
/// enumeration, restricted to the common hull, with the left-out tail mass.
fn candidate_atoms(dists: &[Distribution]) -> Result<(Vec<f64>, f64)> {
    let discrete: Vec<&Distribution> = dists.iter().filter(|d| d.is_discrete()).collect();
    let all: Vec<&Distribution> = dists.iter().collect();
    let (lo, hi) = hull_intersection(&all);
    if lo > hi {
        return Ok((Vec::new(), 0.0));
    }
    let chosen = discrete
        .iter()
        .min_by_key(|d| d.enumeration_size(DEFAULT_TAIL_CUT).unwrap_or(u64::MAX))
        .expect("at least one discrete input");
    let size = chosen.enumeration_size(DEFAULT_TAIL_CUT).unwrap_or(u64::MAX);
    if hi.is_finite() && lo.is_finite() && hi - lo < size as f64 {
        let atoms = chosen.atoms_in(lo, hi)?;
        return Ok((atoms.into_iter().map(|a| a.0).collect(), 0.0));
    }
    let (atoms, tail) = chosen.atoms(DEFAULT_TAIL_CUT)?;
    Ok((
        atoms
            .into_iter()
            .map(|a| a.0)
            .filter(|x| *x >= lo && *x <= hi)
            .collect(),
        tail,
    ))
}

fn ln_product(dists: &[Distribution], x: f64) -> f64 {
    let mut s = 0.0;
    for d in dists {
        let v = d.ln_eval(x);
        if !(v > f64::NEG_INFINITY) || v.is_nan() {
            return f64::NEG_INFINITY;
        }
        s += v;
    }
    s
}

pub(crate) fn has_common_atom(dists: &[Distribution]) -> bool {
    candidate_atoms(dists).is_ok_and(|(xs, _)| xs.iter().any(|&x| ln_product(dists, x).is_finite()))
}

/// Products too small for direct multiplication are taken in log space as
/// `exp(ln prod - max)`, with the normalizer recovered as `exp(max) * sum`.
pub(crate) fn discrete_engine(dists: &[Distribution]) -> Result<ConflationResult> {
    let (xs, tail) = candidate_atoms(dists)?;
    let weighted: Vec<(f64, f64)> = xs
        .into_iter()
        .map(|x| (x, ln_product(dists, x)))
        .filter(|a| a.1.is_finite())
        .collect();
    if weighted.is_empty() {
        return Err(Error::ConflationUndefined("no common atoms".into()));
    }
    let top = weighted.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    // Direct products are exact to the last bit in the common case; fall back
    // to shifted logs when some product underflows.
    let direct: Vec<(f64, f64)> = weighted
        .iter()
        .map(|&(x, _)| (x, dists.iter().map(|d| d.eval(x)).product()))
        .collect();
    let (scaled, shift) = if top > -600.0 && direct.iter().all(|a| a.1 > 1e-290 && a.1.is_finite()) {
        (direct, 0.0)
    } else {
        (
            weighted.iter().map(|&(x, l)| (x, (l - top).exp())).collect::<Vec<_>>(),
            top,
        )
    };
    let sum: f64 = scaled.iter().map(|a| a.1).sum();
    let ln_norm = shift + sum.ln();
    if ln_norm < -745.0 {
        return Err(Error::NormalizerUnderflow { ln_norm });
    }
    let norm = if shift == 0.0 { sum } else { ln_norm.exp() };
    let tail_bound = (tail / norm).min(1.0);
    let atoms = scaled
        .into_iter()
        .map(|(x, w)| (x, w / sum))
        .filter(|a| a.1 > 0.0)
        .collect();
    let pmf = DiscretePmf::new(atoms, tail_bound)?;
    let mut result = ConflationResult::new(ConflationForm::Discrete(pmf), norm, Engine::DiscreteProduct);
    if dists.iter().any(|d| !d.is_discrete()) {
        result.warnings.push(format!(
            "{MIXED_KINDS}: continuous inputs enter through their density values at the common atoms of the \
             discrete inputs; this limit form is shown by example, not proved in general"
        ));
    }
    Ok(result)
}
