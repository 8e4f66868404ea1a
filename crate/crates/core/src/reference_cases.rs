//! Worked cases with known answers, run by `conflate verify`.

use serde::{Deserialize, Serialize};

use crate::conflation::{conflate, conflate_grid, ConflationForm};
use crate::diagnostics::{convolution_check, symmetric_grid};
use crate::distributions::{Distribution, DistributionSpec};
use crate::dyadic::mu_j;
use crate::error::Result;
use crate::fusion::{blue_estimate, compare_conflation_vs_wls};
use crate::json::to_canonical_string;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn bernoullis() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::bernoulli(1.0 / 3.0),
        DistributionSpec::bernoulli(0.25),
    ]
}

fn atom_error(form_atoms: &[(f64, f64)], want: &[(f64, f64)]) -> f64 {
    if form_atoms.len() != want.len() {
        return f64::INFINITY;
    }
    form_atoms
        .iter()
        .zip(want)
        .map(|(a, b)| if a.0 == b.0 { (a.1 - b.1).abs() } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn pmf_of(specs: &[DistributionSpec]) -> Result<(Vec<(f64, f64)>, f64)> {
    let r = conflate(specs)?;
    let atoms = r.distribution()?.atoms(1e-15)?.0;
    Ok((atoms, r.norm_constant))
}

fn dyadic_bernoulli() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for j in 1..=10 {
        let mu = mu_j(&bernoullis(), j, (-1.0, 2.0))?;
        let h = mu.cell_width();
        let pts: Vec<(f64, f64)> = mu
            .masses
            .iter()
            .map(|&(k, m)| (k as f64 * h, m))
            .filter(|a| a.1 > 0.0)
            .collect();
        worst = worst.max(atom_error(&pts, &[(0.0, 0.5), (1.0, 1.0 / 12.0)]));
    }
    Ok((worst <= 1e-15, format!("max mass error over levels 1..10: {worst:e}")))
}

fn bernoulli_pair() -> Result<(bool, String)> {
    let (atoms, z) = pmf_of(&bernoullis())?;
    let e = atom_error(&atoms, &[(0.0, 6.0 / 7.0), (1.0, 1.0 / 7.0)]).max((z - 7.0 / 12.0).abs());
    Ok((e <= 1e-12, format!("pmf {atoms:?}, normalizer {z}")))
}

fn normal_bernoulli() -> Result<(bool, String)> {
    let (atoms, _) = pmf_of(&[
        DistributionSpec::normal(0.0, 1.0),
        DistributionSpec::bernoulli(1.0 / 3.0),
    ])?;
    let w = (-0.5f64).exp();
    let e = atom_error(&atoms, &[(0.0, 2.0 / (2.0 + w)), (1.0, w / (2.0 + w))]);
    Ok((e <= 1e-12, format!("pmf {atoms:?}")))
}

fn binomial_poisson() -> Result<(bool, String)> {
    let (atoms, _) = pmf_of(&[
        DistributionSpec::Binomial { n: 2, p: 1.0 / 3.0 },
        DistributionSpec::Poisson { lambda: 5.0 },
    ])?;
    let e = atom_error(&atoms, &[(0.0, 8.0 / 73.0), (1.0, 40.0 / 73.0), (2.0, 25.0 / 73.0)]);
    Ok((e <= 1e-12, format!("pmf {atoms:?}")))
}

fn normal_exponential() -> Result<(bool, String)> {
    let specs = [DistributionSpec::normal(0.0, 1.0), DistributionSpec::exponential(1.0)];
    let q = conflate(&specs)?.distribution()?;
    let want = Distribution::new(DistributionSpec::truncated(
        DistributionSpec::normal(-1.0, 1.0),
        0.0,
        f64::INFINITY,
    ))?;
    let worst = (0..=800)
        .map(|i| i as f64 / 100.0)
        .map(|x| (q.eval(x) - want.eval(x)).abs())
        .fold(0.0, f64::max);
    Ok((
        worst <= 1e-6,
        format!("sup density error vs shifted truncated normal: {worst:e}"),
    ))
}

fn standard_normal_pair() -> Result<(bool, String)> {
    let n = DistributionSpec::normal(0.0, 1.0);
    let r = conflate(&[n.clone(), n.clone()])?;
    let exact = matches!(r.form, ConflationForm::ClosedForm(DistributionSpec::Normal { mu, sigma2 }) if mu == 0.0 && sigma2 == 0.5);
    let residual = convolution_check(&n, &n, &symmetric_grid(10.0, 201))?;
    Ok((
        exact && residual <= 1e-6,
        format!(
            "result {}, convolution residual {residual:e}",
            to_canonical_string(&r.to_spec())
        ),
    ))
}

fn gaussian_fusion() -> Result<(bool, String)> {
    let specs = [DistributionSpec::normal(1.0, 1.0), DistributionSpec::normal(2.0, 4.0)];
    let r = conflate(&specs)?;
    let exact = matches!(r.form, ConflationForm::ClosedForm(DistributionSpec::Normal { mu, sigma2 })
        if (mu - 1.2).abs() < 1e-15 && (sigma2 - 0.8).abs() < 1e-15);
    let q = r.distribution()?;
    let g = conflate_grid(&specs, None)?;
    let ConflationForm::Grid(grid) = &g.form else {
        unreachable!()
    };
    let sup = grid
        .points()
        .iter()
        .zip(grid.values())
        .map(|(&x, &v)| (v / grid.norm() - q.eval(x)).abs())
        .fold(0.0, f64::max);
    let blue = blue_estimate(&[1.0, 2.0], &[1.0, 4.0])?;
    Ok((
        exact && sup <= 1e-6 && (blue.value - 1.2).abs() < 1e-15,
        format!(
            "closed form {}, grid sup error {sup:e}",
            to_canonical_string(&r.to_spec())
        ),
    ))
}

fn uniform_wls() -> Result<(bool, String)> {
    let c = compare_conflation_vs_wls(
        &DistributionSpec::uniform(0.0, 1.0),
        &DistributionSpec::uniform(-0.1, 1.0),
    )?;
    let blue = blue_estimate(&[0.5, 0.45], &[1.0 / 12.0, 1.21 / 12.0])?;
    Ok((
        (c.conflation_mean - 0.5).abs() <= 1e-9 && blue.value < 0.48,
        format!(
            "conflation mean {}, weighted least squares {}",
            c.conflation_mean, blue.value
        ),
    ))
}

type Case = fn() -> Result<(bool, String)>;

/// Every reference case, in a fixed order.
pub fn run_reference_cases() -> Vec<CaseOutcome> {
    let cases: [(&str, Case); 8] = [
        ("dyadic measures of two Bernoulli laws, levels 1-10", dyadic_bernoulli),
        ("Bernoulli(1/3) & Bernoulli(1/4)", bernoulli_pair),
        ("N(0,1) & Bernoulli(1/3)", normal_bernoulli),
        ("binomial(2,1/3) & Poisson(5)", binomial_poisson),
        ("N(0,1) & exponential(1)", normal_exponential),
        ("N(0,1) & N(0,1), with convolution check", standard_normal_pair),
        ("N(1,1) & N(2,4), closed form and grid", gaussian_fusion),
        ("U(0,1) & U(-0.1,1) against weighted least squares", uniform_wls),
    ];
    cases
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            CaseOutcome {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_reference_cases_pass() {
        for c in run_reference_cases() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
