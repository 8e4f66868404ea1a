//! Inputs shared by the benchmarks.

use conflate_core::DistributionSpec;

/// Normals with distinct means and variances.
pub fn normals(n: usize) -> Vec<DistributionSpec> {
    (0..n)
        .map(|i| DistributionSpec::normal(i as f64 * 0.25, 1.0 + 0.5 * i as f64))
        .collect()
}

/// Poisson and binomial laws with a few dozen common atoms.
pub fn counts() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::Poisson { lambda: 12.0 },
        DistributionSpec::Binomial { n: 40, p: 0.3 },
    ]
}

/// A pair with no closed form, forcing quadrature.
pub fn quadrature_pair() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::normal(0.0, 1.0),
        DistributionSpec::Laplace { scale: 1.0 },
    ]
}

pub fn bernoullis() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::bernoulli(1.0 / 3.0),
        DistributionSpec::bernoulli(0.25),
    ]
}
