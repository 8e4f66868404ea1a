//! Inverse-variance fusion of independent measurements.

use serde::{Deserialize, Serialize};

use crate::conflation::conflate;
use crate::distributions::{Distribution, DistributionSpec};
use crate::error::{Error, Result};

/// A fused estimate with its variance and the normalized weights used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionEstimate {
    pub value: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
}

fn check_inputs(values: &[f64], variances: &[f64]) -> Result<()> {
    if values.len() != variances.len() {
        return Err(Error::LengthMismatch(values.len(), variances.len()));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!("variance {v} is not positive")));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("value {x} is not finite")));
    }
    Ok(())
}

/// Mean and variance of the normalized product of `N(means[i], variances[i])`:
/// precision-weighted mean and the reciprocal of the summed precisions.
pub fn gaussian_conflation_params(means: &[f64], variances: &[f64]) -> Result<(f64, f64)> {
    check_inputs(means, variances)?;
    let precision: f64 = variances.iter().map(|v| 1.0 / v).sum();
    let weighted: f64 = means.iter().zip(variances).map(|(m, v)| m / v).sum();
    Ok((weighted / precision, 1.0 / precision))
}

/// Weighted least squares (best linear unbiased) combination of unbiased
/// observations with known variances.
pub fn blue_estimate(observations: &[f64], variances: &[f64]) -> Result<FusionEstimate> {
    let (value, variance) = gaussian_conflation_params(observations, variances)?;
    let weights = variances.iter().map(|v| variance / v).collect();
    Ok(FusionEstimate {
        value,
        variance,
        weights,
    })
}

/// Conflation mean next to the inverse-variance weighted mean of two inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WlsComparison {
    pub conflation_mean: f64,
    pub conflation_variance: f64,
    pub wls_value: f64,
    pub wls_variance: f64,
}

pub fn compare_conflation_vs_wls(spec1: &DistributionSpec, spec2: &DistributionSpec) -> Result<WlsComparison> {
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for s in [spec1, spec2] {
        let (m, v) = Distribution::new(s.clone())?.moments()?;
        means.push(m);
        vars.push(v);
    }
    let wls = blue_estimate(&means, &vars)?;
    let q = conflate(&[spec1.clone(), spec2.clone()])?;
    let (conflation_mean, conflation_variance) = q.moments()?;
    Ok(WlsComparison {
        conflation_mean,
        conflation_variance,
        wls_value: wls.value,
        wls_variance: wls.variance,
    })
}

/// Joint log-likelihood of `theta` for independent `N(theta, variances[i])`
/// observations, up to an additive constant.
pub fn normal_log_likelihood(theta: f64, observations: &[f64], variances: &[f64]) -> f64 {
    observations
        .iter()
        .zip(variances)
        .map(|(x, v)| -(x - theta) * (x - theta) / (2.0 * v))
        .sum()
}

/// First and second derivatives of [`normal_log_likelihood`] in `theta`.
pub fn normal_score(theta: f64, observations: &[f64], variances: &[f64]) -> (f64, f64) {
    let d1 = observations.iter().zip(variances).map(|(x, v)| (x - theta) / v).sum();
    let d2 = -variances.iter().map(|v| 1.0 / v).sum::<f64>();
    (d1, d2)
}
