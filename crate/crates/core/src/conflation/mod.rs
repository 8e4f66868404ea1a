//! Conflation engines and the dispatcher.
//!
//! [`conflate`] picks a closed-form family rule when one applies, the exact
//! discrete product for discrete (or mixed) inputs, and grid quadrature for
//! absolutely continuous inputs. Inputs are put in a canonical order first, so
//! any permutation of the same inputs gives a bit-identical result.

mod closed_form;
mod discrete;
mod grid;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::{Distribution, DistributionSpec, GridDensity};
use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

pub use closed_form::{closed_form_spec, conflate_closed_form, conflate_truncated};
pub use discrete::conflate_discrete;
pub use grid::{conflate_grid, conflate_grid_with, GridOptions};

/// Warning code for a product of densities whose integral diverges.
pub const NON_INTEGRABLE_PRODUCT: &str = "NonIntegrableProduct";
/// Warning code for a closed-form rule whose derived parameters are invalid.
pub const CLOSED_FORM_FALLBACK: &str = "ClosedFormFallback";
/// Warning code for mixed discrete and continuous inputs.
pub const MIXED_KINDS: &str = "MixedKinds";
/// Warning code for a grid normalizer that did not reach its tolerance.
pub const SLOW_CONVERGENCE: &str = "SlowConvergence";

/// Which engine produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    ClosedForm,
    DiscreteProduct,
    GridQuadrature,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::ClosedForm => "closed_form",
            Engine::DiscreteProduct => "discrete_product",
            Engine::GridQuadrature => "grid_quadrature",
        }
    }
}

/// The conflated law.
#[derive(Clone, Debug, PartialEq)]
pub enum ConflationForm {
    ClosedForm(DistributionSpec),
    Discrete(DiscretePmf),
    Grid(GridDensity),
}

impl ConflationForm {
    pub fn to_spec(&self) -> DistributionSpec {
        match self {
            ConflationForm::ClosedForm(s) => s.clone(),
            ConflationForm::Discrete(p) => p.to_spec(),
            ConflationForm::Grid(g) => DistributionSpec::Grid(g.clone()),
        }
    }
}

/// Output of every conflation engine.
///
/// `norm_constant` is the normalizer of the product: the sum over common atoms
/// of the pmf products, or the integral of the density product. It is infinite
/// when the product is not integrable, in which case `form` is a point mass at
/// `concentration`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConflationResult {
    pub form: ConflationForm,
    pub norm_constant: f64,
    pub engine: Engine,
    pub warnings: Vec<String>,
    pub concentration: Option<f64>,
}

impl ConflationResult {
    pub(crate) fn new(form: ConflationForm, norm_constant: f64, engine: Engine) -> Self {
        ConflationResult {
            form,
            norm_constant,
            engine,
            warnings: Vec::new(),
            concentration: None,
        }
    }

    pub fn to_spec(&self) -> DistributionSpec {
        self.form.to_spec()
    }

    pub fn distribution(&self) -> Result<Distribution> {
        Distribution::new(self.to_spec())
    }

    /// Mean and variance of the conflated law.
    pub fn moments(&self) -> Result<(f64, f64)> {
        match &self.form {
            ConflationForm::Discrete(p) => Ok(p.moments()),
            ConflationForm::Grid(g) => Ok(g.moments()),
            ConflationForm::ClosedForm(s) => Distribution::new(s.clone())?.moments(),
        }
    }

    /// Mass left out by an enumeration, relative to the normalizer.
    pub fn tail_bound(&self) -> f64 {
        match &self.form {
            ConflationForm::Discrete(p) => p.tail_bound(),
            _ => 0.0,
        }
    }

    /// True when some warning starts with `code`.
    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings.iter().any(|w| w.starts_with(code))
    }

    pub fn is_discrete(&self) -> bool {
        match &self.form {
            ConflationForm::ClosedForm(s) => s.is_discrete(),
            ConflationForm::Discrete(_) => true,
            ConflationForm::Grid(_) => false,
        }
    }

    /// Canonical JSON (sorted keys, shortest floats), newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = crate::json::to_canonical_string(self);
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Plot-ready CSV: `x,mass` for discrete laws, `x,density` otherwise.
    ///
    /// Closed-form continuous laws are tabulated at `points` equally spaced
    /// points between their 1e-6 and 1 - 1e-6 quantiles.
    pub fn to_csv(&self, points: usize) -> Result<String> {
        let mut out = String::new();
        let rows: Vec<(f64, f64)> = match &self.form {
            ConflationForm::Discrete(p) => p.atoms().to_vec(),
            ConflationForm::Grid(g) => g.points().iter().copied().zip(g.values().iter().copied()).collect(),
            ConflationForm::ClosedForm(s) => {
                let d = Distribution::new(s.clone())?;
                if d.is_discrete() {
                    let lo = d.quantile(0.0);
                    let hi = d.quantile(1.0 - 1e-12);
                    d.atoms_in(lo, hi)?
                } else {
                    let lo = d.quantile(1e-6);
                    let hi = d.quantile(1.0 - 1e-6);
                    let n = points.max(2);
                    (0..n)
                        .map(|i| {
                            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                            (x, d.eval(x))
                        })
                        .collect()
                }
            }
        };
        out.push_str(if self.is_discrete() { "x,mass\n" } else { "x,density\n" });
        for (x, v) in rows {
            out.push_str(&format!("{x},{v}\n"));
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct ResultRepr {
    engine: Engine,
    form: DistributionSpec,
    #[serde(with = "crate::json::ext_real")]
    norm_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(default)]
    warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concentration: Option<f64>,
}

impl Serialize for ConflationResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ResultRepr {
            engine: self.engine,
            form: self.to_spec(),
            norm_constant: self.norm_constant,
            tail_bound: match &self.form {
                ConflationForm::Discrete(p) => Some(p.tail_bound()),
                _ => None,
            },
            warnings: self.warnings.clone(),
            concentration: self.concentration,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConflationResult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ResultRepr::deserialize(d)?;
        let form = match r.form {
            DistributionSpec::PmfTable { atoms } => ConflationForm::Discrete(
                DiscretePmf::new(atoms, r.tail_bound.unwrap_or(0.0)).map_err(D::Error::custom)?,
            ),
            DistributionSpec::Grid(g) => ConflationForm::Grid(g),
            s => ConflationForm::ClosedForm(s),
        };
        Ok(ConflationResult {
            form,
            norm_constant: r.norm_constant,
            engine: r.engine,
            warnings: r.warnings,
            concentration: r.concentration,
        })
    }
}

/// Validates every spec and sorts them by canonical JSON.
pub(crate) fn canonical_inputs(specs: &[DistributionSpec]) -> Result<Vec<Distribution>> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut keyed = specs
        .iter()
        .map(|s| {
            let d = Distribution::new(s.clone())?;
            Ok((d.spec().to_canonical_json(), d))
        })
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, d)| d).collect())
}

/// Intersection of the support hulls.
pub(crate) fn hull_intersection(dists: &[&Distribution]) -> (f64, f64) {
    dists.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), d| {
        let (a, b) = d.support().hull();
        (lo.max(a), hi.min(b))
    })
}

/// Whether the inputs have a common region of positive product mass: a common
/// atom when all are discrete, overlapping supports when all are continuous,
/// and a common atom of the discrete inputs with positive density under every
/// continuous input when they are mixed.
pub fn compatible(specs: &[DistributionSpec]) -> bool {
    let Ok(dists) = canonical_inputs(specs) else {
        return false;
    };
    compatible_dists(&dists)
}

pub(crate) fn compatible_dists(dists: &[Distribution]) -> bool {
    if dists.iter().any(|d| d.is_discrete()) {
        return discrete::has_common_atom(dists);
    }
    let all: Vec<&Distribution> = dists.iter().collect();
    let (lo, hi) = hull_intersection(&all);
    lo < hi
}

/// Conflation of the inputs by the most specific engine available.
///
/// Precedence: closed-form family rules, then the discrete product (also used
/// for mixed discrete and continuous inputs, with density values at the
/// common atoms), then grid quadrature. A single input is returned unchanged.
pub fn conflate(specs: &[DistributionSpec]) -> Result<ConflationResult> {
    let dists = canonical_inputs(specs)?;
    conflate_dists(&dists, &GridOptions::default())
}

/// [`conflate`] with explicit grid settings for the quadrature engine.
pub fn conflate_with(specs: &[DistributionSpec], grid: &GridOptions) -> Result<ConflationResult> {
    let dists = canonical_inputs(specs)?;
    conflate_dists(&dists, grid)
}

pub(crate) fn conflate_dists(dists: &[Distribution], grid: &GridOptions) -> Result<ConflationResult> {
    if dists.len() == 1 {
        return Ok(identity(&dists[0]));
    }
    let mut warnings = Vec::new();
    match closed_form::closed_form_outcome(dists) {
        Some(closed_form::Outcome::Spec(spec)) => return closed_form::finish(dists, spec),
        Some(closed_form::Outcome::Undefined(e)) => return Err(e),
        Some(closed_form::Outcome::Fallback(msg)) => warnings.push(format!("{CLOSED_FORM_FALLBACK}: {msg}")),
        None => {}
    }
    let any_discrete = dists.iter().any(|d| d.is_discrete());
    let mut result = if any_discrete {
        discrete::discrete_engine(dists)?
    } else {
        grid::grid_engine(dists, grid)?
    };
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}

fn identity(d: &Distribution) -> ConflationResult {
    let form = match d.spec() {
        DistributionSpec::PmfTable { atoms } => {
            ConflationForm::Discrete(DiscretePmf::new(atoms.clone(), 0.0).expect("validated table"))
        }
        DistributionSpec::Grid(g) => ConflationForm::Grid(g.clone()),
        s => ConflationForm::ClosedForm(s.clone()),
    };
    ConflationResult::new(form, 1.0, Engine::ClosedForm)
}

#[cfg(test)]
mod tests;
