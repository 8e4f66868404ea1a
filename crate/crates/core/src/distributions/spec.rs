//! The serializable description of an input distribution.
//!
//! JSON layout: `{"kind": "<family>", "params": {...}}` for parametric kinds,
//! `{"kind": "pmf", "atoms": [[x, m], ...]}`, `{"kind": "grid", "points": [...],
//! "values": [...]}` and `{"kind": "truncated", "inner": {...}, "lo": x, "hi": y}`.
//! Infinite truncation bounds are written as the strings `"-inf"` / `"inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::GridDensity;

/// Tagged description of a univariate distribution.
///
/// Parameterizations: `Gamma { alpha, beta }` has density proportional to
/// `x^(alpha-1) e^(-x/beta)`; `Pareto { alpha, beta }` has density
/// `alpha beta^alpha x^-(alpha+1)` on `(beta, inf)`; `Laplace` is centered at 0
/// with density `e^(-|x|/scale) / (2 scale)`; `Cmp { lambda, nu }` is the
/// Conway-Maxwell-Poisson family with pmf proportional to `lambda^k / (k!)^nu`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Normal {
        mu: f64,
        sigma2: f64,
    },
    Exponential {
        mean: f64,
    },
    Gamma {
        alpha: f64,
        beta: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Laplace {
        scale: f64,
    },
    Pareto {
        alpha: f64,
        beta: f64,
    },
    Bernoulli {
        p: f64,
    },
    Geometric {
        p: f64,
    },
    DiscreteUniform {
        n: u64,
    },
    Zipf {
        alpha: f64,
        n: u64,
    },
    Zeta {
        alpha: f64,
    },
    Poisson {
        lambda: f64,
    },
    Cmp {
        lambda: f64,
        nu: u32,
    },
    Cauchy {
        loc: f64,
        scale: f64,
    },
    Binomial {
        n: u64,
        p: f64,
    },
    ChiSquare {
        k: u32,
    },
    PmfTable {
        atoms: Vec<(f64, f64)>,
    },
    Grid(GridDensity),
    Truncated {
        inner: Box<DistributionSpec>,
        lo: f64,
        hi: f64,
    },
}

/// Family tag, used for closed-form dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Normal,
    Exponential,
    Gamma,
    Beta,
    Uniform,
    Laplace,
    Pareto,
    Bernoulli,
    Geometric,
    DiscreteUniform,
    Zipf,
    Zeta,
    Poisson,
    Cmp,
    Cauchy,
    Binomial,
    ChiSquare,
    PmfTable,
    Grid,
    Truncated,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::Beta => "beta",
            Family::Uniform => "uniform",
            Family::Laplace => "laplace",
            Family::Pareto => "pareto",
            Family::Bernoulli => "bernoulli",
            Family::Geometric => "geometric",
            Family::DiscreteUniform => "discrete_uniform",
            Family::Zipf => "zipf",
            Family::Zeta => "zeta",
            Family::Poisson => "poisson",
            Family::Cmp => "cmp",
            Family::Cauchy => "cauchy",
            Family::Binomial => "binomial",
            Family::ChiSquare => "chi_square",
            Family::PmfTable => "pmf",
            Family::Grid => "grid",
            Family::Truncated => "truncated",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            Family::Bernoulli
                | Family::Geometric
                | Family::DiscreteUniform
                | Family::Zipf
                | Family::Zeta
                | Family::Poisson
                | Family::Cmp
                | Family::Binomial
                | Family::PmfTable
        )
    }
}

impl DistributionSpec {
    pub fn family(&self) -> Family {
        use DistributionSpec::*;
        match self {
            Normal { .. } => Family::Normal,
            Exponential { .. } => Family::Exponential,
            Gamma { .. } => Family::Gamma,
            Beta { .. } => Family::Beta,
            Uniform { .. } => Family::Uniform,
            Laplace { .. } => Family::Laplace,
            Pareto { .. } => Family::Pareto,
            Bernoulli { .. } => Family::Bernoulli,
            Geometric { .. } => Family::Geometric,
            DiscreteUniform { .. } => Family::DiscreteUniform,
            Zipf { .. } => Family::Zipf,
            Zeta { .. } => Family::Zeta,
            Poisson { .. } => Family::Poisson,
            Cmp { .. } => Family::Cmp,
            Cauchy { .. } => Family::Cauchy,
            Binomial { .. } => Family::Binomial,
            ChiSquare { .. } => Family::ChiSquare,
            PmfTable { .. } => Family::PmfTable,
            Grid(_) => Family::Grid,
            Truncated { .. } => Family::Truncated,
        }
    }

    /// Discrete kinds (truncations inherit the kind of their inner spec).
    pub fn is_discrete(&self) -> bool {
        match self {
            DistributionSpec::Truncated { inner, .. } => inner.is_discrete(),
            other => other.family().is_discrete(),
        }
    }

    /// Canonical JSON text (sorted keys, shortest round-trip floats).
    pub fn to_canonical_json(&self) -> String {
        crate::json::to_canonical_string(self)
    }

    pub fn normal(mu: f64, sigma2: f64) -> Self {
        DistributionSpec::Normal { mu, sigma2 }
    }

    pub fn bernoulli(p: f64) -> Self {
        DistributionSpec::Bernoulli { p }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        DistributionSpec::Uniform { a, b }
    }

    pub fn exponential(mean: f64) -> Self {
        DistributionSpec::Exponential { mean }
    }

    pub fn pmf(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        DistributionSpec::PmfTable {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn truncated(inner: DistributionSpec, lo: f64, hi: f64) -> Self {
        DistributionSpec::Truncated {
            inner: Box::new(inner),
            lo,
            hi,
        }
    }
}

// ---------------------------------------------------------------------------
// serde

macro_rules! params {
    ($name:ident { $($field:ident : $ty:ty),* }) => {
        #[derive(Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name { $($field: $ty),* }
    };
}

params!(NormalParams { mu: f64, sigma2: f64 });
params!(ExponentialParams { mean: f64 });
params!(ShapeParams { alpha: f64, beta: f64 });
params!(UniformParams { a: f64, b: f64 });
params!(ScaleParams { scale: f64 });
params!(ProbParams { p: f64 });
params!(CountParams { n: u64 });
params!(ZipfParams { alpha: f64, n: u64 });
params!(ZetaParams { alpha: f64 });
params!(PoissonParams { lambda: f64 });
params!(CmpParams { lambda: f64, nu: u32 });
params!(CauchyParams { loc: f64, scale: f64 });
params!(BinomialParams { n: u64, p: f64 });
params!(ChiSquareParams { k: u32 });

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Repr {
    Normal {
        params: NormalParams,
    },
    Exponential {
        params: ExponentialParams,
    },
    Gamma {
        params: ShapeParams,
    },
    Beta {
        params: ShapeParams,
    },
    Uniform {
        params: UniformParams,
    },
    Laplace {
        params: ScaleParams,
    },
    Pareto {
        params: ShapeParams,
    },
    Bernoulli {
        params: ProbParams,
    },
    Geometric {
        params: ProbParams,
    },
    DiscreteUniform {
        params: CountParams,
    },
    Zipf {
        params: ZipfParams,
    },
    Zeta {
        params: ZetaParams,
    },
    Poisson {
        params: PoissonParams,
    },
    Cmp {
        params: CmpParams,
    },
    Cauchy {
        params: CauchyParams,
    },
    Binomial {
        params: BinomialParams,
    },
    ChiSquare {
        params: ChiSquareParams,
    },
    Pmf {
        atoms: Vec<(f64, f64)>,
    },
    Grid(GridDensity),
    Truncated {
        inner: Box<Repr>,
        #[serde(with = "crate::json::ext_real")]
        lo: f64,
        #[serde(with = "crate::json::ext_real")]
        hi: f64,
    },
}

impl From<&DistributionSpec> for Repr {
    fn from(spec: &DistributionSpec) -> Self {
        use DistributionSpec as S;
        match spec.clone() {
            S::Normal { mu, sigma2 } => Repr::Normal {
                params: NormalParams { mu, sigma2 },
            },
            S::Exponential { mean } => Repr::Exponential {
                params: ExponentialParams { mean },
            },
            S::Gamma { alpha, beta } => Repr::Gamma {
                params: ShapeParams { alpha, beta },
            },
            S::Beta { alpha, beta } => Repr::Beta {
                params: ShapeParams { alpha, beta },
            },
            S::Uniform { a, b } => Repr::Uniform {
                params: UniformParams { a, b },
            },
            S::Laplace { scale } => Repr::Laplace {
                params: ScaleParams { scale },
            },
            S::Pareto { alpha, beta } => Repr::Pareto {
                params: ShapeParams { alpha, beta },
            },
            S::Bernoulli { p } => Repr::Bernoulli {
                params: ProbParams { p },
            },
            S::Geometric { p } => Repr::Geometric {
                params: ProbParams { p },
            },
            S::DiscreteUniform { n } => Repr::DiscreteUniform {
                params: CountParams { n },
            },
            S::Zipf { alpha, n } => Repr::Zipf {
                params: ZipfParams { alpha, n },
            },
            S::Zeta { alpha } => Repr::Zeta {
                params: ZetaParams { alpha },
            },
            S::Poisson { lambda } => Repr::Poisson {
                params: PoissonParams { lambda },
            },
            S::Cmp { lambda, nu } => Repr::Cmp {
                params: CmpParams { lambda, nu },
            },
            S::Cauchy { loc, scale } => Repr::Cauchy {
                params: CauchyParams { loc, scale },
            },
            S::Binomial { n, p } => Repr::Binomial {
                params: BinomialParams { n, p },
            },
            S::ChiSquare { k } => Repr::ChiSquare {
                params: ChiSquareParams { k },
            },
            S::PmfTable { atoms } => Repr::Pmf { atoms },
            S::Grid(g) => Repr::Grid(g),
            S::Truncated { inner, lo, hi } => Repr::Truncated {
                inner: Box::new(Repr::from(&*inner)),
                lo,
                hi,
            },
        }
    }
}

impl From<Repr> for DistributionSpec {
    fn from(r: Repr) -> Self {
        use DistributionSpec as S;
        match r {
            Repr::Normal { params: p } => S::Normal {
                mu: p.mu,
                sigma2: p.sigma2,
            },
            Repr::Exponential { params: p } => S::Exponential { mean: p.mean },
            Repr::Gamma { params: p } => S::Gamma {
                alpha: p.alpha,
                beta: p.beta,
            },
            Repr::Beta { params: p } => S::Beta {
                alpha: p.alpha,
                beta: p.beta,
            },
            Repr::Uniform { params: p } => S::Uniform { a: p.a, b: p.b },
            Repr::Laplace { params: p } => S::Laplace { scale: p.scale },
            Repr::Pareto { params: p } => S::Pareto {
                alpha: p.alpha,
                beta: p.beta,
            },
            Repr::Bernoulli { params: p } => S::Bernoulli { p: p.p },
            Repr::Geometric { params: p } => S::Geometric { p: p.p },
            Repr::DiscreteUniform { params: p } => S::DiscreteUniform { n: p.n },
            Repr::Zipf { params: p } => S::Zipf { alpha: p.alpha, n: p.n },
            Repr::Zeta { params: p } => S::Zeta { alpha: p.alpha },
            Repr::Poisson { params: p } => S::Poisson { lambda: p.lambda },
            Repr::Cmp { params: p } => S::Cmp {
                lambda: p.lambda,
                nu: p.nu,
            },
            Repr::Cauchy { params: p } => S::Cauchy {
                loc: p.loc,
                scale: p.scale,
            },
            Repr::Binomial { params: p } => S::Binomial { n: p.n, p: p.p },
            Repr::ChiSquare { params: p } => S::ChiSquare { k: p.k },
            Repr::Pmf { atoms } => S::PmfTable { atoms },
            Repr::Grid(g) => S::Grid(g),
            Repr::Truncated { inner, lo, hi } => S::Truncated {
                inner: Box::new(DistributionSpec::from(*inner)),
                lo,
                hi,
            },
        }
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Repr::deserialize(d).map(DistributionSpec::from)
    }
}
