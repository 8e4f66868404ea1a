//! Conflation of probability distributions.
//!
//! The conflation of `P_1, ..., P_n` is their normalized product: the
//! normalized product of pmfs for discrete inputs and of densities for
//! absolutely continuous ones. This crate computes it by closed-form family
//! rules, exact discrete products or grid quadrature, checks it against a
//! brute-force dyadic-limit oracle, and evaluates the information-loss,
//! likelihood-ratio and proportionality diagnostics that characterize it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conflation;
pub mod diagnostics;
pub mod distributions;
pub mod dyadic;
pub mod error;
pub mod fusion;
pub mod json;
pub mod pmf;
pub mod quadrature;
pub mod reference_cases;
pub mod sampler;

pub use conflation::{compatible, conflate, ConflationForm, ConflationResult, Engine};
pub use distributions::{validate, Distribution, DistributionSpec, Family, GridDensity, SupportDescriptor};
pub use error::{Error, Result};
pub use pmf::DiscretePmf;
