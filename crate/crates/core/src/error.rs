use thiserror::Error;

/// Errors raised by the conflation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {family} parameter: {detail}")]
    InvalidParameter { family: &'static str, detail: String },

    #[error("probability table is not normalizable (sum = {sum})")]
    NotNormalizable { sum: f64 },

    #[error("invalid interval ({lo}, {hi}]: lower end must be below upper end")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("empty input: at least one distribution is required")]
    EmptyInput,

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("conflation undefined: {0}")]
    ConflationUndefined(String),

    #[error("normalizer underflows to zero (ln of normalizer = {ln_norm})")]
    NormalizerUnderflow { ln_norm: f64 },

    #[error("dyadic level {level} exceeds the cap {cap}")]
    LevelCap { level: u32, cap: u32 },

    #[error("dyadic window needs {cells} cells, above the limit {limit}")]
    WindowTooLarge { cells: u64, limit: u64 },

    #[error("{count} atoms exceed the exhaustive-search limit {limit}; a sampling search is not supported")]
    TooManyAtoms { count: usize, limit: usize },

    #[error("mixed kinds: {0}")]
    MixedKinds(String),

    #[error("moment does not exist: {0}")]
    DivergentMoment(String),

    #[error("not absolutely continuous: {0}")]
    NotAbsolutelyContinuous(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampler stopped after {proposed} proposals with {accepted} acceptances (needed {needed})")]
    SamplerExhausted { accepted: u64, proposed: u64, needed: u64 },
}

impl Error {
    /// True when the error reports mathematical non-existence of the conflation
    /// (incompatible inputs or no common atoms) rather than a usage problem.
    pub fn is_nonexistence(&self) -> bool {
        matches!(
            self,
            Error::Incompatible(_)
                | Error::ConflationUndefined(_)
                | Error::NormalizerUnderflow { .. }
                | Error::SamplerExhausted { .. }
        )
    }

    pub(crate) fn param(family: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            family,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
