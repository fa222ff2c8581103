use alloc::string::String;

use crate::tensor::PairIndex;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate distribution: {0}")]
    Degenerate(&'static str),

    #[error("index sets differ at pair {pair}: {reason}")]
    Misaligned { pair: PairIndex, reason: &'static str },

    #[error("index sets differ in size ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },

    #[error("rejection region too small{}: acceptance rate {acceptance:.3e}", at_pair(.pair))]
    RejectionMassTooSmall { pair: Option<PairIndex>, acceptance: f64 },

    #[error("target gap {target} unreachable: gap at p in [{low}, {high}] spans [{gap_low}, {gap_high}]")]
    Unreachable {
        target: f64,
        low: f64,
        high: f64,
        gap_low: f64,
        gap_high: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(&'static str),

    #[error("invalid data: {0}")]
    Data(String),
}

fn at_pair(pair: &Option<PairIndex>) -> String {
    match pair {
        Some(p) => alloc::format!(" for pair {p}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by numerical limits rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::Unreachable { .. } | Error::RejectionMassTooSmall { .. }
        )
    }
}
