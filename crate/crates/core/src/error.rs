use thiserror::Error;

/// Errors raised by the state, channel and MIMO layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the exact-simulation limit of {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{name} = {value} is outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("mode {mode} is out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("invalid crosstalk blocks: {0}")]
    InvalidBlocks(String),

    #[error("crosstalk cannot act on a branch with erased modes; apply it before erasure")]
    CrosstalkAfterErasure,

    #[error("{what} = {value} exceeds the cap of {cap}")]
    CapacityExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value })
    }
}
