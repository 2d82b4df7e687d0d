//! Diversity and multiplexing over noisy quantum MIMO channels.
//!
//! A link between `2^m` transmit and receive ports suffers crosstalk (a
//! probabilistic swap of port groups), erasure and depolarizing noise. The
//! crate compares sending independent streams (multiplexing) with feeding
//! approximate clones of one qubit into several ports (diversity), using
//! three engines that check each other:
//!
//! * [`mimo::analytic_general_fidelity`] and the 2×2 closed forms;
//! * exact branch-ensemble simulation ([`channels`], [`mimo::simulate_general_density`]);
//! * trajectory sampling ([`mimo::trajectory_estimate`]).
//!
//! [`experiments`] drives the region scan, DMT curves and verification
//! sweeps. Work that splits into independent tasks runs on rayon when the
//! `parallel` feature (default) is on, and sequentially otherwise, with
//! identical results either way.

pub mod channels;
pub mod cloning;
pub mod error;
pub mod experiments;
pub mod mimo;
pub mod par;
pub mod rng;
pub mod tensor;

pub use channels::{BranchEnsemble, ChannelParams, Stage};
pub use error::{Error, Result};
pub use mimo::{Engine, FidelityReport, MimoConfig};
pub use par::Execution;
pub use rng::Rng;
pub use tensor::{DensityMatrix, PureState};
