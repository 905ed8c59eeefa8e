//! Certified lower bounds on asymptotic key rates for decoy-state and
//! coincidence-detection QKD with weak coherent pulses.
//!
//! The crate is organised bottom-up: [`math`] scalar functions, the honest
//! [`channel`] model, a small [`lp`] solver with the cell sub-problem builder,
//! the partition-and-bound [`engine`], [`finite`]-size tolerances, and a
//! Monte Carlo protocol simulator in [`sim`].

pub mod channel;
pub mod engine;
pub mod error;
pub mod finite;
pub mod lp;
pub mod math;
pub mod sim;
pub mod stats_file;

pub use channel::{ChannelParams, IntensityStatistics, LinkModel};
pub use engine::{compute_rate, EngineConfig, ProtocolVariant, RateResult};
pub use error::{Error, Result};
pub use finite::{SecurityParams, ToleranceSet};
pub use math::TruncationOrder;
