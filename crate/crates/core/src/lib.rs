//! Joint transmit beamforming, reflecting-surface configuration and power
//! splitting for a multi-user MISO downlink with simultaneous wireless
//! information and power transfer.
//!
//! The solver maximizes `R^ID + λ̄·R^PH` by alternating closed-form
//! fractional-programming updates, per-user split-ratio searches, successive
//! convex approximation of the beamformer and reflection blocks (each solved
//! by a dense interior-point QCQP routine) and a per-element phase search,
//! wrapped in a penalty loop that enforces the phase-dependent amplitude
//! model of the surface.

pub mod beamforming;
pub mod channels;
pub mod error;
pub mod fp;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod qcqp;
pub mod reflection;
pub mod scalar;
mod surrogate;

pub use error::{Error, Result};
