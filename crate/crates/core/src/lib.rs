//! Simulation and analysis toolkit for entanglement-based BB84 key
//! distribution with polarization-entangled photon pairs.
//!
//! The pipeline runs from the two-photon source ([`states`]) through an
//! optional eavesdropper channel, detector sampling ([`detection`]) and the
//! classical post-processing ([`protocol`]) to a one-time pad ([`otp`]).
//! [`tomography`] reconstructs the two-photon density matrix from sixteen
//! projective measurements and evaluates entanglement measures and CHSH.

// `!(x > 0.0)` deliberately rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod detection;
pub mod error;
pub mod optics;
pub mod otp;
pub mod protocol;
pub mod qmath;
pub mod rng;
pub mod states;
pub mod tomography;

pub use error::{QkdError, Result};
