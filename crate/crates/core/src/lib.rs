//! Temporal steering of a qubit crossing a cylindrical invisibility cloak.
//!
//! A probe qubit (photon polarization or electron spin) is measured before
//! it enters the cloaking shell and again after it leaves. While inside, it
//! either dephases or exchanges excitations with a hidden ancilla spin. The
//! temporal steering parameter S_N stays at its quantum maximum N only for
//! free flight, so any drop below N reveals the cloak.
//!
//! Modules, bottom-up:
//! - [`qops`]: density matrices, measurements, tensor products, unitaries.
//! - [`channels`]: shell dynamics with closed forms and an RK4 cross-check.
//! - [`steering`]: exact and finite-shot steering parameters, hidden-state bound.
//! - [`cloak`]: dwell time, radial cloak map and trajectories.
//! - [`detector`]: free-space test and channel parameter fits.

// `!(x >= 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cloak;
pub mod detector;
pub mod error;
pub mod qops;
pub mod steering;

pub use error::{Error, Result};
