//! Solar-aware residential EV charging scheduling.
//!
//! A household day (PV generation, non-EV load, metered EV charging at 15-minute
//! resolution) becomes a 96-step decision process where an agent chooses to
//! charge or idle in every slot. The crate provides the process itself, a DQN
//! learner, an exact dynamic-programming oracle and evaluation against the
//! metered charging baseline.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod data;
pub mod env;
pub mod error;
pub mod flexibility;
pub mod harness;
pub mod stats;
pub mod tariff;

pub use error::{Error, Result};
