//! Simulation and analytics for measurement-device-independent quantum
//! secret sharing over two-photon Bell-state analysis.

pub mod bsa;
pub mod channel;
pub mod cli;
pub mod error;
pub mod protocol;
pub mod qstate;
pub mod rates;

pub use error::{Error, Result};
