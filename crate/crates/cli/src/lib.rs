//! Scenario configs, verification suite, sweeps and channel estimation for
//! the `cvqce` binary.
//!
//! Every user-facing variance is taken in shot-noise units (SNU, vacuum
//! variance 1) unless a command or config says otherwise, and converted to
//! the library's internal convention (vacuum variance 1/2) here and
//! nowhere else.

pub mod config;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use error::{CliError, CliResult};
