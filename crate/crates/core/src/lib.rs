//! Simulation of delegated continuous-variable computing on encrypted
//! quantum states: a Gaussian moment engine, a truncated number-basis
//! simulator, the symbolic correction algebra, protocol sessions and the
//! metrics used to judge them.

pub mod algebra;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod metrics;
pub mod phase_space;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
