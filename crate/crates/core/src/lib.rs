//! Numerical recurrence laboratory.
//!
//! Sampled trajectories ([`signal`]), translation sets and recurrence
//! classification ([`recurrence`]), dissipative ODE flows ([`flows`]), delay
//! equations ([`delay`]), difference equations ([`maps`]) and roots of
//! time-varying polynomials ([`algebra`]).

pub mod algebra;
pub mod catalog;
pub mod delay;
pub mod error;
pub mod expr;
pub mod flows;
pub mod io;
pub mod maps;
pub mod recurrence;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{SampledSignal, Window};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
