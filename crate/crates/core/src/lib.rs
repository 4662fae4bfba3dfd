//! Damped quantum oscillator in phase space: bath response functions,
//! Wigner-function evolution under master, pre-master and exact equations,
//! and decoherence of cat states.

pub mod bath;
pub mod decoherence;
pub mod error;
pub mod langevin;
pub mod linalg;
pub mod quadrature;
pub mod evolve;
pub mod response;
pub mod scenario;
pub mod wigner;

pub use bath::{BathKind, BathSpec, OscillatorSpec, ThermalSpec};
pub use error::{Error, Result};
