//! Simulation of a dual-gate nanowire field-effect transistor used as a
//! charge qubit: self-consistent mode-space NEGF with Poisson electrostatics,
//! pulse-current dynamics, stability diagrams and phonon broadening.
//!
//! Numerical kernels are generic over [`Scalar`]; the device pipeline runs in
//! [`Real`] precision.

pub mod config;
pub mod device;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod negf;
pub mod phonon;
pub mod poisson;
pub mod qubit;
pub mod scf;
pub mod selftest;
pub mod timedomain;
pub mod scalar;
pub mod stats;
pub mod transverse;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of the device pipeline.
pub type Real = f64;
/// Complex number in working precision.
pub type Cplx = num_complex::Complex<Real>;

pub use config::{Config, Numerics};
pub use device::{BiasPoint, DeviceSpec, MaterialParams};
pub use scf::{scf_iterate, DeviceModel, ScfOptions, ScfOutcome};
