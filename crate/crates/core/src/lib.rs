//! Single-excitation dynamics of XXZ spin chains and rings.
//!
//! - [`netmodel`] builds the effective `N x N` Hamiltonian (and the full
//!   `2^N` one for checking).
//! - [`dynamics`] evolves it through a spectral decomposition.
//! - [`itc`] bounds the transfer probability between two nodes over all times.
//! - [`control`] optimizes bang-bang detuning schedules and static biases.
//! - [`controllability`] computes dynamical Lie algebra dimensions.
//! - [`ident`] estimates ring size and coupling from binary measurements.
//! - [`scenarios`] and [`cli`] bundle the headline experiments.
//!
//! ```
//! use spinnet::dynamics::{spectral_decompose, transfer_probability};
//! use spinnet::netmodel::NetworkSpec;
//!
//! let spec = NetworkSpec::chain(2, 1.0, 0.0)?;
//! let spectrum = spectral_decompose(&spec.hamiltonian(), None)?;
//! let p = transfer_probability(&spectrum, 2, 1, std::f64::consts::FRAC_PI_2)?;
//! assert!((p - 1.0).abs() < 1e-12);
//! # Ok::<(), spinnet::SpinError>(())
//! ```

pub mod control;
pub mod cli;
pub mod controllability;
pub mod dynamics;
pub mod error;
pub mod ident;
pub mod itc;
pub mod netmodel;
pub mod scenarios;

pub use error::{Result, SpinError};

pub type Complex64 = nalgebra::Complex<f64>;
