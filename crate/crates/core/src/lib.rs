//! Velocity-flip harmonic chain on the discrete circle.
//!
//! The crate bundles an exact event-driven simulator for the chain, ensemble
//! estimators for its Wigner functions, a spectral solver for the macroscopic
//! elongation/energy equations and numerical certificates for the 4×4 matrix
//! algebra that closes the Laplace-transformed Wigner system.
//!
//! All clocks are macroscopic: frequencies carry the factor `n²` and flips
//! happen at rate `γ n²` per site.

pub mod chain;
pub mod error;
pub mod fourier;
pub mod initial;
pub mod linalg;
pub mod macro_pde;
pub mod matrix;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod wigner;

pub use chain::{ChainState, ModeRotation};
pub use error::{Error, Result};
pub use initial::MacroProfile;
pub use matrix::{build_mn, MnMatrix};

pub use num_complex::Complex64 as C64;
