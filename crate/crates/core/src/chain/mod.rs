//! Microscopic dynamics of the velocity-flip chain.
//!
//! Between flips every Fourier mode rotates at frequency `2n² sin(πk)`; a flip
//! reverses one momentum. [`simulate`] draws flip times from the global clock
//! of rate `γn³` and alternates the two steps, which reproduces the law of the
//! dynamics exactly.

mod mean_wave;
mod modal;
mod rotation;
mod simulate;
mod state;

pub use mean_wave::{evolve_mean_wave, mean_wave_modes};
pub use modal::{ModalChain, ModalTables};
pub use rotation::ModeRotation;
pub use simulate::{simulate, simulate_counting, FlipStats};
pub use state::{from_modes, ChainState};
