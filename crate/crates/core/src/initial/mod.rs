//! Initial laws: macroscopic profiles, local Gibbs sampling and diagnostics
//! of the initial thermal spectrum.

mod diagnostics;
mod gibbs;
mod profile;
mod thermo;

pub use diagnostics::{check_assumptions, thermal_spectrum, AssumptionDiagnostics, AssumptionThresholds, SpectrumReport};
pub use gibbs::{local_gibbs_ensemble, local_gibbs_sample};
pub use profile::{MacroProfile, ProfileSpec};
pub use thermo::{thermo_e, thermo_r};
