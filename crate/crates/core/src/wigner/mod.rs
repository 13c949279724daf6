//! Ensemble estimators for the Wigner functions `W±`, `Y±`, their pairing
//! with test functions, and Laplace transforms in time.

mod field;
mod laplace;
mod pairing;

pub use field::{
    energy_fourier, mean_fluct_decompose, mean_wave_hat, wigner_estimate, Species, WignerAccumulator, WignerField,
    WignerRow, MAX_ETA,
};
pub use laplace::{
    dissipation_laplace, dissipation_laplace_quadrature, laplace_accumulate, laplace_macro, laplace_time_grid, laplace_trapezoid,
    mech_thermal_laplace_targets, w_mech_quadrature, LaplaceWignerField, MechThermalTargets, ScalarLaplace, HORIZON_FACTOR,
};
pub use pairing::{pair_with_test_function, profile_pairing, profile_pairing_limit, TestFunction, TestTerm};
pub use crate::matrix::{discrete_profile_wigner, profile_wigner as macro_wigner};
