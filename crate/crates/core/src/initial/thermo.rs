use crate::error::{require_positive, Result};

/// Equilibrium mean elongation at tension `τ`: `r = τ`.
pub fn thermo_r(tau: f64, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    Ok(tau)
}

/// Internal energy `e = β⁻¹ + τ²/2`.
pub fn thermo_e(tau: f64, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    Ok(1.0 / beta + 0.5 * tau * tau)
}
