//! Spectral solution of the macroscopic elongation and thermal energy
//! equations on the continuous torus.
//!
//! Data are trigonometric polynomials, so every mode evolves in closed
//! form: the elongation by heat-kernel decay and the thermal energy by a
//! Duhamel sum of exponentials.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::initial::MacroProfile;
use crate::quadrature::{integrate_complex, Tolerance};

fn elong_rate(eta: i64, gamma: f64) -> f64 {
    (2.0 * PI * eta as f64).powi(2) / (2.0 * gamma)
}

fn thermal_rate(eta: i64, gamma: f64) -> f64 {
    (2.0 * PI * eta as f64).powi(2) / (4.0 * gamma)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("must be finite and nonnegative, got {t}")))
    }
}

/// `r̂(t,η) = e^{−(2πη)²t/(2γ)} r̂(0,η)`.
pub fn solve_elongation(r0: &MacroProfile, t: f64, gamma: f64) -> Result<MacroProfile> {
    check_time(t)?;
    require_positive("gamma", gamma)?;
    Ok(r0.map_coefficients(|eta, c| c * (-elong_rate(eta, gamma) * t).exp()))
}

/// Coefficients of `(∂_u r)²`, the autoconvolution of `2πiη r̂(η)`.
pub fn grad_r_squared_fourier(r: &MacroProfile) -> MacroProfile {
    let d = r.derivative();
    d.product(&d)
}

/// `∫₀ᵗ e^{−a(t−s)} e^{−b s} ds` without cancellation when `a ≈ b`.
fn duhamel_kernel(a: f64, b: f64, t: f64) -> f64 {
    let (lo, d) = (a.min(b), (a - b).abs());
    let x = d * t;
    let f = if x < 1e-8 { t * (1.0 - 0.5 * x) } else { -(-x).exp_m1() / d };
    (-lo * t).exp() * f
}

/// Thermal energy at time `t`: heat flow with diffusivity `1/(4γ)` plus the
/// source `(2γ)⁻¹(∂_u r)²`, integrated mode by mode in closed form.
pub fn solve_thermal(ethm0: &MacroProfile, r0: &MacroProfile, t: f64, gamma: f64) -> Result<MacroProfile> {
    check_time(t)?;
    require_positive("gamma", gamma)?;
    let m = r0.max_mode() as i64;
    let top = (2 * m).max(ethm0.max_mode() as i64);
    let mut out = Vec::with_capacity(2 * top as usize + 1);
    for eta in -top..=top {
        let a = thermal_rate(eta, gamma);
        let mut v = ethm0.coeff(eta) * (-a * t).exp();
        for xi in (eta - m).max(-m)..=(eta + m).min(m) {
            let zeta = eta - xi;
            // (2πiξ r̂_ξ)(2πiζ r̂_ζ) decays at the sum of the two elongation rates.
            let w = -4.0 * PI * PI * (xi * zeta) as f64 * r0.coeff(xi) * r0.coeff(zeta);
            if w.norm() == 0.0 {
                continue;
            }
            let b = elong_rate(xi, gamma) + elong_rate(zeta, gamma);
            v += w / (2.0 * gamma) * duhamel_kernel(a, b, t);
        }
        out.push((eta, v));
    }
    MacroProfile::from_coefficients(out)
}

/// The same solution with the Duhamel integral evaluated by adaptive
/// Gauss–Kronrod quadrature to relative tolerance `rel_tol`.
pub fn solve_thermal_quadrature(
    ethm0: &MacroProfile,
    r0: &MacroProfile,
    t: f64,
    gamma: f64,
    rel_tol: f64,
) -> Result<MacroProfile> {
    check_time(t)?;
    require_positive("gamma", gamma)?;
    let top = (2 * r0.max_mode()).max(ethm0.max_mode()) as i64;
    let tol = Tolerance {
        rel: rel_tol,
        abs: 1e-300,
        max_intervals: 4000,
    };
    let mut out = Vec::with_capacity(2 * top as usize + 1);
    for eta in -top..=top {
        let a = thermal_rate(eta, gamma);
        let src = integrate_complex(
            |s| {
                let rs = solve_elongation(r0, s, gamma).expect("valid time");
                grad_r_squared_fourier(&rs).coeff(eta) * (-a * (t - s)).exp() / (2.0 * gamma)
            },
            0.0,
            t,
            tol,
        );
        out.push((eta, ethm0.coeff(eta) * (-a * t).exp() + src.value));
    }
    MacroProfile::from_coefficients(out)
}

/// Macroscopic state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub t: f64,
    pub gamma: f64,
    pub r: MacroProfile,
    pub ethm: MacroProfile,
}

/// Fixed initial data with the exact flow attached.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSolution {
    r0: MacroProfile,
    ethm0: MacroProfile,
    gamma: f64,
    n_modes: usize,
}

/// Grid density used for positivity checks.
const CHECK_GRID: usize = 1024;

impl MacroSolution {
    /// Validates `e_thm(0,·) > 0` on a dense grid and that `n_modes`
    /// resolves the source without aliasing (`n_modes ≥ 2M + 2`).
    pub fn new(r0: MacroProfile, ethm0: MacroProfile, gamma: f64, n_modes: usize) -> Result<Self> {
        require_positive("gamma", gamma)?;
        let need = (2 * r0.max_mode() + 2).max(ethm0.max_mode());
        if n_modes < need {
            return Err(invalid("n_modes", format!("need at least {need}, got {n_modes}")));
        }
        let grid = ethm0.on_grid(CHECK_GRID);
        if let Some((x, &v)) = grid.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NonPositiveTemperature {
                u: x as f64 / CHECK_GRID as f64,
                value: v,
            });
        }
        Ok(MacroSolution {
            r0,
            ethm0,
            gamma,
            n_modes,
        })
    }

    /// Initial data from elongation and total energy, `e_thm = e₀ − r₀²/2`.
    pub fn from_energy(r0: MacroProfile, e0: &MacroProfile, gamma: f64, n_modes: usize) -> Result<Self> {
        let ethm0 = e0.plus(&r0.product(&r0).scaled(-0.5));
        Self::new(r0, ethm0, gamma, n_modes)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn at(&self, t: f64) -> Result<MacroState> {
        Ok(MacroState {
            t,
            gamma: self.gamma,
            r: solve_elongation(&self.r0, t, self.gamma)?,
            ethm: solve_thermal(&self.ethm0, &self.r0, t, self.gamma)?,
        })
    }
}

/// `e_mech = r²/2` and `e = e_mech + e_thm`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfiles {
    pub e_mech: MacroProfile,
    pub e_total: MacroProfile,
}

pub fn total_energy_profile(state: &MacroState) -> EnergyProfiles {
    let e_mech = state.r.product(&state.r).scaled(0.5);
    let e_total = e_mech.plus(&state.ethm);
    EnergyProfiles { e_mech, e_total }
}

/// Sup-norm over coefficients of the mechanical energy equation residual
/// `∂_t e_mech − (2γ)⁻¹(∂²e_mech − (∂_u r)²)`, the time derivative taken by
/// the five-point central stencil of step `h`, relative to the largest term.
pub fn mech_energy_residual(solution: &MacroSolution, t: f64, h: f64) -> Result<f64> {
    if t < 2.0 * h {
        return Err(invalid("h", "central difference needs t ≥ 2h"));
    }
    let em = |s: f64| -> Result<MacroProfile> { Ok(total_energy_profile(&solution.at(s)?).e_mech) };
    let nodes = [em(t - 2.0 * h)?, em(t - h)?, em(t + h)?, em(t + 2.0 * h)?];
    let mid = em(t)?;
    let state = solution.at(t)?;
    let grad = grad_r_squared_fourier(&state.r);
    let lap = mid.derivative().derivative();
    let g = solution.gamma;
    let top = nodes.iter().map(MacroProfile::max_mode).max().unwrap_or(0).max(grad.max_mode()) as i64;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for eta in -top..=top {
        let [a, b, c, d] = nodes.each_ref().map(|p| p.coeff(eta));
        let dt = (a - 8.0 * b + 8.0 * c - d) / (12.0 * h);
        let rhs = (lap.coeff(eta) - grad.coeff(eta)) / (2.0 * g);
        res = res.max((dt - rhs).norm());
        scale = scale.max(dt.norm()).max(lap.coeff(eta).norm() / (2.0 * g));
    }
    Ok(if scale > 0.0 { res / scale } else { res })
}

/// Dissipation bookkeeping at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// `∫ e du` at time `t`.
    pub total_energy: f64,
    /// `∫ r du`.
    pub total_elongation: f64,
    /// Mechanical energy lost since `t = 0`.
    pub mech_lost: f64,
    /// Thermal energy gained since `t = 0`.
    pub thermal_gained: f64,
    /// `(2γ)⁻¹ ∫(∂_u r)² du`.
    pub dissipation_rate: f64,
}

pub fn energy_balance(solution: &MacroSolution, t: f64) -> Result<EnergyBalance> {
    let s0 = solution.at(0.0)?;
    let st = solution.at(t)?;
    let e0 = total_energy_profile(&s0);
    let et = total_energy_profile(&st);
    Ok(EnergyBalance {
        total_energy: et.e_total.mean(),
        total_elongation: st.r.mean(),
        mech_lost: e0.e_mech.mean() - et.e_mech.mean(),
        thermal_gained: st.ethm.mean() - s0.ethm.mean(),
        dissipation_rate: grad_r_squared_fourier(&st.r).mean() / (2.0 * solution.gamma),
    })
}

/// `∫ log e_thm(t,u) du` by the periodic trapezoid rule on `points` nodes.
pub fn entropy_functional(state: &MacroState, points: usize) -> Result<f64> {
    if points == 0 {
        return Err(invalid("points", "need at least one node"));
    }
    let grid = state.ethm.on_grid(points);
    let mut acc = 0.0;
    for (x, &v) in grid.iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonPositiveTemperature {
                u: x as f64 / points as f64,
                value: v,
            });
        }
        acc += v.ln();
    }
    Ok(acc / points as f64)
}

/// Rows `(t, u, r, e_mech, e_thm, e)` on `points` nodes.
pub fn profile_rows(state: &MacroState, points: usize) -> Vec<[f64; 6]> {
    let en = total_energy_profile(state);
    (0..points)
        .map(|x| {
            let u = x as f64 / points as f64;
            let r = state.r.eval(u);
            let em = en.e_mech.eval(u);
            let eth = state.ethm.eval(u);
            [state.t, u, r, em, eth, em + eth]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::thermo_e;
    use num_complex::Complex64 as C64;

    fn cosine_solution() -> MacroSolution {
        MacroSolution::new(MacroProfile::cosine(1.0, 0.5, 1), MacroProfile::constant(1.0), 1.0, 64).unwrap()
    }

    #[test]
    fn elongation_decay() {
        let r0 = MacroProfile::cosine(0.0, 1.0, 1);
        let r = solve_elongation(&r0, 0.1, 1.0).unwrap();
        let amp = 2.0 * r.coeff(1).re;
        assert!((amp - (-2.0 * PI * PI * 0.1).exp()).abs() < 1e-15);
        assert!((amp - 0.138911).abs() < 1e-6);
        let c = solve_elongation(&MacroProfile::constant(2.0), 5.0, 1.0).unwrap();
        assert_eq!(c, MacroProfile::constant(2.0));
        let two = solve_elongation(&solve_elongation(&r0, 0.03, 0.7).unwrap(), 0.04, 0.7).unwrap();
        let one = solve_elongation(&r0, 0.07, 0.7).unwrap();
        assert!((two.coeff(1) - one.coeff(1)).norm() < 1e-16);
        assert!(solve_elongation(&r0, -1.0, 1.0).is_err());
    }

    #[test]
    fn gradient_square() {
        let g = grad_r_squared_fourier(&MacroProfile::cosine(0.0, 1.0, 1));
        assert!((g.coeff(0).re - 2.0 * PI * PI).abs() < 1e-12);
        assert!((g.coeff(2).re + PI * PI).abs() < 1e-12);
        assert!((g.coeff(-2).re + PI * PI).abs() < 1e-12);
        assert_eq!(grad_r_squared_fourier(&MacroProfile::constant(3.0)).max_mode(), 0);
        let r = MacroProfile::from_coefficients([(0, C64::new(1.0, 0.0)), (2, C64::new(0.2, 0.1)), (3, C64::new(-0.1, 0.05))]).unwrap();
        let plancherel: f64 = r.coefficients().map(|(e, c)| (2.0 * PI * e as f64).powi(2) * c.norm_sqr()).sum();
        assert!((grad_r_squared_fourier(&r).mean() - plancherel).abs() < 1e-12);
    }

    #[test]
    fn thermal_closed_form_matches_quadrature() {
        let r0 = MacroProfile::from_coefficients([(0, C64::new(1.0, 0.0)), (1, C64::new(0.25, 0.1)), (2, C64::new(0.05, -0.02))]).unwrap();
        let e0 = MacroProfile::cosine(1.0, 0.3, 1);
        for &(t, g) in &[(0.01, 1.0), (0.2, 0.5), (1.0, 2.0)] {
            let a = solve_thermal(&e0, &r0, t, g).unwrap();
            let b = solve_thermal_quadrature(&e0, &r0, t, g, 1e-12).unwrap();
            for eta in -4..=4 {
                assert!((a.coeff(eta) - b.coeff(eta)).norm() < 1e-11, "t={t} eta={eta}");
            }
        }
    }

    #[test]
    fn duhamel_near_equal_rates() {
        let t: f64 = 0.3;
        let exact = t * (-2.0 * t).exp();
        assert!((duhamel_kernel(2.0, 2.0, t) - exact).abs() < 1e-16);
        let shifted = t * (-2.0 * t).exp() * (1.0 - 0.5e-12 * t);
        assert!((duhamel_kernel(2.0, 2.0 + 1e-12, t) - shifted).abs() < 1e-16);
        let (a, b) = (3.0, 1.0);
        let direct = ((-b * t).exp() - (-a * t).exp()) / (a - b);
        assert!((duhamel_kernel(a, b, t) - direct).abs() < 1e-15);
    }

    #[test]
    fn pure_heat_flow_without_source() {
        let e0 = MacroProfile::cosine(1.0, 0.4, 1);
        let e = solve_thermal(&e0, &MacroProfile::constant(2.0), 0.2, 1.0).unwrap();
        let rate = PI * PI;
        assert!((e.coeff(1).re - 0.2 * (-rate * 0.2).exp()).abs() < 1e-15);
        assert_eq!(e.coeff(0).re, 1.0);
    }

    #[test]
    fn energy_conservation_and_balance() {
        let sol = cosine_solution();
        let b0 = energy_balance(&sol, 0.0).unwrap();
        for &t in &[0.01, 0.05, 0.2, 1.0] {
            let b = energy_balance(&sol, t).unwrap();
            assert!((b.total_energy - b0.total_energy).abs() < 1e-12);
            assert!((b.total_elongation - 1.0).abs() < 1e-15);
            assert!((b.mech_lost - b.thermal_gained).abs() < 1e-12);
        }
        // Closed form for r = 1 + ½cos: the mechanical energy lost is
        // ½·2·(1/4)²·(1 − e^{−4π²t/γ}) = (1 − e^{−4π²t})/16.
        let t: f64 = 0.05;
        let b = energy_balance(&sol, t).unwrap();
        assert!((b.thermal_gained - (1.0 - (-4.0 * PI * PI * t).exp()) / 16.0).abs() < 1e-14);
    }

    #[test]
    fn mechanical_energy_equation() {
        let sol = cosine_solution();
        for &t in &[0.01, 0.05] {
            let r = mech_energy_residual(&sol, t, 1e-4).unwrap();
            assert!(r < 1e-8, "t={t}: {r}");
        }
    }

    #[test]
    fn entropy_increases_then_saturates() {
        let sol = cosine_solution();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..60 {
            let t = 0.005 * i as f64;
            let s = entropy_functional(&sol.at(t).unwrap(), 256).unwrap();
            assert!(s >= prev - 1e-10);
            prev = s;
        }
        let c = MacroSolution::new(MacroProfile::constant(1.0), MacroProfile::constant(0.7), 1.0, 4).unwrap();
        let s0 = entropy_functional(&c.at(0.0).unwrap(), 64).unwrap();
        let s1 = entropy_functional(&c.at(3.0).unwrap(), 64).unwrap();
        assert!((s0 - s1).abs() < 1e-15);
        assert!((s0 - 0.7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            MacroSolution::new(MacroProfile::constant(0.0), MacroProfile::cosine(0.1, 0.5, 1), 1.0, 8),
            Err(Error::NonPositiveTemperature { .. })
        ));
        assert!(MacroSolution::new(MacroProfile::cosine(1.0, 0.5, 3), MacroProfile::constant(1.0), 1.0, 4).is_err());
        let sol = MacroSolution::from_energy(
            MacroProfile::constant(2.0),
            &MacroProfile::constant(thermo_e(2.0, 4.0).unwrap()),
            1.0,
            4,
        )
        .unwrap();
        let s = sol.at(0.0).unwrap();
        assert!((s.ethm.mean() - 0.25).abs() < 1e-15);
        let en = total_energy_profile(&s);
        assert!((en.e_total.eval(0.3) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn doubling_modes_changes_nothing() {
        let a = MacroSolution::new(MacroProfile::cosine(1.0, 0.5, 2), MacroProfile::constant(1.0), 1.0, 8).unwrap();
        let b = MacroSolution::new(MacroProfile::cosine(1.0, 0.5, 2), MacroProfile::constant(1.0), 1.0, 16).unwrap();
        let (sa, sb) = (a.at(0.05).unwrap(), b.at(0.05).unwrap());
        for u in [0.0, 0.1, 0.37] {
            assert!((sa.ethm.eval(u) - sb.ethm.eval(u)).abs() < 1e-15);
        }
    }
}
