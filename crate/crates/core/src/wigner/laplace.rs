use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::field::WignerField;
use crate::error::{invalid, require_positive, Error, Result};
use crate::initial::MacroProfile;
use crate::macro_pde::{grad_r_squared_fourier, solve_elongation};
use crate::matrix::{gradient_source, profile_wigner, w_mech, w_thm};
use crate::quadrature::{integrate_complex, Tolerance};

/// Minimum horizon in units of `1/λ_min`.
pub const HORIZON_FACTOR: f64 = 8.0;

/// Uniform snapshot grid on `[0, t_end]` with spacing at most
/// `min(1/(20 λ_max), t_end/2000)`.
pub fn laplace_time_grid(t_end: f64, lambda_max: f64) -> Result<Vec<f64>> {
    require_positive("t_end", t_end)?;
    require_positive("lambda", lambda_max)?;
    let h = (1.0 / (20.0 * lambda_max)).min(t_end / 2000.0);
    let steps = (t_end / h).ceil() as usize;
    Ok((0..=steps).map(|i| t_end * i as f64 / steps as f64).collect())
}

/// Trapezoid weights for `∫₀ᵀ e^{−λt} f(t) dt` on the nodes `ts`.
fn trapezoid_weights(ts: &[f64], lambda: f64) -> Vec<f64> {
    let mut w = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        let h = 0.5 * (ts[i] - ts[i - 1]);
        w[i - 1] += h * (-lambda * ts[i - 1]).exp();
        w[i] += h * (-lambda * ts[i]).exp();
    }
    w
}

/// Trapezoidal Laplace transform of a scalar series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarLaplace {
    pub value: C64,
    /// The same rule on every other node, always keeping the last.
    pub coarse: C64,
    /// `sup_t |f| e^{−λT}/λ`.
    pub tail_bound: f64,
}

fn coarse_indices(len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(2).collect();
    if *idx.last().expect("nonempty") != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn check_grid(ts: &[f64]) -> Result<()> {
    if ts.len() < 2 {
        return Err(invalid("series", "need at least two snapshots"));
    }
    if ts[0].abs() > 1e-12 {
        return Err(invalid("series", format!("must start at t = 0, starts at {}", ts[0])));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("series", "times must increase strictly"));
    }
    Ok(())
}

/// `∫₀ᵀ e^{−λt} f(t) dt` by the trapezoid rule on the nodes `ts`.
pub fn laplace_trapezoid(ts: &[f64], values: &[C64], lambda: f64) -> Result<ScalarLaplace> {
    require_positive("lambda", lambda)?;
    check_grid(ts)?;
    if values.len() != ts.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            found: values.len(),
        });
    }
    let fine: C64 = trapezoid_weights(ts, lambda).iter().zip(values).map(|(w, v)| w * v).sum();
    let idx = coarse_indices(ts.len());
    let cts: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
    let coarse: C64 = trapezoid_weights(&cts, lambda).iter().zip(&idx).map(|(w, &i)| w * values[i]).sum();
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let horizon = *ts.last().expect("nonempty");
    Ok(ScalarLaplace {
        value: fine,
        coarse,
        tail_bound: sup * (-lambda * horizon).exp() / lambda,
    })
}

/// Per-`λ` Laplace transforms of a time series of Wigner fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceWignerField {
    pub lambdas: Vec<f64>,
    pub fields: Vec<WignerField>,
    pub horizon: f64,
    pub nodes: usize,
    /// `sup_t |W| e^{−λT}/λ` for each `λ`.
    pub tail_bounds: Vec<f64>,
    /// `|trapezoid(h) − trapezoid(2h)|/3` (sup over cells) for each `λ`.
    pub quad_errors: Vec<f64>,
}

impl LaplaceWignerField {
    /// Tail bound plus quadrature estimate for the `i`-th `λ`.
    pub fn error_budget(&self, i: usize) -> f64 {
        self.tail_bounds[i] + self.quad_errors[i]
    }
}

/// Trapezoidal `∫₀ᵀ e^{−λt} W(t) dt` for each `λ`; the series must start at
/// `t = 0`, increase, and reach `T ≥ 8/λ_min`.
pub fn laplace_accumulate(series: &[WignerField], lambdas: &[f64]) -> Result<LaplaceWignerField> {
    if lambdas.is_empty() {
        return Err(invalid("lambdas", "empty"));
    }
    for &l in lambdas {
        require_positive("lambda", l)?;
    }
    let ts: Vec<f64> = series.iter().map(|f| f.t()).collect();
    check_grid(&ts)?;
    let horizon = *ts.last().expect("nonempty");
    let lmin = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if horizon < HORIZON_FACTOR / lmin {
        return Err(Error::InsufficientHorizon {
            horizon,
            required: HORIZON_FACTOR / lmin,
        });
    }
    let refs: Vec<&WignerField> = series.iter().collect();
    let sup = series.iter().map(WignerField::sup_norm).fold(0.0, f64::max);
    let coarse_idx = coarse_indices(ts.len());
    let coarse_ts: Vec<f64> = coarse_idx.iter().map(|&i| ts[i]).collect();
    let coarse_refs: Vec<&WignerField> = coarse_idx.iter().map(|&i| refs[i]).collect();

    let mut fields = Vec::with_capacity(lambdas.len());
    let mut tails = Vec::with_capacity(lambdas.len());
    let mut quads = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let fine = WignerField::linear_combination(&refs, &trapezoid_weights(&ts, l), 0.0)?;
        let coarse = WignerField::linear_combination(&coarse_refs, &trapezoid_weights(&coarse_ts, l), 0.0)?;
        quads.push(fine.minus(&coarse)?.sup_norm() / 3.0);
        tails.push(sup * (-l * horizon).exp() / l);
        fields.push(fine);
    }
    Ok(LaplaceWignerField {
        lambdas: lambdas.to_vec(),
        fields,
        horizon,
        nodes: ts.len(),
        tail_bounds: tails,
        quad_errors: quads,
    })
}

fn relaxation(lambda: f64, eta: i64, xi: i64, gamma: f64) -> f64 {
    2.0 * PI * PI / gamma * ((xi * xi + (xi + eta) * (xi + eta)) as f64) + lambda
}

/// `w(r₀;η,ξ)(λ) = W(r₀;η,ξ) / (2π²γ⁻¹[ξ² + (η+ξ)²] + λ)`.
pub fn laplace_macro(r0: &MacroProfile, lambda: f64, eta: i64, xi: i64, gamma: f64) -> Result<C64> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    Ok(profile_wigner(r0, eta, xi) / relaxation(lambda, eta, xi, gamma))
}

/// `½ L(F((∂_u r_t)²)(η))(λ) = 4π² Σ_ξ (η+ξ)ξ w(r₀;η,ξ)(λ)`.
pub fn dissipation_laplace(r0: &MacroProfile, lambda: f64, eta: i64, gamma: f64) -> Result<C64> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    Ok(gradient_source(r0, lambda, eta, gamma) * gamma)
}

fn laplace_quadrature<F: Fn(f64) -> C64>(f: F, lambda: f64, rel_tol: f64) -> C64 {
    let tol = Tolerance {
        rel: rel_tol,
        abs: 1e-300,
        max_intervals: 4000,
    };
    // e^{−40} is below any tolerance used here.
    integrate_complex(|t| f(t) * (-lambda * t).exp(), 0.0, 40.0 / lambda, tol).value
}

/// [`dissipation_laplace`] by time-domain quadrature of the PDE solution.
pub fn dissipation_laplace_quadrature(
    r0: &MacroProfile,
    lambda: f64,
    eta: i64,
    gamma: f64,
    rel_tol: f64,
) -> Result<C64> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    Ok(laplace_quadrature(
        |t| 0.5 * grad_r_squared_fourier(&solve_elongation(r0, t, gamma).expect("valid time")).coeff(eta),
        lambda,
        rel_tol,
    ))
}

/// Macroscopic Laplace-Wigner targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechThermalTargets {
    pub lambda: f64,
    pub eta: i64,
    pub w_mech: C64,
    pub w_thm: C64,
}

pub fn mech_thermal_laplace_targets(
    r0: &MacroProfile,
    e_thm0: &MacroProfile,
    lambda: f64,
    eta: i64,
    gamma: f64,
) -> Result<MechThermalTargets> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    Ok(MechThermalTargets {
        lambda,
        eta,
        w_mech: w_mech(r0, lambda, eta, gamma),
        w_thm: w_thm(r0, e_thm0, lambda, eta, gamma),
    })
}

/// `W_mech⁺` as the Laplace transform of `½F(r_t²)(η)`.
pub fn w_mech_quadrature(r0: &MacroProfile, lambda: f64, eta: i64, gamma: f64, rel_tol: f64) -> Result<C64> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    Ok(laplace_quadrature(
        |t| {
            let r = solve_elongation(r0, t, gamma).expect("valid time");
            0.5 * r.product(&r).coeff(eta)
        },
        lambda,
        rel_tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::Species;

    fn series(ts: &[f64], f: impl Fn(f64) -> f64) -> Vec<WignerField> {
        let n = 8;
        let base: Vec<C64> = (0..n).map(|j| C64::new(1.0 + j as f64, 0.5 - j as f64)).collect();
        ts.iter()
            .map(|&t| {
                let s = f(t).sqrt();
                let psi: Vec<C64> = base.iter().map(|v| v * s).collect();
                WignerField::from_wave_hat(&psi, 1, t).unwrap()
            })
            .collect()
    }

    #[test]
    fn constant_and_exponential_series() {
        let lambda = 2.0;
        let ts = laplace_time_grid(5.0, lambda).unwrap();
        let w0 = series(&[0.0], |_| 1.0)[0].value(Species::WPlus, 1, 3).unwrap();
        let c = laplace_accumulate(&series(&ts, |_| 1.0), &[lambda]).unwrap();
        let want = w0 * (1.0 - (-lambda * 5.0).exp()) / lambda;
        let got = c.fields[0].value(Species::WPlus, 1, 3).unwrap();
        assert!((got - want).norm() < 1e-5 * want.norm());
        assert!((got - w0 / lambda).norm() <= c.error_budget(0) * 1.01 + 1e-5 * want.norm());

        let a = 3.0;
        let e = laplace_accumulate(&series(&ts, |t| (-a * t).exp()), &[lambda, 4.0]).unwrap();
        for (i, l) in [lambda, 4.0].iter().enumerate() {
            let got = e.fields[i].value(Species::WPlus, 1, 3).unwrap();
            let want = w0 / (l + a);
            assert!((got - want).norm() < 1e-4 * want.norm(), "{got} {want}");
            assert!((got - want).norm() < 2.0 * e.error_budget(i) + 1e-12);
        }
        let z = laplace_accumulate(&series(&ts, |_| 0.0), &[lambda]).unwrap();
        assert_eq!(z.fields[0].value(Species::YPlus, 0, 2).unwrap(), C64::default());
    }

    #[test]
    fn linearity() {
        let ts = laplace_time_grid(4.0, 2.0).unwrap();
        let a = series(&ts, |t| 1.0 + t);
        let b = series(&ts, |t| (-t).exp());
        let sum: Vec<WignerField> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| WignerField::linear_combination(&[x, y], &[1.0, 2.0], x.t()).unwrap())
            .collect();
        let la = laplace_accumulate(&a, &[2.0]).unwrap();
        let lb = laplace_accumulate(&b, &[2.0]).unwrap();
        let ls = laplace_accumulate(&sum, &[2.0]).unwrap();
        for j in 0..8 {
            let want = la.fields[0].value(Species::YPlus, -1, j).unwrap() + 2.0 * lb.fields[0].value(Species::YPlus, -1, j).unwrap();
            assert!((ls.fields[0].value(Species::YPlus, -1, j).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn bounded_by_sup_over_lambda() {
        let ts = laplace_time_grid(5.0, 2.0).unwrap();
        let s = series(&ts, |t| 1.0 + (3.0 * t).sin().powi(2));
        let sup = s.iter().map(WignerField::sup_norm).fold(0.0, f64::max);
        let l = laplace_accumulate(&s, &[2.0]).unwrap();
        assert!(l.fields[0].sup_norm() <= sup / 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn scalar_matches_field_pairing() {
        let ts = laplace_time_grid(5.0, 2.0).unwrap();
        let s = series(&ts, |t| 1.0 + (-t).exp());
        let vals: Vec<C64> = s.iter().map(|f| f.value(Species::WPlus, 1, 2).unwrap()).collect();
        let sc = laplace_trapezoid(&ts, &vals, 2.0).unwrap();
        let field = laplace_accumulate(&s, &[2.0]).unwrap();
        assert!((sc.value - field.fields[0].value(Species::WPlus, 1, 2).unwrap()).norm() < 1e-13);
        let exact = vals[0] / 2.0 * (0.5 + 1.0 / 3.0);
        assert!((sc.value - exact).norm() < 1e-4 * exact.norm());
        assert!(((sc.value - sc.coarse).norm() / 3.0) < 1e-4 * exact.norm());
        assert!(laplace_trapezoid(&ts, &vals[1..], 2.0).is_err());
    }

    #[test]
    fn validation() {
        let ts = laplace_time_grid(1.0, 10.0).unwrap();
        let s = series(&ts, |_| 1.0);
        assert!(matches!(laplace_accumulate(&s, &[1.0]), Err(Error::InsufficientHorizon { .. })));
        assert!(laplace_accumulate(&s, &[0.0]).is_err());
        assert!(laplace_accumulate(&s, &[-1.0]).is_err());
        assert!(laplace_accumulate(&s[1..], &[10.0]).is_err());
        assert!(laplace_time_grid(1.0, 0.0).is_err());
        let g = laplace_time_grid(1.0, 10.0).unwrap();
        assert_eq!(g.len(), 2001);
        assert!((g[1] - 0.0005).abs() < 1e-15);
    }

    #[test]
    fn macro_examples() {
        let r = MacroProfile::cosine(0.0, 1.0, 1);
        let w = laplace_macro(&r, 1.0, 0, 1, 1.0).unwrap();
        assert!((w.re - 0.125 / (4.0 * PI * PI + 1.0)).abs() < 1e-15);
        assert!((w.re - 3.0881e-3).abs() < 1e-7);
        let c = MacroProfile::constant(3.0);
        assert!((laplace_macro(&c, 2.0, 0, 0, 1.0).unwrap().re - 4.5 / 2.0).abs() < 1e-15);
        assert!(laplace_macro(&r, 0.0, 0, 0, 1.0).is_err());

        let t = mech_thermal_laplace_targets(&c, &MacroProfile::constant(0.7), 5.0, 0, 1.0).unwrap();
        assert!((t.w_mech.re - 9.0 / 10.0).abs() < 1e-15);
        assert!((t.w_thm.re - 0.7 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn dual_routes() {
        let r = MacroProfile::from_coefficients([(0, C64::new(1.0, 0.0)), (1, C64::new(0.25, 0.1)), (2, C64::new(-0.05, 0.02))]).unwrap();
        for eta in [0, 1, 2] {
            let a = dissipation_laplace(&r, 10.0, eta, 1.0).unwrap();
            let b = dissipation_laplace_quadrature(&r, 10.0, eta, 1.0, 1e-12).unwrap();
            assert!((a - b).norm() < 1e-8, "eta={eta}: {a} {b}");
        }
        let b = MacroProfile::cosine(1.0, 0.5, 1);
        let t = mech_thermal_laplace_targets(&b, &MacroProfile::constant(1.0), 10.0, 0, 1.0).unwrap();
        let q = w_mech_quadrature(&b, 10.0, 0, 1.0, 1e-12).unwrap();
        assert!((t.w_mech - q).norm() < 1e-6);
    }
}
