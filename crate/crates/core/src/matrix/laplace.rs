use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{build_mn, e_vec, ones, E, U};
use crate::error::{invalid, require_positive, Error, Result};
use crate::fourier::{shift_index, Dft};
use crate::initial::MacroProfile;
use crate::linalg::{matvec, Mat};

/// `W(r; η, ξ) = ½ (F r)(ξ+η) (F r)*(ξ)`.
pub fn profile_wigner(r: &MacroProfile, eta: i64, xi: i64) -> C64 {
    0.5 * r.coeff(xi + eta) * r.coeff(xi).conj()
}

fn relaxation(lambda: f64, eta: i64, xi: i64, gamma: f64) -> f64 {
    2.0 * PI * PI / gamma * ((xi * xi + (xi + eta) * (xi + eta)) as f64) + lambda
}

fn xi_range(r: &MacroProfile, eta: i64) -> std::ops::RangeInclusive<i64> {
    let m = r.max_mode() as i64;
    (-m - eta.abs())..=(m + eta.abs())
}

/// Mechanical Laplace-Wigner function `Σ_ξ W(r₀;η,ξ)/(2π²γ⁻¹[ξ² + (ξ+η)²] + λ)`.
pub fn w_mech(r0: &MacroProfile, lambda: f64, eta: i64, gamma: f64) -> C64 {
    xi_range(r0, eta)
        .map(|xi| profile_wigner(r0, eta, xi) / relaxation(lambda, eta, xi, gamma))
        .sum()
}

/// `(2γ)⁻¹ L(F((∂_u r)²)(η))(λ) = 4π²γ⁻¹ Σ_ξ ξ(ξ+η) W/(…)`.
pub fn gradient_source(r0: &MacroProfile, lambda: f64, eta: i64, gamma: f64) -> C64 {
    xi_range(r0, eta)
        .map(|xi| {
            4.0 * PI * PI / gamma * (xi * (xi + eta)) as f64 * profile_wigner(r0, eta, xi)
                / relaxation(lambda, eta, xi, gamma)
        })
        .sum()
}

/// `W_thm⁺(λ,η) = (λ + η²π²/γ)⁻¹ {F e_thm(0)(η) + (2γ)⁻¹ L(F((∂_u r)²)(η))(λ)}`.
pub fn w_thm(r0: &MacroProfile, e_thm0: &MacroProfile, lambda: f64, eta: i64, gamma: f64) -> C64 {
    (e_thm0.coeff(eta) + gradient_source(r0, lambda, eta, gamma)) / (lambda + (eta * eta) as f64 * PI * PI / gamma)
}

/// Limit of the paired Laplace-Wigner function against `G = e^{2πiηu} h(v)`:
/// `W_thm⁺·∫h + W_mech⁺·h(0)`.
pub fn local_equilibrium_limit(
    r0: &MacroProfile,
    e_thm0: &MacroProfile,
    lambda: f64,
    eta: i64,
    gamma: f64,
    h: &MacroProfile,
) -> C64 {
    w_thm(r0, e_thm0, lambda, eta, gamma) * h.mean() + w_mech(r0, lambda, eta, gamma) * h.eval(0.0)
}

/// `W_n(r; η, k) = (2n)⁻¹ (F_n r)(k+η/n) (F_n r)*(k)` on the grid.
pub fn discrete_profile_wigner(r0: &MacroProfile, n: usize, eta: i64) -> Vec<C64> {
    let rh = Dft::new(n).forward_real(&r0.on_grid(n));
    let s = 1.0 / (2.0 * n as f64);
    (0..n).map(|j| s * rh[shift_index(j, eta, n)] * rh[j].conj()).collect()
}

/// `n⁻¹ Σ_x f(x/n) e^{−2πiηx/n}`.
fn grid_coefficient(f: &MacroProfile, n: usize, eta: i64) -> C64 {
    let fh = Dft::new(n).forward_real(&f.on_grid(n));
    fh[eta.rem_euclid(n as i64) as usize] / n as f64
}

/// Exact expected Laplace-Wigner function at finite `n` for a product local
/// Gibbs initial law, obtained by solving the closed linear system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacePrediction {
    pub n: usize,
    pub lambda: f64,
    pub eta: i64,
    /// `[w⁺(λ,η,·) h]_n` split into mean and fluctuating parts.
    pub paired: C64,
    pub paired_mech: C64,
    pub paired_thermal: C64,
    /// `γn²Ī_n`.
    pub i_bar_scaled: C64,
    pub i_tilde: C64,
    pub s_n: f64,
    /// `W_thm⁺·∫h + W_mech⁺·h(0)`.
    pub limit: C64,
    pub limit_mech: C64,
    pub limit_thermal: C64,
}

/// Solves `M_n w = v⁰ + γn² I_n e` exactly: mean part from `r₀`, fluctuation
/// part `ṽ⁰ = T̂_n(η)·[1,0,0,1]` from the temperature profile.
pub fn exact_laplace_prediction(
    r0: &MacroProfile,
    temperature: &MacroProfile,
    lambda: f64,
    eta: i64,
    gamma: f64,
    n: usize,
    h: &MacroProfile,
) -> Result<LaplacePrediction> {
    require_positive("lambda", lambda)?;
    let nf = n as f64;
    let wbar = discrete_profile_wigner(r0, n, eta);
    let t_eta = grid_coefficient(temperature, n, eta);
    let vt: [C64; 4] = U.map(|u| u * t_eta);
    let (one, e) = (ones(), e_vec());
    let mut invs: Vec<Mat<4>> = Vec::with_capacity(n);
    let (mut ibar, mut zt, mut mn, mut s_terms) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0);
    for j in 0..n {
        let m = build_mn(lambda, eta, j as f64 / nf, n, gamma)?;
        let inv = m.inverse_normalized();
        let dot = |v: &[C64; 4]| -> C64 {
            let x = matvec(&inv, v);
            (0..4).map(|i| E[i] * x[i]).sum()
        };
        let ee = dot(&e).re;
        ibar += wbar[j] * dot(&one);
        zt += dot(&vt);
        mn += ee;
        s_terms += 1.0 - gamma * ee;
        invs.push(inv);
    }
    // Averages over k: γn²Ī, n²z̃, n²M_n and S_n = n²(1 − γn²M_n).
    let ibar_s = gamma * ibar / nf;
    let zt = zt / nf;
    let mn = mn / nf;
    let s_n = nf * s_terms;
    let i_tilde = (zt + ibar_s * mn) / s_n;
    let i_total = i_tilde + ibar_s / (gamma * nf * nf);
    let (mut pm, mut pt) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (j, inv) in invs.iter().enumerate() {
        let hk = h.eval(j as f64 / nf);
        let w_bar = wbar[j] * matvec(inv, &one)[0] / (nf * nf);
        let a = matvec(inv, &vt)[0] / (nf * nf);
        let b = gamma * i_total * matvec(inv, &e)[0];
        pm += w_bar * hk;
        pt += (a + b) * hk;
    }
    let e_thm = temperature;
    let limit_mech = w_mech(r0, lambda, eta, gamma) * h.eval(0.0);
    let limit_thermal = w_thm(r0, e_thm, lambda, eta, gamma) * h.mean();
    Ok(LaplacePrediction {
        n,
        lambda,
        eta,
        paired: (pm + pt) / nf,
        paired_mech: pm / nf,
        paired_thermal: pt / nf,
        i_bar_scaled: ibar_s,
        i_tilde,
        s_n,
        limit: limit_mech + limit_thermal,
        limit_mech,
        limit_thermal,
    })
}

/// Mean part of the Laplace-Wigner system against its macroscopic limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechPairing {
    pub n: usize,
    /// `Σ_η [w̄⁺(λ,η,·) (FG)*(η,·)]_n` from `w̄ = W̄⁺ M_n⁻¹ 1`.
    pub paired: C64,
    /// `Σ_η W_mech⁺(λ,η) (FG)*(η,0)`.
    pub limit: C64,
    /// `γn²Ī_n(λ,η)` per requested `η`.
    pub i_bar_scaled: Vec<C64>,
    /// `(2γ)⁻¹L(F((∂_u r)²)(η))(λ)` per `η`.
    pub i_bar_limit: Vec<C64>,
}

/// Pairs the exact mean Laplace-Wigner function with
/// `G(u,v) = Σ_η g_η e^{2πiηu} h(v)`, given as `(η, g_η)` pairs.
pub fn mech_pairing(
    r0: &MacroProfile,
    lambda: f64,
    gamma: f64,
    n: usize,
    g: &[(i64, C64)],
    h: &MacroProfile,
) -> Result<MechPairing> {
    let nf = n as f64;
    let mut paired = C64::new(0.0, 0.0);
    let mut limit = C64::new(0.0, 0.0);
    let mut i_bar_scaled = Vec::new();
    let mut i_bar_limit = Vec::new();
    for &(eta, g_eta) in g {
        let wbar = discrete_profile_wigner(r0, n, eta);
        let mut ib = C64::new(0.0, 0.0);
        for (j, &w) in wbar.iter().enumerate() {
            if w.norm() == 0.0 {
                continue;
            }
            let m = build_mn(lambda, eta, j as f64 / nf, n, gamma)?;
            let x = m.solve_normalized(&ones());
            let fg = g_eta * h.eval(j as f64 / nf);
            paired += w * x[0] / (nf * nf) * fg.conj() / nf;
            ib += w * (0..4).map(|i| E[i] * x[i]).sum::<C64>();
        }
        i_bar_scaled.push(gamma * ib / nf);
        i_bar_limit.push(gradient_source(r0, lambda, eta, gamma));
        limit += w_mech(r0, lambda, eta, gamma) * (g_eta * h.eval(0.0)).conj();
    }
    Ok(MechPairing {
        n,
        paired,
        limit,
        i_bar_scaled,
        i_bar_limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z0Report {
    pub n: usize,
    pub rho: f64,
    /// `γn² z̃⁰_n = γn²[e·(M_n⁻¹ṽ⁰)]_n`.
    pub value: C64,
    /// `F e_thm(0)(η)`.
    pub predicted: C64,
    /// `½([W̃⁺]_n + [W̃⁻]_n)`.
    pub head: C64,
    /// `γK⁽¹⁾_n`, wavenumbers with `|sin πk| ≥ n^{−ρ}`.
    pub k1: C64,
    /// `γK⁽²⁾_n`, the complement.
    pub k2: C64,
    pub near_zero_count: usize,
    /// `|value − head − k1 − k2|`.
    pub split_residual: f64,
}

/// Evaluates `γn²z̃⁰_n` for a fluctuation vector `ṽ⁰(η,k)` given on the grid
/// `k = j/n`, and its decomposition around the cutoff set.
pub fn z0_limit(
    v_tilde: &[[C64; 4]],
    lambda: f64,
    eta: i64,
    gamma: f64,
    rho: f64,
    e_thm0: &MacroProfile,
) -> Result<Z0Report> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(invalid("rho", format!("must lie in (0, 1/2), got {rho}")));
    }
    let n = v_tilde.len();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let nf = n as f64;
    let cut = nf.powf(-rho);
    let (mut value, mut head, mut k1, mut k2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut near = 0;
    for (j, v) in v_tilde.iter().enumerate() {
        let k = j as f64 / nf;
        let row = build_mn(lambda, eta, k, n, gamma)?.e_row();
        let full: C64 = (0..4).map(|i| row[i] * v[i]).sum();
        let rest: C64 = (0..4).map(|i| (row[i] - U[i] / (2.0 * gamma)) * v[i]).sum();
        value += full;
        head += 0.5 * (v[0] + v[3]);
        if (PI * k).sin().abs() >= cut {
            k1 += rest;
        } else {
            k2 += rest;
            near += 1;
        }
    }
    let (value, head, k1, k2) = (gamma * value / nf, head / nf, gamma * k1 / nf, gamma * k2 / nf);
    Ok(Z0Report {
        n,
        rho,
        value,
        predicted: e_thm0.coeff(eta),
        head,
        k1,
        k2,
        near_zero_count: near,
        split_residual: (value - head - k1 - k2).norm(),
    })
}
