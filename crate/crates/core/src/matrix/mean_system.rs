use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::build_mn;
use crate::chain::evolve_mean_wave;
use crate::error::{invalid, require_positive, Result};
use crate::fourier::{neg_index, shift_index, Dft};
use crate::initial::MacroProfile;
use crate::quadrature::{XGK, WG, WGK};

/// Mean Wigner quadruple `[W̄⁺, Ȳ⁺, Ȳ⁻, W̄⁻]` for `|η| ≤ m`, indexed
/// `[(η + m)·n + j]`.
fn mean_wigner(psi: &[C64], m: i64) -> Vec<[C64; 4]> {
    let n = psi.len();
    let s = 1.0 / (2.0 * n as f64);
    let mut out = Vec::with_capacity((2 * m as usize + 1) * n);
    for eta in -m..=m {
        for j in 0..n {
            let jp = shift_index(j, eta, n);
            let jm = neg_index(j, n);
            // (−k) − η/n on the grid.
            let mk_me = neg_index(jp, n);
            out.push([
                s * psi[jp] * psi[j].conj(),
                s * psi[jp] * psi[jm],
                s * (psi[mk_me] * psi[j]).conj(),
                s * psi[mk_me].conj() * psi[jm],
            ]);
        }
    }
    out
}

/// Right-hand side of the autonomous mean system at `(η, k)`.
fn mean_rhs(w: &[C64; 4], eta: i64, k: f64, n: usize, gamma: f64) -> Result<[C64; 4]> {
    let s = build_mn(1.0, eta, k, n, gamma)?.scalars;
    let nf = n as f64;
    let n2 = nf * nf;
    let i = C64::i();
    let [wp, yp, ym, wm] = *w;
    let g = gamma * n2;
    Ok([
        -i * nf * s.delta_s * wp - n2 * s.sin_k * yp - n2 * s.sin_kn * ym - g * (2.0 * wp - yp - ym),
        n2 * s.sin_k * wp - i * n2 * s.sigma_s * yp - n2 * s.sin_kn * wm - g * (2.0 * yp - wp - wm),
        n2 * s.sin_kn * wp + i * n2 * s.sigma_s * ym - n2 * s.sin_k * wm - g * (2.0 * ym - wp - wm),
        i * nf * s.delta_s * wm + n2 * s.sin_kn * yp + n2 * s.sin_k * ym - g * (2.0 * wm - yp - ym),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlineResidual {
    pub n: usize,
    pub eta_max: i64,
    pub times: Vec<f64>,
    pub step: f64,
    /// Per time, `max|∂_t v̄ − rhs| / (n²·max|v̄| + max|∂_t v̄|)`.
    pub residuals: Vec<f64>,
    pub max_rel_residual: f64,
    pub laplace_lambda: Option<f64>,
    /// `max|M_n w̄ − W̄⁺(0)·1| / max|W̄⁺(0)|` with `w̄` from quadrature.
    pub laplace_rel_residual: Option<f64>,
    pub laplace_quadrature_error: Option<f64>,
}

fn initial_mean_wave(r0: &MacroProfile, n: usize) -> Vec<C64> {
    Dft::new(n).forward_real(&r0.on_grid(n))
}

/// Checks the mean Wigner system by central differences of the exactly
/// evolved mean wave and, optionally, its Laplace-transformed form.
pub fn closed_overline_residual(
    r0: &MacroProfile,
    n: usize,
    t_grid: &[f64],
    gamma: f64,
    eta_max: i64,
    laplace_lambda: Option<f64>,
) -> Result<OverlineResidual> {
    require_positive("gamma", gamma)?;
    if n < 2 || eta_max < 0 {
        return Err(invalid("n", "need n ≥ 2 and eta_max ≥ 0"));
    }
    let nf = n as f64;
    let psi0 = initial_mean_wave(r0, n);
    let h = 1e-4 / (nf * nf * (1.0 + gamma));
    let mut residuals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t < h {
            return Err(invalid("t_grid", format!("times must be at least {h:e}")));
        }
        let at = |s: f64| mean_wigner(&evolve_mean_wave(&psi0, s, gamma), eta_max);
        let (wm, w0, wp) = (at(t - h), at(t), at(t + h));
        let (mut res, mut wmax, mut dmax) = (0.0f64, 0.0f64, 0.0f64);
        for (idx, w) in w0.iter().enumerate() {
            let eta = idx as i64 / n as i64 - eta_max;
            let j = idx % n;
            let rhs = mean_rhs(w, eta, j as f64 / nf, n, gamma)?;
            for c in 0..4 {
                let d = (wp[idx][c] - wm[idx][c]) / (2.0 * h);
                res = res.max((d - rhs[c]).norm());
                dmax = dmax.max(d.norm());
                wmax = wmax.max(w[c].norm());
            }
        }
        let scale = nf * nf * wmax + dmax;
        residuals.push(if scale > 0.0 { res / scale } else { 0.0 });
    }
    let max_rel_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let (laplace_rel_residual, laplace_quadrature_error) = match laplace_lambda {
        Some(lambda) => {
            let (r, e) = laplace_residual(&psi0, gamma, eta_max, lambda)?;
            (Some(r), Some(e))
        }
        None => (None, None),
    };
    Ok(OverlineResidual {
        n,
        eta_max,
        times: t_grid.to_vec(),
        step: h,
        residuals,
        max_rel_residual,
        laplace_lambda,
        laplace_rel_residual,
        laplace_quadrature_error,
    })
}

/// Gauss–Kronrod panels on a geometric time grid, refined where the fast
/// modes still oscillate, until `e^{−λt}` is negligible.
fn laplace_residual(psi0: &[C64], gamma: f64, eta_max: i64, lambda: f64) -> Result<(f64, f64)> {
    require_positive("lambda", lambda)?;
    let n = psi0.len();
    let nf = n as f64;
    let g = gamma * nf * nf;
    let omega_max = 2.0 * nf * nf;
    let t_end = 40.0 / lambda;
    let mut edges = vec![0.0];
    let mut t = 1e-3 / (omega_max + g);
    edges.push(t);
    while t < t_end {
        let next = (2.0 * t).min(t_end);
        let pieces = if t < 45.0 / g {
            ((next - t) * omega_max / 2.0).ceil().max(1.0) as usize
        } else {
            1
        };
        for p in 1..=pieces {
            edges.push(t + (next - t) * p as f64 / pieces as f64);
        }
        t = next;
    }
    let size = (2 * eta_max as usize + 1) * n;
    let mut kron = vec![[C64::new(0.0, 0.0); 4]; size];
    let mut gauss = vec![[C64::new(0.0, 0.0); 4]; size];
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (i, &x) in XGK.iter().enumerate() {
            let nodes: &[f64] = if i == XGK.len() - 1 { &[0.0] } else { &[-1.0, 1.0] };
            for &sgn in nodes {
                let s = mid + sgn * half * x;
                let w = mean_wigner(&evolve_mean_wave(psi0, s, gamma), eta_max);
                let damp = (-lambda * s).exp() * half;
                let wk = WGK[i] * damp;
                let wg = if i % 2 == 1 { WG[i / 2] * damp } else { 0.0 };
                for (idx, v) in w.iter().enumerate() {
                    for c in 0..4 {
                        kron[idx][c] += wk * v[c];
                        if wg != 0.0 {
                            gauss[idx][c] += wg * v[c];
                        }
                    }
                }
            }
        }
    }
    let w0 = mean_wigner(psi0, eta_max);
    let (mut res, mut scale, mut qerr) = (0.0f64, 0.0f64, 0.0f64);
    for (idx, w) in kron.iter().enumerate() {
        let eta = idx as i64 / n as i64 - eta_max;
        let j = idx % n;
        let m = build_mn(lambda, eta, j as f64 / nf, n, gamma)?;
        let entries = m.entries();
        for r in 0..4 {
            let mw: C64 = (0..4).map(|c| entries[r][c] * w[c]).sum();
            res = res.max((mw - w0[idx][0]).norm());
        }
        scale = scale.max(w0[idx][0].norm());
        for c in 0..4 {
            qerr = qerr.max((w[c] - gauss[idx][c]).norm());
        }
    }
    Ok((if scale > 0.0 { res / scale } else { res }, qerr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_is_stationary() {
        let r = closed_overline_residual(&MacroProfile::constant(1.3), 16, &[0.01, 0.1], 1.0, 2, Some(5.0)).unwrap();
        assert!(r.max_rel_residual < 1e-8, "{:?}", r.residuals);
        assert!(r.laplace_rel_residual.unwrap() < 1e-8);
    }

    #[test]
    fn cosine_benchmark() {
        let r0 = MacroProfile::cosine(0.0, 1.0, 1);
        let r = closed_overline_residual(&r0, 32, &[1e-4, 1e-3, 0.01], 1.0, 2, Some(10.0)).unwrap();
        assert!(r.max_rel_residual <= 1e-6, "{:?}", r.residuals);
        assert!(r.laplace_rel_residual.unwrap() <= 1e-6, "{:?}", r.laplace_rel_residual);
    }
}
