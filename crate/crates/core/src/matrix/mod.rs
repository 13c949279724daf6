//! The 4×4 block matrix of the Laplace-transformed Wigner system, its
//! closed-form determinant and inverse, and the asymptotic limits of its
//! coefficients.
//!
//! Raw entries grow like `n²` and the determinant like `n⁸`, so every
//! closed-form quantity is evaluated in normalized form (matrix `/n²`,
//! coefficients `/n⁶`, determinant `/n⁸`) and rescaled only on request.

mod laplace;
mod limits;
mod mean_system;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};
use crate::linalg::{identity_residual, Lu, Mat};

pub use laplace::{
    discrete_profile_wigner, exact_laplace_prediction, gradient_source, local_equilibrium_limit, mech_pairing,
    profile_wigner, w_mech, w_thm, z0_limit, LaplacePrediction, MechPairing, Z0Report,
};
pub use limits::{
    det_sampling, dyadic, lemma72_check, limit_suite, sn_check, trig_integral, CheckReport, DetSampling, Lemma72,
    LimitSuite, SnReport, SweepPoint, TrigIntegral,
};
pub use mean_system::{closed_overline_residual, OverlineResidual};

/// `e = [1, −1, −1, 1]`.
pub const E: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
/// `u = [1, 0, 0, 1]`.
pub const U: [f64; 4] = [1.0, 0.0, 0.0, 1.0];

/// Scalar constituents of `M_n(λ,η,k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnScalars {
    pub a: C64,
    pub b: C64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_n_plus: f64,
    pub gamma_n_minus: f64,
    /// `δ_n s = 2n(sin²π(k+η/n) − sin²πk)`.
    pub delta_s: f64,
    /// `σ_n s = 2(sin²π(k+η/n) + sin²πk)`.
    pub sigma_s: f64,
    /// `δγ_n = n(sin²2π(k+η/n) − sin²2πk)`.
    pub delta_gamma: f64,
    /// `Γ_n = n²(2sin²2πk + 2sin²2π(k+η/n) + (σ_n s)²)`.
    pub big_gamma: f64,
    pub sin_k: f64,
    pub sin_kn: f64,
}

/// Coefficients of the closed-form inverse, each divided by `n⁶`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseCoefficients {
    pub d_plus: C64,
    pub d_minus: C64,
    pub d: C64,
    pub d0: C64,
    pub c: C64,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnMatrix {
    pub lambda: f64,
    pub eta: i64,
    pub k: f64,
    pub n: usize,
    pub gamma: f64,
    pub scalars: MnScalars,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub det_direct: f64,
    pub det_formula: f64,
    pub rel_err: f64,
    /// `Δ_n = det/n⁸`.
    pub delta_n: f64,
    /// `Δ_n` with the `C_n/n³` remainder dropped.
    pub delta_n_dominant: f64,
    /// `n³(Δ_n − dominant)`, the measured `C_n`.
    pub remainder: f64,
    /// Determinant from the block form `|a b* + n³δγ|² − 4n⁴γ⁺γ⁻(Re a)²`.
    pub det_block_form: f64,
}

/// Assembles `M_n(λ,η,k)`.
pub fn build_mn(lambda: f64, eta: i64, k: f64, n: usize, gamma: f64) -> Result<MnMatrix> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !k.is_finite() {
        return Err(invalid("k", "must be finite"));
    }
    let nf = n as f64;
    let h = eta as f64 / nf;
    let kn = k + h;
    let s2 = |x: f64| (PI * x).sin().powi(2);
    // sin²A − sin²B = sin(A+B)·sin(A−B) avoids cancellation for small η/n.
    let delta_s = 2.0 * nf * (PI * (2.0 * k + h)).sin() * (PI * h).sin();
    let sigma_s = 2.0 * (s2(kn) + s2(k));
    let delta_gamma = nf * (2.0 * PI * (2.0 * k + h)).sin() * (2.0 * PI * h).sin();
    let sin_k = (2.0 * PI * k).sin();
    let sin_kn = (2.0 * PI * kn).sin();
    let n2 = nf * nf;
    let base = lambda + 2.0 * gamma * n2;
    let scalars = MnScalars {
        a: C64::new(base, nf * delta_s),
        b: C64::new(base, n2 * sigma_s),
        gamma_plus: gamma + sin_k,
        gamma_minus: gamma - sin_k,
        gamma_n_plus: gamma + sin_kn,
        gamma_n_minus: gamma - sin_kn,
        delta_s,
        sigma_s,
        delta_gamma,
        big_gamma: n2 * (2.0 * sin_k * sin_k + 2.0 * sin_kn * sin_kn + sigma_s * sigma_s),
        sin_k,
        sin_kn,
    };
    Ok(MnMatrix {
        lambda,
        eta,
        k,
        n,
        gamma,
        scalars,
    })
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl MnMatrix {
    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `a/n²`, `b/n²`, `δγ_n/n`.
    fn hat(&self) -> (C64, C64, f64) {
        let n2 = self.nf() * self.nf();
        (self.scalars.a / n2, self.scalars.b / n2, self.scalars.delta_gamma / self.nf())
    }

    /// Entries of `M_n`.
    pub fn entries(&self) -> Mat<4> {
        let s = &self.scalars;
        let n2 = self.nf() * self.nf();
        let z = c(0.0);
        [
            [s.a, c(-n2 * s.gamma_minus), c(-n2 * s.gamma_n_minus), z],
            [c(-n2 * s.gamma_plus), s.b, z, c(-n2 * s.gamma_n_minus)],
            [c(-n2 * s.gamma_n_plus), z, s.b.conj(), c(-n2 * s.gamma_minus)],
            [z, c(-n2 * s.gamma_n_plus), c(-n2 * s.gamma_plus), s.a.conj()],
        ]
    }

    /// `M_n/n²`.
    pub fn normalized(&self) -> Mat<4> {
        let n2 = self.nf() * self.nf();
        self.entries().map(|row| row.map(|v| v / n2))
    }

    /// `Δ_n = det(M_n)/n⁸` from the closed-form determinant.
    pub fn delta_n(&self) -> f64 {
        let s = &self.scalars;
        let nf = self.nf();
        let l = self.lambda / (nf * nf);
        let g = self.gamma;
        let cross = s.delta_s * s.sigma_s + s.delta_gamma;
        let bracket = l * l
            + (4.0 * g * self.lambda + s.delta_s * s.delta_s) / (nf * nf)
            + 2.0 * s.sin_k * s.sin_k
            + 2.0 * s.sin_kn * s.sin_kn
            + s.sigma_s * s.sigma_s;
        cross * cross / (nf * nf) + (l + 2.0 * g).powi(2) * bracket
    }

    /// Closed-form `det(M_n)`.
    pub fn det_formula(&self) -> f64 {
        self.delta_n() * self.nf().powi(8)
    }

    /// Leading part of `Δ_n` with the `C_n/n³` remainder dropped.
    pub fn delta_n_dominant(&self) -> f64 {
        let s = &self.scalars;
        let nf = self.nf();
        let g = self.gamma;
        let cross = s.delta_s * s.sigma_s + s.delta_gamma;
        (4.0 * g * g * s.big_gamma + 4.0 * g * g * (4.0 * self.lambda * g + s.delta_s * s.delta_s) + cross * cross)
            / (nf * nf)
            + 4.0 * g * self.lambda * s.big_gamma / nf.powi(4)
    }

    /// Compares the closed-form determinant with LU on the entries.
    pub fn det_identity(&self) -> Result<DetReport> {
        let n8 = self.nf().powi(8);
        let direct = Lu::new(&self.normalized())?.det().re * n8;
        let formula = self.det_formula();
        let (ah, bh, gh) = self.hat();
        let s = &self.scalars;
        let block = ((ah * bh.conj() + gh).norm_sqr() - 4.0 * s.gamma_plus * s.gamma_minus * ah.re * ah.re) * n8;
        let delta = self.delta_n();
        let dominant = self.delta_n_dominant();
        Ok(DetReport {
            det_direct: direct,
            det_formula: formula,
            rel_err: (direct - formula).abs() / formula.abs(),
            delta_n: delta,
            delta_n_dominant: dominant,
            remainder: (delta - dominant) * self.nf().powi(3),
            det_block_form: block,
        })
    }

    pub fn coefficients(&self) -> InverseCoefficients {
        let (a, b, g) = self.hat();
        let s = &self.scalars;
        let gpm = s.gamma_plus * s.gamma_minus;
        let (ac, bc) = (a.conj(), b.conj());
        InverseCoefficients {
            d_plus: ac * b.norm_sqr() + bc * g - 2.0 * gpm * a.re,
            d_minus: bc * a.norm_sqr() + ac * g - 2.0 * gpm * b.re,
            d: 2.0 * ac * a.re - ac * b - g,
            d0: 2.0 * bc * b.re - a * bc - g,
            c: a * bc + g,
            c0: 2.0 * a.re,
        }
    }

    /// `n⁻⁶` times the adjugate-like numerator of the closed-form inverse.
    fn numerator(&self) -> Mat<4> {
        let k = self.coefficients();
        let s = &self.scalars;
        let (gp, gm, gnp, gnm) = (s.gamma_plus, s.gamma_minus, s.gamma_n_plus, s.gamma_n_minus);
        [
            [k.d_plus, gm * k.d, gnm * k.c.conj(), c(gm * gnm * k.c0)],
            [gp * k.d0, k.d_minus, c(gp * gnm * k.c0), gnm * k.c],
            [gnp * k.c.conj(), c(gm * gnp * k.c0), k.d_minus.conj(), gm * k.d0.conj()],
            [c(gp * gnp * k.c0), gnp * k.c, gp * k.d.conj(), k.d_plus.conj()],
        ]
    }

    /// `n²·M_n⁻¹`, the inverse of [`Self::normalized`], from the closed form.
    pub fn inverse_normalized(&self) -> Mat<4> {
        let delta = self.delta_n();
        self.numerator().map(|row| row.map(|v| v / delta))
    }

    /// `M_n⁻¹` from the closed form.
    pub fn inverse_closed_form(&self) -> Mat<4> {
        let n2 = self.nf() * self.nf();
        self.inverse_normalized().map(|row| row.map(|v| v / n2))
    }

    /// `n²·M_n⁻¹` by LU with partial pivoting.
    pub fn inverse_lu_normalized(&self) -> Result<Mat<4>> {
        Ok(Lu::new(&self.normalized())?.inverse())
    }

    /// `‖(M_n/n²)(n²M_n⁻¹) − I‖_F` for the closed form.
    pub fn inverse_residual(&self) -> f64 {
        identity_residual(&self.normalized(), &self.inverse_normalized())
    }

    /// `n²·M_n⁻¹v`.
    pub fn solve_normalized(&self, v: &[C64; 4]) -> [C64; 4] {
        crate::linalg::matvec(&self.inverse_normalized(), v)
    }

    /// `Ξ_n/n⁶` from the inverse coefficients.
    pub fn xi_from_coefficients(&self) -> C64 {
        let k = self.coefficients();
        let s = &self.scalars;
        c(2.0 * (k.d_plus - k.d_minus).re)
            + s.gamma_minus * (k.d - k.d0.conj())
            + s.gamma_plus * (k.d.conj() - k.d0)
            + C64::new(0.0, 4.0 * s.sin_kn * k.c.im)
            + c(4.0 * s.sin_k * s.sin_kn * k.c0)
    }

    /// `Ξ_n/n⁶` from the expanded expression in the scalars.
    pub fn xi_expanded(&self) -> C64 {
        let s = &self.scalars;
        let nf = self.nf();
        let pre = self.lambda / (nf * nf) + 2.0 * self.gamma;
        let inner = c(2.0 * (s.sigma_s * s.sigma_s - s.delta_s * s.delta_s / (nf * nf)))
            + C64::new(0.0, 4.0 * (s.sin_k - s.sin_kn) * s.sigma_s)
            + C64::new(0.0, 4.0 * (s.sin_kn + s.sin_k) * s.delta_s / nf)
            + c(8.0 * s.sin_k * s.sin_kn);
        pre * inner
    }

    /// `Θ_n/n⁶`, equal to `e·(adjugate)·e` scaled.
    pub fn theta(&self) -> f64 {
        let k = self.coefficients();
        let s = &self.scalars;
        let g = self.gamma;
        let v = c(2.0 * (k.d_plus + k.d_minus + 2.0 * g * g * k.c0 - 2.0 * g * k.c).re)
            - s.gamma_minus * (k.d + k.d0.conj())
            - s.gamma_plus * (k.d.conj() + k.d0);
        v.re
    }

    /// `n²·eᵀM_n⁻¹v`.
    pub fn e_dot_solve(&self, v: &[C64; 4]) -> C64 {
        let x = self.solve_normalized(v);
        (0..4).map(|i| E[i] * x[i]).sum()
    }

    /// `n²·eᵀM_n⁻¹` as a row.
    pub fn e_row(&self) -> [C64; 4] {
        let inv = self.inverse_normalized();
        let mut row = [c(0.0); 4];
        for (i, r) in inv.iter().enumerate() {
            for j in 0..4 {
                row[j] += E[i] * r[j];
            }
        }
        row
    }
}

pub(crate) fn ones() -> [C64; 4] {
    [c(1.0); 4]
}

pub(crate) fn e_vec() -> [C64; 4] {
    E.map(c)
}
