use num_complex::Complex64 as C64;

use super::field::{Species, WignerField};
use crate::error::{invalid, Result};
use crate::initial::MacroProfile;
use crate::matrix::discrete_profile_wigner;

/// One separable term `c·e^{2πiηu} h(v)` of a test function.
#[derive(Debug, Clone, PartialEq)]
pub struct TestTerm {
    pub eta: i64,
    pub coeff: C64,
    pub h: MacroProfile,
}

/// Test function `G(u,v) = Σ c_i e^{2πiη_i u} h_i(v)`, so that
/// `(FG)(η,v) = Σ_{η_i = η} c_i h_i(v)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestFunction {
    pub terms: Vec<TestTerm>,
}

impl TestFunction {
    pub fn separable(eta: i64, h: MacroProfile) -> Self {
        TestFunction {
            terms: vec![TestTerm {
                eta,
                coeff: C64::new(1.0, 0.0),
                h,
            }],
        }
    }

    /// `G(u,v) = g(u)`.
    pub fn of_u(g: &MacroProfile) -> Self {
        TestFunction {
            terms: g
                .coefficients()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(eta, coeff)| TestTerm {
                    eta,
                    coeff,
                    h: MacroProfile::constant(1.0),
                })
                .collect(),
        }
    }

    pub fn max_eta(&self) -> usize {
        self.terms.iter().map(|t| t.eta.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `(FG)(η, v)`.
    pub fn fourier(&self, eta: i64, v: f64) -> C64 {
        self.terms.iter().filter(|t| t.eta == eta).map(|t| t.coeff * t.h.eval(v)).sum()
    }

    /// `G(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t.eta as f64 * u) * t.h.eval(v))
            .sum()
    }

    fn etas(&self) -> Vec<i64> {
        let mut e: Vec<i64> = self.terms.iter().map(|t| t.eta).collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

/// `⟨W, G⟩ = n⁻¹ Σ_k Σ_η W⁺(η,k) (FG)*(η,k)`.
///
/// For `G = G(u)` this equals `n⁻¹ Σ_x avg[E_x] G*(x/n)`.
pub fn pair_with_test_function(field: &WignerField, g: &TestFunction) -> Result<C64> {
    if g.max_eta() > field.eta_max() {
        return Err(invalid(
            "test function",
            format!("uses |η| = {} beyond M = {}", g.max_eta(), field.eta_max()),
        ));
    }
    let n = field.n();
    let mut acc = C64::default();
    for eta in g.etas() {
        for j in 0..n {
            acc += field.value(Species::WPlus, eta, j)? * g.fourier(eta, j as f64 / n as f64).conj();
        }
    }
    Ok(acc / n as f64)
}

/// `Σ_η [W_n(r;η,·)(FG)*(η,·)]_n` for the grid Wigner function of a profile.
pub fn profile_pairing(r: &MacroProfile, n: usize, g: &TestFunction) -> C64 {
    let mut acc = C64::default();
    for eta in g.etas() {
        let w = discrete_profile_wigner(r, n, eta);
        for (j, wj) in w.iter().enumerate() {
            acc += wj * g.fourier(eta, j as f64 / n as f64).conj();
        }
    }
    acc / n as f64
}

/// Large-`n` limit `½ ∫ r²(u) G*(u,0) du` of [`profile_pairing`].
pub fn profile_pairing_limit(r: &MacroProfile, g: &TestFunction) -> C64 {
    let r2 = r.product(r);
    g.etas().into_iter().map(|eta| 0.5 * r2.coeff(eta) * g.fourier(eta, 0.0).conj()).sum()
}
