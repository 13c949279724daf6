use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::MacroProfile;
use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::fourier::neg_index;
use crate::stats::{neumaier_sum, Moments};

/// Thermal energy spectrum of an initial ensemble, indexed by `k = j/n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub samples: usize,
    /// `(2n)⁻¹ E[|p̂|² + |r̂ − E r̂|²]`.
    pub u_n: Vec<f64>,
    pub u_n_stderr: Vec<f64>,
    /// `(2n)⁻¹ E|ψ̂ − E ψ̂|²`.
    pub u_tilde: Vec<f64>,
    /// `n⁻¹ Σ_k u_n(k)²`.
    pub l2_density: f64,
    /// `(2n)⁻¹ Σ_x E[p_x² + (r_x − E r_x)²]`.
    pub mean_energy: f64,
    /// Number of `k` with `ũ/2 ≤ u ≤ 2ũ` violated.
    pub bound_violations: usize,
    /// `max_k |u(k) − (ũ(k) + ũ(−k))/2 − (2n)⁻¹|E p̂(k)|²|`, each term
    /// replaced by its unbiased estimator.
    pub symmetrization_residual: f64,
}

impl SpectrumReport {
    pub fn ratio_bounds_hold(&self) -> bool {
        self.bound_violations == 0
    }
}

fn mean_modes(modes: &[Vec<C64>], n: usize) -> Vec<C64> {
    let m = modes.len() as f64;
    (0..n)
        .map(|j| modes.iter().map(|v| v[j]).sum::<C64>() / m)
        .collect()
}

/// Estimates the thermal spectrum with ensemble means; centred terms carry
/// the `M/(M−1)` correction so every entry is unbiased.
pub fn thermal_spectrum(ensemble: &[ChainState]) -> Result<SpectrumReport> {
    let first = ensemble.first().ok_or(Error::EmptyEnsemble)?;
    if ensemble.len() < 2 {
        return Err(Error::EnsembleTooSmall {
            needed: 2,
            found: ensemble.len(),
        });
    }
    let n = first.n();
    if let Some(s) = ensemble.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.n(),
        });
    }
    let m = ensemble.len();
    let corr = m as f64 / (m as f64 - 1.0);
    let scale = 1.0 / (2.0 * n as f64);

    let (rh, ph): (Vec<_>, Vec<_>) = ensemble.iter().map(|s| s.dft()).unzip();
    let psi: Vec<Vec<C64>> = rh
        .iter()
        .zip(&ph)
        .map(|(r, p)| r.iter().zip(p).map(|(a, b)| a + C64::i() * b).collect())
        .collect();
    let rbar = mean_modes(&rh, n);
    let pbar = mean_modes(&ph, n);
    let mut pshift = vec![0.0; n];
    let psibar = mean_modes(&psi, n);

    let mut u_n = vec![0.0; n];
    let mut u_n_stderr = vec![0.0; n];
    let mut u_tilde = vec![0.0; n];
    for j in 0..n {
        let mut mu = Moments::default();
        let mut mt = Moments::default();
        let mut mp = Moments::default();
        for i in 0..m {
            mp.push(ph[i][j].norm_sqr() - corr * (ph[i][j] - pbar[j]).norm_sqr());
            mu.push(scale * (ph[i][j].norm_sqr() + corr * (rh[i][j] - rbar[j]).norm_sqr()));
            mt.push(scale * corr * (psi[i][j] - psibar[j]).norm_sqr());
        }
        u_n[j] = mu.mean;
        u_n_stderr[j] = mu.stderr();
        u_tilde[j] = mt.mean;
        pshift[j] = scale * mp.mean;
    }

    let mut site = Vec::with_capacity(n);
    for x in 0..n {
        let er = ensemble.iter().map(|s| s.r()[x]).sum::<f64>() / m as f64;
        let v = ensemble
            .iter()
            .map(|s| s.p()[x].powi(2) + corr * (s.r()[x] - er).powi(2))
            .sum::<f64>()
            / m as f64;
        site.push(v);
    }
    let mean_energy = scale * neumaier_sum(site);
    let l2_density = neumaier_sum(u_n.iter().map(|u| u * u)) / n as f64;

    let tol = 1e-12 * (1.0 + u_n.iter().cloned().fold(0.0, f64::max));
    let bound_violations = (0..n)
        .filter(|&j| u_n[j] < 0.5 * u_tilde[j] - tol || u_n[j] > 2.0 * u_tilde[j] + tol)
        .count();
    let symmetrization_residual = (0..n)
        .map(|j| {
            let sym = 0.5 * (u_tilde[j] + u_tilde[neg_index(j, n)]);
            (u_n[j] - sym - pshift[j]).abs()
        })
        .fold(0.0, f64::max);

    Ok(SpectrumReport {
        n,
        samples: m,
        u_n,
        u_n_stderr,
        u_tilde,
        l2_density,
        mean_energy,
        bound_violations,
        symmetrization_residual,
    })
}

/// Thresholds used by [`check_assumptions`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssumptionThresholds {
    /// Largest allowed `|mean|/stderr` over sites.
    pub max_z: f64,
    /// Largest allowed `n⁻¹Σu² / (n⁻¹Σu)²`; equals 1 for a flat spectrum.
    pub max_l2_ratio: f64,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        AssumptionThresholds {
            max_z: 6.0,
            max_l2_ratio: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionDiagnostics {
    pub samples: usize,
    /// `n⁻¹ Σ_x E e_x`.
    pub mean_energy_per_site: f64,
    pub thermal_energy: f64,
    pub max_momentum_z: f64,
    pub max_elongation_z: Option<f64>,
    pub l2_density: f64,
    pub l2_ratio: f64,
    pub violations: Vec<String>,
}

impl AssumptionDiagnostics {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn z(mean_dev: f64, stderr: f64) -> f64 {
    if mean_dev == 0.0 {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        mean_dev.abs() / stderr
    }
}

/// Checks mean-zero momenta, the elongation profile (when `r0` is given) and
/// square integrability of the thermal spectrum.
pub fn check_assumptions(
    ensemble: &[ChainState],
    r0: Option<&MacroProfile>,
    thresholds: AssumptionThresholds,
) -> AssumptionDiagnostics {
    let mut out = AssumptionDiagnostics {
        samples: ensemble.len(),
        mean_energy_per_site: f64::NAN,
        thermal_energy: f64::NAN,
        max_momentum_z: f64::NAN,
        max_elongation_z: None,
        l2_density: f64::NAN,
        l2_ratio: f64::NAN,
        violations: Vec::new(),
    };
    let spec = match thermal_spectrum(ensemble) {
        Ok(s) => s,
        Err(e) => {
            out.violations.push(format!("spectrum unavailable: {e}"));
            return out;
        }
    };
    let n = spec.n;
    let m = ensemble.len() as f64;
    out.mean_energy_per_site = ensemble.iter().map(|s| s.total_energy()).sum::<f64>() / (m * n as f64);
    out.thermal_energy = spec.mean_energy;
    out.l2_density = spec.l2_density;
    let e2 = spec.mean_energy * spec.mean_energy;
    out.l2_ratio = if spec.l2_density == 0.0 { 0.0 } else { spec.l2_density / e2 };

    let grid = r0.map(|p| p.on_grid(n));
    let mut zp: f64 = 0.0;
    let mut zr: f64 = 0.0;
    for x in 0..n {
        let mut mp = Moments::default();
        let mut mr = Moments::default();
        for s in ensemble {
            mp.push(s.p()[x]);
            mr.push(s.r()[x]);
        }
        zp = zp.max(z(mp.mean, mp.stderr()));
        if let Some(g) = &grid {
            zr = zr.max(z(mr.mean - g[x], mr.stderr()));
        }
    }
    out.max_momentum_z = zp;
    if grid.is_some() {
        out.max_elongation_z = Some(zr);
    }
    if zp > thresholds.max_z {
        out.violations.push(format!("momentum mean z-score {zp:.2} exceeds {}", thresholds.max_z));
    }
    if zr > thresholds.max_z {
        out.violations.push(format!("elongation profile z-score {zr:.2} exceeds {}", thresholds.max_z));
    }
    if out.l2_ratio > thresholds.max_l2_ratio {
        out.violations.push(format!(
            "spectral l2 ratio {:.2} exceeds {}",
            out.l2_ratio, thresholds.max_l2_ratio
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::local_gibbs_ensemble;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    #[test]
    fn ensemble_errors() {
        assert_eq!(thermal_spectrum(&[]).unwrap_err(), Error::EmptyEnsemble);
        assert!(matches!(
            thermal_spectrum(&[ChainState::zeros(4)]).unwrap_err(),
            Error::EnsembleTooSmall { .. }
        ));
        assert!(matches!(
            thermal_spectrum(&[ChainState::zeros(4), ChainState::zeros(5)]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn deterministic_ensemble() {
        let s = ChainState::new(vec![1.0, -0.5, 2.0, 0.0, 0.3], vec![0.2, -0.1, 0.0, 0.7, -0.4]).unwrap();
        let rep = thermal_spectrum(&[s.clone(), s.clone(), s.clone()]).unwrap();
        let (_, ph) = s.dft();
        for j in 0..5 {
            assert!((rep.u_n[j] - ph[j].norm_sqr() / 10.0).abs() < 1e-14);
        }
        let z = ChainState::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        let rep = thermal_spectrum(&[z.clone(), z]).unwrap();
        assert!(rep.u_n.iter().all(|&u| u.abs() < 1e-14));
        assert_eq!(rep.l2_density, 0.0);
    }

    #[test]
    fn flat_gibbs_spectrum_and_parseval() {
        let n = 32;
        let ens = local_gibbs_ensemble(&MacroProfile::constant(1.0), &MacroProfile::constant(0.5), n, 4000, 5).unwrap();
        let rep = thermal_spectrum(&ens).unwrap();
        for j in 0..n {
            assert!((rep.u_n[j] - 0.5).abs() < 5.0 * rep.u_n_stderr[j], "k={j}");
        }
        let avg = rep.u_n.iter().sum::<f64>() / n as f64;
        assert!((avg - rep.mean_energy).abs() < 1e-12 * avg);
        assert!(rep.symmetrization_residual < 1e-12);
    }

    #[test]
    fn pointwise_bound_can_fail() {
        // p̂(k₀) = i r̂(k₀) puts all fluctuation of mode k₀ into ψ̂(−k₀).
        let n = 16;
        let ens: Vec<ChainState> = (0..200)
            .map(|i| {
                let mut rng = stream(9, i);
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let r = (0..n).map(|x| a * (2.0 * PI * x as f64 / n as f64).cos() + b * (2.0 * PI * x as f64 / n as f64).sin());
                let p = (0..n).map(|x| -a * (2.0 * PI * x as f64 / n as f64).sin() + b * (2.0 * PI * x as f64 / n as f64).cos());
                ChainState::new(r.collect(), p.collect()).unwrap()
            })
            .collect();
        let rep = thermal_spectrum(&ens).unwrap();
        assert!(rep.u_tilde[1] < 1e-20 && rep.u_n[1] > 1.0);
        assert!(!rep.ratio_bounds_hold());
        assert!(rep.symmetrization_residual < 1e-10);
    }

    #[test]
    fn gibbs_passes_checks() {
        let tau = MacroProfile::cosine(1.0, 0.5, 1);
        let temp = MacroProfile::cosine(1.0, 0.25, 1);
        let ens = local_gibbs_ensemble(&tau, &temp, 64, 400, 21).unwrap();
        let d = check_assumptions(&ens, Some(&tau), AssumptionThresholds::default());
        assert!(d.passed(), "{:?}", d.violations);
        assert!((d.l2_ratio - 1.0).abs() < 0.2);
    }

    #[test]
    fn concentrated_spectrum_flagged() {
        let ratio = |n: usize| {
            let ens: Vec<ChainState> = (0..400)
                .map(|i| {
                    let mut rng = stream(13, i);
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    let r = (0..n).map(|x| {
                        let th = 2.0 * PI * x as f64 / n as f64;
                        a * th.cos() + b * th.sin()
                    });
                    ChainState::new(r.collect(), vec![0.0; n]).unwrap()
                })
                .collect();
            check_assumptions(&ens, None, AssumptionThresholds::default())
        };
        let small = ratio(8);
        let big = ratio(64);
        assert!((big.l2_ratio / small.l2_ratio - 8.0).abs() < 1e-6);
        assert!(!big.passed());
    }

    #[test]
    fn zero_temperature_passes() {
        let s = ChainState::new(MacroProfile::cosine(1.0, 0.5, 1).on_grid(32), vec![0.0; 32]).unwrap();
        let d = check_assumptions(&[s.clone(), s], Some(&MacroProfile::cosine(1.0, 0.5, 1)), AssumptionThresholds::default());
        assert!(d.passed(), "{:?}", d.violations);
        assert_eq!(d.l2_density, 0.0);
    }
}
