use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{invalid, Error, Result};
use crate::fourier::{neg_index, shift_index, Dft};
use crate::stats::Moments;

/// The four Wigner-type functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    WPlus,
    YPlus,
    YMinus,
    WMinus,
}

impl Species {
    pub const ALL: [Species; 4] = [Species::WPlus, Species::YPlus, Species::YMinus, Species::WMinus];

    pub fn label(self) -> &'static str {
        match self {
            Species::WPlus => "W+",
            Species::YPlus => "Y+",
            Species::YMinus => "Y-",
            Species::WMinus => "W-",
        }
    }
}

/// Largest supported `|η|`.
pub const MAX_ETA: usize = 8;

fn check_eta_max(n: usize, m: usize) -> Result<()> {
    if m > MAX_ETA {
        return Err(invalid("eta_max", format!("at most {MAX_ETA}, got {m}")));
    }
    if 2 * m >= n {
        return Err(invalid("eta_max", format!("need 2M < n, got M = {m}, n = {n}")));
    }
    Ok(())
}

/// Per-cell statistics of `W⁺` and `Y⁺`; the minus species follow by
/// the exact symmetries `W⁻(η,k) = (W⁺)*(−η,−k)` and `Y⁻(η,k) = (Y⁺)*(−η,−k)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Cell {
    w_re: Moments,
    w_im: Moments,
    y_re: Moments,
    y_im: Moments,
}

impl Cell {
    fn push(&mut self, w: C64, y: C64) {
        self.w_re.push(w.re);
        self.w_im.push(w.im);
        self.y_re.push(y.re);
        self.y_im.push(y.im);
    }

    fn merge(&mut self, o: &Cell) {
        self.w_re.merge(&o.w_re);
        self.w_im.merge(&o.w_im);
        self.y_re.merge(&o.y_re);
        self.y_im.merge(&o.y_im);
    }
}

/// Ensemble estimate of `(W⁺, Y⁺, Y⁻, W⁻)` on `η ∈ [−M, M]`, `k ∈ T̂_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerField {
    n: usize,
    eta_max: usize,
    t: f64,
    count: u64,
    /// `(W⁺, Y⁺)` at index `(η+M)·n + j`.
    values: Vec<[C64; 2]>,
    /// Standard errors of the real and imaginary parts, same layout.
    stderr: Vec<[C64; 2]>,
}

impl WignerField {
    fn zeros(n: usize, eta_max: usize, t: f64) -> Self {
        let len = (2 * eta_max + 1) * n;
        WignerField {
            n,
            eta_max,
            t,
            count: 0,
            values: vec![[C64::default(); 2]; len],
            stderr: vec![[C64::default(); 2]; len],
        }
    }

    /// Single-sample field of one wave function `ψ̂`.
    pub fn from_wave_hat(psi_hat: &[C64], eta_max: usize, t: f64) -> Result<Self> {
        let n = psi_hat.len();
        check_eta_max(n, eta_max)?;
        let mut f = Self::zeros(n, eta_max, t);
        f.count = 1;
        let s = 1.0 / (2.0 * n as f64);
        let m = eta_max as i64;
        for eta in -m..=m {
            for j in 0..n {
                let jp = shift_index(j, eta, n);
                let idx = f.index(eta, j);
                // At η = 0 the product is |ψ̂|², kept exactly real.
                let w = if eta == 0 {
                    C64::new(s * psi_hat[j].norm_sqr(), 0.0)
                } else {
                    s * psi_hat[jp] * psi_hat[j].conj()
                };
                f.values[idx] = [w, s * psi_hat[jp] * psi_hat[neg_index(j, n)]];
            }
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta_max(&self) -> usize {
        self.eta_max
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ensemble_count(&self) -> u64 {
        self.count
    }

    fn index(&self, eta: i64, j: usize) -> usize {
        (eta + self.eta_max as i64) as usize * self.n + j
    }

    fn check(&self, eta: i64, j: usize) -> Result<()> {
        if eta.unsigned_abs() as usize > self.eta_max {
            return Err(invalid("eta", format!("|η| = {} exceeds M = {}", eta.abs(), self.eta_max)));
        }
        if j >= self.n {
            return Err(Error::IndexOutOfRange { index: j, n: self.n });
        }
        Ok(())
    }

    /// Value of `species` at `(η, k = j/n)`.
    pub fn value(&self, species: Species, eta: i64, j: usize) -> Result<C64> {
        self.check(eta, j)?;
        Ok(match species {
            Species::WPlus => self.values[self.index(eta, j)][0],
            Species::YPlus => self.values[self.index(eta, j)][1],
            Species::YMinus => self.values[self.index(-eta, neg_index(j, self.n))][1].conj(),
            Species::WMinus => self.values[self.index(-eta, neg_index(j, self.n))][0].conj(),
        })
    }

    /// Standard errors `(re, im)` packed as a complex number.
    pub fn stderr(&self, species: Species, eta: i64, j: usize) -> Result<C64> {
        self.check(eta, j)?;
        Ok(match species {
            Species::WPlus => self.stderr[self.index(eta, j)][0],
            Species::YPlus => self.stderr[self.index(eta, j)][1],
            Species::YMinus => self.stderr[self.index(-eta, neg_index(j, self.n))][1],
            Species::WMinus => self.stderr[self.index(-eta, neg_index(j, self.n))][0],
        })
    }

    /// The k-average `[F(η,·)]_n = n⁻¹ Σ_k F(η,k)`.
    pub fn k_average(&self, species: Species, eta: i64) -> Result<C64> {
        let mut acc = C64::default();
        for j in 0..self.n {
            acc += self.value(species, eta, j)?;
        }
        Ok(acc / self.n as f64)
    }

    /// `self − other` cellwise; standard errors are those of `self`.
    pub fn minus(&self, other: &WignerField) -> Result<WignerField> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            a[0] -= b[0];
            a[1] -= b[1];
        }
        Ok(out)
    }

    pub(crate) fn same_shape(&self, other: &WignerField) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if self.eta_max != other.eta_max {
            return Err(invalid("eta_max", "fields have different η ranges"));
        }
        Ok(())
    }

    /// `Σ_i c_i F_i` over fields of equal shape, with time `t` and unit count.
    pub(crate) fn linear_combination(fields: &[&WignerField], weights: &[f64], t: f64) -> Result<WignerField> {
        let first = fields.first().ok_or(Error::EmptyEnsemble)?;
        let mut out = Self::zeros(first.n, first.eta_max, t);
        out.count = first.count;
        for (f, &c) in fields.iter().zip(weights) {
            first.same_shape(f)?;
            for (a, b) in out.values.iter_mut().zip(&f.values) {
                a[0] += c * b[0];
                a[1] += c * b[1];
            }
        }
        Ok(out)
    }

    pub(crate) fn sup_norm(&self) -> f64 {
        self.values.iter().flat_map(|v| v.iter()).map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Long-format rows `(species, η, k index, re, im, stderr_re, stderr_im)`.
    pub fn rows(&self) -> Vec<WignerRow> {
        let m = self.eta_max as i64;
        let mut out = Vec::with_capacity(4 * self.values.len());
        for sp in Species::ALL {
            for eta in -m..=m {
                for j in 0..self.n {
                    let v = self.value(sp, eta, j).expect("in range");
                    let e = self.stderr(sp, eta, j).expect("in range");
                    out.push(WignerRow {
                        species: sp.label(),
                        eta,
                        k_index: j,
                        re: v.re,
                        im: v.im,
                        stderr_re: e.re,
                        stderr_im: e.im,
                    });
                }
            }
        }
        out
    }
}

/// One exported cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerRow {
    pub species: &'static str,
    pub eta: i64,
    pub k_index: usize,
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

/// Mergeable sum of per-sample Wigner fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerAccumulator {
    n: usize,
    eta_max: usize,
    t: f64,
    cells: Vec<Cell>,
}

impl WignerAccumulator {
    pub fn new(n: usize, eta_max: usize, t: f64) -> Result<Self> {
        check_eta_max(n, eta_max)?;
        Ok(WignerAccumulator {
            n,
            eta_max,
            t,
            cells: vec![Cell::default(); (2 * eta_max + 1) * n],
        })
    }

    pub fn count(&self) -> u64 {
        self.cells.first().map_or(0, |c| c.w_re.count)
    }

    /// Adds one sample given as a single-sample field.
    pub fn push_field(&mut self, f: &WignerField) -> Result<()> {
        if f.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: f.n,
            });
        }
        if f.eta_max != self.eta_max {
            return Err(invalid("eta_max", "sample has a different η range"));
        }
        for (c, v) in self.cells.iter_mut().zip(&f.values) {
            c.push(v[0], v[1]);
        }
        Ok(())
    }

    pub fn push_wave_hat(&mut self, psi_hat: &[C64]) -> Result<()> {
        self.push_field(&WignerField::from_wave_hat(psi_hat, self.eta_max, self.t)?)
    }

    pub fn merge(&mut self, o: &WignerAccumulator) -> Result<()> {
        if o.n != self.n || o.eta_max != self.eta_max {
            return Err(invalid("accumulator", "shapes differ"));
        }
        for (a, b) in self.cells.iter_mut().zip(&o.cells) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn finalize(&self) -> Result<WignerField> {
        let count = self.count();
        if count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let mut f = WignerField::zeros(self.n, self.eta_max, self.t);
        f.count = count;
        for (i, c) in self.cells.iter().enumerate() {
            f.values[i] = [C64::new(c.w_re.mean, c.w_im.mean), C64::new(c.y_re.mean, c.y_im.mean)];
            f.stderr[i] = [
                C64::new(c.w_re.stderr(), c.w_im.stderr()),
                C64::new(c.y_re.stderr(), c.y_im.stderr()),
            ];
        }
        Ok(f)
    }
}

fn common_n_t(ensemble: &[ChainState]) -> Result<(usize, f64)> {
    let first = ensemble.first().ok_or(Error::EmptyEnsemble)?;
    let (n, t) = (first.n(), first.t());
    for s in ensemble {
        if s.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.n() });
        }
        if (s.t() - t).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(invalid("t", format!("ensemble mixes times {t} and {}", s.t())));
        }
    }
    Ok((n, t))
}

/// Plain ensemble average of the four Wigner functions.
pub fn wigner_estimate(ensemble: &[ChainState], eta_max: usize) -> Result<WignerField> {
    let (n, t) = common_n_t(ensemble)?;
    let mut acc = WignerAccumulator::new(n, eta_max, t)?;
    for s in ensemble {
        acc.push_wave_hat(&s.wave_function_hat())?;
    }
    acc.finalize()
}

/// `n⁻¹ avg Ê(η/n)` with `Ê(q) = Σ_x E_x e^{−2πiqx}`.
pub fn energy_fourier(ensemble: &[ChainState], eta: i64) -> Result<C64> {
    let (n, _) = common_n_t(ensemble)?;
    let dft = Dft::new(n);
    let mut acc = C64::default();
    for s in ensemble {
        acc += dft.forward_real(&s.energy_per_site())[eta.rem_euclid(n as i64) as usize];
    }
    Ok(acc / (n as f64 * ensemble.len() as f64))
}

/// Ensemble-mean wave `avg ψ̂`.
pub fn mean_wave_hat(ensemble: &[ChainState]) -> Result<Vec<C64>> {
    let (n, _) = common_n_t(ensemble)?;
    let mut acc = vec![C64::default(); n];
    for s in ensemble {
        for (a, v) in acc.iter_mut().zip(s.wave_function_hat()) {
            *a += v;
        }
    }
    let inv = 1.0 / ensemble.len() as f64;
    Ok(acc.into_iter().map(|v| v * inv).collect())
}

/// Mean part `W̄` (from the ensemble-mean wave) and fluctuation `W̃ = W − W̄`.
pub fn mean_fluct_decompose(ensemble: &[ChainState], eta_max: usize) -> Result<(WignerField, WignerField)> {
    if ensemble.len() < 2 {
        return Err(if ensemble.is_empty() {
            Error::EmptyEnsemble
        } else {
            Error::EnsembleTooSmall {
                needed: 2,
                found: ensemble.len(),
            }
        });
    }
    let full = wigner_estimate(ensemble, eta_max)?;
    let mut mean = WignerField::from_wave_hat(&mean_wave_hat(ensemble)?, eta_max, full.t)?;
    mean.count = full.count;
    let fluct = full.minus(&mean)?;
    Ok((mean, fluct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{local_gibbs_ensemble, MacroProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_ensemble(n: usize, size: usize, seed: u64) -> Vec<ChainState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..size)
            .map(|_| {
                let r = (0..n).map(|_| rng.random_range(-1.0..1.5)).collect();
                let p = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                ChainState::new(r, p).unwrap()
            })
            .collect()
    }

    #[test]
    fn plane_wave() {
        let n = 16;
        let r = (0..n).map(|x| (2.0 * PI * x as f64 / n as f64).cos()).collect();
        let p = (0..n).map(|x| (2.0 * PI * x as f64 / n as f64).sin()).collect();
        let f = wigner_estimate(&[ChainState::new(r, p).unwrap()], 2).unwrap();
        for eta in -2..=2 {
            for j in 0..n {
                let v = f.value(Species::WPlus, eta, j).unwrap();
                let want = if eta == 0 && j == 1 { n as f64 / 2.0 } else { 0.0 };
                assert!((v - want).norm() < 1e-12, "eta={eta} j={j} {v}");
            }
        }
    }

    #[test]
    fn zero_state() {
        let f = wigner_estimate(&[ChainState::zeros(8)], 1).unwrap();
        assert!(f.rows().iter().all(|r| r.re == 0.0 && r.im == 0.0));
    }

    #[test]
    fn symmetries_and_energy_identity() {
        let ens = random_ensemble(24, 7, 3);
        let f = wigner_estimate(&ens, 3).unwrap();
        let n = 24;
        for eta in -3i64..=3 {
            for j in 0..n {
                let jm = neg_index(j, n);
                let wm = f.value(Species::WMinus, eta, j).unwrap();
                assert_eq!(wm, f.value(Species::WPlus, -eta, jm).unwrap().conj());
                let ym = f.value(Species::YMinus, eta, j).unwrap();
                assert_eq!(ym, f.value(Species::YPlus, -eta, jm).unwrap().conj());
            }
            let a = f.k_average(Species::WPlus, eta).unwrap();
            let b = f.k_average(Species::WMinus, eta).unwrap();
            assert!((a - b).norm() < 1e-12);
            let e = energy_fourier(&ens, eta).unwrap();
            assert!((a - e).norm() < 1e-12, "eta={eta}");
        }
        for j in 0..n {
            assert_eq!(f.value(Species::WPlus, 0, j).unwrap().im, 0.0);
            assert!(f.value(Species::WPlus, 0, j).unwrap().re >= 0.0);
        }
    }

    #[test]
    fn merge_matches_single_pass() {
        let ens = random_ensemble(16, 10, 9);
        let whole = wigner_estimate(&ens, 2).unwrap();
        let mut a = WignerAccumulator::new(16, 2, 0.0).unwrap();
        let mut b = WignerAccumulator::new(16, 2, 0.0).unwrap();
        for s in &ens[..4] {
            a.push_wave_hat(&s.wave_function_hat()).unwrap();
        }
        for s in &ens[4..] {
            b.push_wave_hat(&s.wave_function_hat()).unwrap();
        }
        a.merge(&b).unwrap();
        let merged = a.finalize().unwrap();
        assert_eq!(merged.ensemble_count(), 10);
        for j in 0..16 {
            let d = merged.value(Species::YPlus, 1, j).unwrap() - whole.value(Species::YPlus, 1, j).unwrap();
            assert!(d.norm() < 1e-13);
            let e = merged.stderr(Species::WPlus, -1, j).unwrap() - whole.stderr(Species::WPlus, -1, j).unwrap();
            assert!(e.norm() < 1e-13);
        }
    }

    #[test]
    fn validation() {
        assert_eq!(wigner_estimate(&[], 1), Err(Error::EmptyEnsemble));
        assert!(wigner_estimate(&[ChainState::zeros(8)], 4).is_err());
        assert!(wigner_estimate(&[ChainState::zeros(8), ChainState::zeros(9)], 1).is_err());
        assert!(wigner_estimate(&[ChainState::zeros(8), ChainState::zeros(8).with_time(1.0)], 1).is_err());
        assert!(matches!(
            mean_fluct_decompose(&[ChainState::zeros(8)], 1),
            Err(Error::EnsembleTooSmall { .. })
        ));
        let f = wigner_estimate(&[ChainState::zeros(8)], 1).unwrap();
        assert!(f.value(Species::WPlus, 2, 0).is_err());
        assert!(f.value(Species::WPlus, 0, 8).is_err());
    }

    #[test]
    fn deterministic_ensemble_has_no_fluctuation() {
        let one = random_ensemble(16, 1, 5).remove(0);
        let ens = vec![one.clone(), one.clone(), one];
        let (mean, fluct) = mean_fluct_decompose(&ens, 2).unwrap();
        let full = wigner_estimate(&ens, 2).unwrap();
        for r in fluct.rows() {
            assert!(r.re.abs() < 1e-13 && r.im.abs() < 1e-13);
        }
        for j in 0..16 {
            let d = mean.value(Species::WPlus, 1, j).unwrap() - full.value(Species::WPlus, 1, j).unwrap();
            assert!(d.norm() < 1e-13);
        }
    }

    #[test]
    fn local_gibbs_decomposition() {
        let n = 32;
        let tau = MacroProfile::cosine(1.0, 0.5, 1);
        let temp = MacroProfile::constant(1.0);
        // The exact mean wave is the transform of the real profile r₀, so
        // ψ̄(−k) = ψ̄*(k) and the four mean species coincide.
        let exact = WignerField::from_wave_hat(&Dft::new(n).forward_real(&tau.on_grid(n)), 2, 0.0).unwrap();
        for eta in -2..=2 {
            for j in 0..n {
                let w = exact.value(Species::WPlus, eta, j).unwrap();
                for sp in [Species::YPlus, Species::YMinus, Species::WMinus] {
                    assert!((exact.value(sp, eta, j).unwrap() - w).norm() < 1e-12);
                }
            }
        }
        let ens = local_gibbs_ensemble(&tau, &temp, n, 400, 11).unwrap();
        let (mean, fluct) = mean_fluct_decompose(&ens, 2).unwrap();
        let w00 = exact.value(Species::WPlus, 0, 0).unwrap().re;
        assert!((mean.value(Species::WPlus, 0, 0).unwrap().re - w00).abs() < 0.05 * w00);
        let w01 = exact.value(Species::WPlus, 1, 0).unwrap();
        assert!((mean.value(Species::WPlus, 1, 0).unwrap() - w01).norm() < 0.1 * w01.norm());
        let th = fluct.k_average(Species::WPlus, 0).unwrap();
        assert!((th.re - 1.0).abs() < 0.05 && th.im == 0.0, "{th}");
    }
}
