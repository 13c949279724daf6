use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::rotation::ModeRotation;
use crate::error::{invalid, Error, Result};
use crate::fourier::{neg_index, Dft};
use crate::stats::neumaier_sum;

/// Configuration `(r, p)` of `n` oscillators at macroscopic time `t`.
///
/// The Fourier pair `(r̂, p̂)` is cached when known; operations that would
/// need a full transform to keep it current drop it instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    r: Vec<f64>,
    p: Vec<f64>,
    t: f64,
    modes: Option<(Vec<C64>, Vec<C64>)>,
}

impl ChainState {
    pub fn new(r: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("n", "chain must have at least one site"));
        }
        if r.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                found: p.len(),
            });
        }
        Ok(ChainState {
            r,
            p,
            t: 0.0,
            modes: None,
        })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        ChainState {
            r: vec![0.0; n],
            p: vec![0.0; n],
            t: 0.0,
            modes: None,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `E_x = (p_x² + r_x²)/2`.
    pub fn energy_per_site(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.p)
            .map(|(r, p)| 0.5 * (p * p + r * r))
            .collect()
    }

    /// `H_n`, summed with compensation.
    pub fn total_energy(&self) -> f64 {
        neumaier_sum(self.r.iter().zip(&self.p).map(|(r, p)| 0.5 * (p * p + r * r)))
    }

    pub fn total_elongation(&self) -> f64 {
        neumaier_sum(self.r.iter().copied())
    }

    pub fn total_momentum(&self) -> f64 {
        neumaier_sum(self.p.iter().copied())
    }

    /// Fourier pair `(r̂, p̂)`.
    pub fn dft(&self) -> (Vec<C64>, Vec<C64>) {
        if let Some((rh, ph)) = &self.modes {
            return (rh.clone(), ph.clone());
        }
        let d = Dft::new(self.n());
        (d.forward_real(&self.r), d.forward_real(&self.p))
    }

    /// Cached Fourier pair, if valid.
    pub fn mode_cache(&self) -> Option<(&[C64], &[C64])> {
        self.modes.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn with_mode_cache(mut self) -> Self {
        if self.modes.is_none() {
            self.modes = Some(self.dft());
        }
        self
    }

    pub fn invalidate_modes(&mut self) {
        self.modes = None;
    }

    /// Exact harmonic evolution over `dt` with no flips.
    pub fn evolve_deterministic(&self, dt: f64) -> Result<ChainState> {
        if !(dt >= 0.0) {
            return Err(invalid("dt", format!("must be nonnegative, got {dt}")));
        }
        let n = self.n();
        let (mut rh, mut ph) = self.dft();
        for j in 1..n {
            let m = ModeRotation::new(j, n);
            let (a, b) = m.apply(rh[j], ph[j], dt);
            rh[j] = a;
            ph[j] = b;
        }
        let mut out = from_modes(&rh, &ph, self.t + dt)?;
        out.modes = Some((rh, ph));
        Ok(out)
    }

    /// `p_x ↦ -p_x`.
    pub fn flip(&self, x: usize) -> Result<ChainState> {
        let mut s = self.clone();
        s.flip_in_place(x)?;
        Ok(s)
    }

    pub fn flip_in_place(&mut self, x: usize) -> Result<()> {
        let n = self.n();
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        let delta = -2.0 * self.p[x];
        self.p[x] = -self.p[x];
        if let Some((_, ph)) = &mut self.modes {
            for (j, v) in ph.iter_mut().enumerate() {
                let th = -2.0 * PI * ((j * x) % n) as f64 / n as f64;
                *v += delta * C64::from_polar(1.0, th);
            }
        }
        Ok(())
    }

    /// `ψ_x = r_x + i p_x`.
    pub fn wave_function(&self) -> Vec<C64> {
        self.r
            .iter()
            .zip(&self.p)
            .map(|(&r, &p)| C64::new(r, p))
            .collect()
    }

    /// `ψ̂(k) = r̂(k) + i p̂(k)`.
    pub fn wave_function_hat(&self) -> Vec<C64> {
        let (rh, ph) = self.dft();
        rh.iter().zip(&ph).map(|(r, p)| r + C64::i() * p).collect()
    }
}

/// Recovers `(r̂(k), p̂(k))` from `ψ̂` via `r̂ = (ψ̂(k) + ψ̂*(-k))/2` and
/// `p̂ = (ψ̂(k) - ψ̂*(-k))/(2i)`.
pub(crate) fn split_wave(psi_hat: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = psi_hat.len();
    (0..n)
        .map(|j| {
            let a = psi_hat[j];
            let b = psi_hat[neg_index(j, n)].conj();
            ((a + b) * 0.5, (a - b) / C64::new(0.0, 2.0))
        })
        .unzip()
}

/// Inverse transform of a Fourier pair; imaginary residues are discarded.
pub fn from_modes(r_hat: &[C64], p_hat: &[C64], t: f64) -> Result<ChainState> {
    if r_hat.len() != p_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: r_hat.len(),
            found: p_hat.len(),
        });
    }
    let d = Dft::new(r_hat.len());
    let r = d.inverse(r_hat).into_iter().map(|c| c.re).collect();
    let p = d.inverse(p_hat).into_iter().map(|c| c.re).collect();
    Ok(ChainState::new(r, p)?.with_time(t))
}
