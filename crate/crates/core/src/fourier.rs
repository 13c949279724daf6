//! Discrete Fourier transform on the circle `T_n` with the convention
//! `f̂(k) = Σ_x f_x e^{-2πikx}` for `k ∈ {0, 1/n, …, (n-1)/n}` and inverse
//! `f_x = n⁻¹ Σ_k f̂(k) e^{2πikx}`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse transforms of a fixed length.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
    }

    /// Inverse including the `1/n` factor.
    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n);
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn inverse(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = x.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }
}

/// Index of `-k` in `T̂_n`.
#[inline]
pub fn neg_index(j: usize, n: usize) -> usize {
    if j == 0 {
        0
    } else {
        n - j
    }
}

/// Index of `k + η/n` reduced mod 1.
#[inline]
pub fn shift_index(j: usize, eta: i64, n: usize) -> usize {
    (j as i64 + eta).rem_euclid(n as i64) as usize
}

/// Signed representative `ξ ∈ (-n/2, n/2]` of the index `j`.
#[inline]
pub fn signed_index(j: usize, n: usize) -> i64 {
    if 2 * j > n {
        j as i64 - n as i64
    } else {
        j as i64
    }
}

/// `Σ |f̂(k)|² / n`, which equals `Σ |f_x|²`.
pub fn parseval_norm_sq(fhat: &[C64]) -> f64 {
    fhat.iter().map(|c| c.norm_sqr()).sum::<f64>() / fhat.len() as f64
}
