use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// Closed-form flow of one Fourier pair `(r̂(k), p̂(k))` under
/// `r̂' = c p̂`, `p̂' = -c* r̂` with `c = n²(1 - e^{-2πik})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRotation {
    pub k: f64,
    pub omega: f64,
    pub coupling: C64,
    /// `c/ω = i e^{-iπk}`; unused at `k = 0`.
    ratio: C64,
}

impl ModeRotation {
    /// Mode `k = j/n` of a chain with `n` sites.
    pub fn new(j: usize, n: usize) -> Self {
        let k = (j % n) as f64 / n as f64;
        let n2 = (n * n) as f64;
        let omega = 2.0 * n2 * (PI * k).sin();
        let coupling = n2 * (C64::new(1.0, 0.0) - C64::from_polar(1.0, -2.0 * PI * k));
        let ratio = C64::i() * C64::from_polar(1.0, -PI * k);
        ModeRotation {
            k,
            omega,
            coupling,
            ratio,
        }
    }

    pub fn apply(&self, r: C64, p: C64, dt: f64) -> (C64, C64) {
        if self.k == 0.0 {
            return (r, p);
        }
        let (s, c) = (self.omega * dt).sin_cos();
        (
            c * r + self.ratio * s * p,
            c * p - self.ratio.conj() * s * r,
        )
    }

    /// Generator applied to `(r̂, p̂)`.
    pub fn generator(&self, r: C64, p: C64) -> (C64, C64) {
        (self.coupling * p, -self.coupling.conj() * r)
    }
}
