//! Event kernel in normal-mode coordinates.
//!
//! For `1 ≤ j < n` put `z_j = r̂_j - e^{-iπj/n} p̂_j`. Between flips
//! `z_j(t) = e^{-iω_j t} z_j(0)` with `ω_j = 2n² sin(πj/n)`, while `r̂(0)` is
//! constant and `p̂(0)` only changes at flips. In these variables
//!
//! ```text
//! p_x = n⁻¹ [ p̂(0) - Σ_j Re(q_j(x) z_j) ],   q_j(x) = e^{iπj(2x+1)/n},
//! ```
//!
//! and reversing `p_x` (increment `Δ = -2p_x`) is `z_j ← z_j - Δ q_j(x)*`.
//! Modes `j` and `n-j` share a frequency and are stored side by side as
//! `A_j = z_j`, `B_j = z_{n-j}` for `j < n/2`; the Nyquist mode `j = n/2`
//! is kept apart.
//!
//! Inside [`ModalChain::advance`] the rank-one update of a flip is deferred
//! and folded into the rotation pass of the next event, so each event costs
//! one sweep over the mode arrays.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::state::ChainState;
use crate::error::{invalid, require_positive, Error, Result};
use crate::fourier::Dft;

const LANES: usize = 4;
const DENSE_TABLE_MAX_N: usize = 512;
/// Largest `2n²·dt` for which the phase polynomials are used.
const POLY_MAX_THETA: f64 = 0.25;
/// Below this `2n²·dt` the shorter polynomial pair is accurate to `10⁻²¹`.
const SHORT_POLY_MAX_THETA: f64 = 1.0 / 32.0;

const COS: [f64; 7] = [
    1.0,
    -1.0 / 2.0,
    1.0 / 24.0,
    -1.0 / 720.0,
    1.0 / 40_320.0,
    -1.0 / 3_628_800.0,
    1.0 / 479_001_600.0,
];
const SIN: [f64; 7] = [
    1.0,
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5_040.0,
    1.0 / 362_880.0,
    -1.0 / 39_916_800.0,
    1.0 / 6_227_020_800.0,
];

enum SiteTable {
    /// `q_j(x)` for every site, row-major with padded rows.
    Dense { qr: Vec<f64>, qi: Vec<f64> },
    /// `e^{iπm/n}` for `m < 2n`; rows are gathered on demand.
    Roots { cos: Vec<f64>, sin: Vec<f64> },
}

/// Frequencies and site phases shared by every trajectory of a given size.
pub struct ModalTables {
    n: usize,
    h: usize,
    hp: usize,
    omega: Vec<f64>,
    omega_max: f64,
    nyquist: bool,
    sites: SiteTable,
    wide: bool,
}

impl std::fmt::Debug for ModalTables {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModalTables")
            .field("n", &self.n)
            .field("paired_modes", &self.h)
            .finish()
    }
}

impl ModalTables {
    pub fn new(n: usize) -> Arc<Self> {
        Self::build(n, simd::has_avx2())
    }

    /// Tables that never take the AVX2 path.
    pub fn portable(n: usize) -> Arc<Self> {
        Self::build(n, false)
    }

    fn build(n: usize, wide: bool) -> Arc<Self> {
        assert!(n > 0);
        let h = (n - 1) / 2;
        let hp = h.div_ceil(LANES) * LANES;
        let n2 = (n * n) as f64;
        let mut omega = vec![0.0; hp];
        for (j, w) in omega.iter_mut().enumerate().take(h) {
            *w = 2.0 * n2 * (PI * (j + 1) as f64 / n as f64).sin();
        }
        let angle = |m: usize| PI * (m % (2 * n)) as f64 / n as f64;
        let sites = if n <= DENSE_TABLE_MAX_N {
            let mut qr = vec![0.0; n * hp];
            let mut qi = vec![0.0; n * hp];
            for x in 0..n {
                for j in 1..=h {
                    let (s, c) = angle(j * (2 * x + 1)).sin_cos();
                    qr[x * hp + j - 1] = c;
                    qi[x * hp + j - 1] = s;
                }
            }
            SiteTable::Dense { qr, qi }
        } else {
            let (sin, cos) = (0..2 * n).map(|m| angle(m).sin_cos()).unzip();
            SiteTable::Roots { cos, sin }
        };
        Arc::new(ModalTables {
            n,
            h,
            hp,
            omega,
            omega_max: 2.0 * n2,
            nyquist: n.is_multiple_of(2) && n > 1,
            sites,
            wide,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row `q(x)` as `(re, im)`, gathered into `buf` when not tabulated.
    fn row<'a>(&'a self, x: usize, buf: &'a mut [Vec<f64>; 2]) -> (&'a [f64], &'a [f64]) {
        match &self.sites {
            SiteTable::Dense { qr, qi } => {
                let r = x * self.hp..(x + 1) * self.hp;
                (&qr[r.clone()], &qi[r])
            }
            SiteTable::Roots { cos, sin } => {
                let step = 2 * x + 1;
                let m2 = 2 * self.n;
                let mut m = 0usize;
                let [br, bi] = buf;
                for j in 0..self.h {
                    m += step;
                    if m >= m2 {
                        m %= m2;
                    }
                    br[j] = cos[m];
                    bi[j] = sin[m];
                }
                (&buf[0], &buf[1])
            }
        }
    }

    fn nyquist_sign(x: usize) -> f64 {
        if x.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone)]
struct Pairs {
    ar: Vec<f64>,
    ai: Vec<f64>,
    br: Vec<f64>,
    bi: Vec<f64>,
}

#[derive(Clone)]
struct Scratch {
    cph: Vec<f64>,
    sph: Vec<f64>,
    row: [Vec<f64>; 2],
    prev: [Vec<f64>; 2],
}

/// One trajectory in normal-mode coordinates.
#[derive(Clone)]
pub struct ModalChain {
    tables: Arc<ModalTables>,
    z: Pairs,
    scratch: Scratch,
    nyq: C64,
    r0: f64,
    p0: f64,
    t: f64,
    events: u64,
}

impl std::fmt::Debug for ModalChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModalChain")
            .field("n", &self.tables.n)
            .field("t", &self.t)
            .field("events", &self.events)
            .finish()
    }
}

#[inline]
fn phi_conj(j: usize, n: usize) -> C64 {
    C64::from_polar(1.0, PI * j as f64 / n as f64)
}

impl ModalChain {
    pub fn from_state(state: &ChainState, tables: Arc<ModalTables>) -> Result<Self> {
        let n = tables.n;
        if state.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: state.n(),
            });
        }
        let (rh, ph) = state.dft();
        let zf = |j: usize| rh[j] - phi_conj(j, n).conj() * ph[j];
        let hp = tables.hp;
        let zero = || vec![0.0; hp];
        let mut z = Pairs {
            ar: zero(),
            ai: zero(),
            br: zero(),
            bi: zero(),
        };
        for j in 1..=tables.h {
            let a = zf(j);
            let b = zf(n - j);
            z.ar[j - 1] = a.re;
            z.ai[j - 1] = a.im;
            z.br[j - 1] = b.re;
            z.bi[j - 1] = b.im;
        }
        let nyq = if tables.nyquist {
            zf(n / 2)
        } else {
            C64::new(0.0, 0.0)
        };
        Ok(ModalChain {
            z,
            scratch: Scratch {
                cph: zero(),
                sph: zero(),
                row: [zero(), zero()],
                prev: [zero(), zero()],
            },
            nyq,
            r0: rh[0].re,
            p0: ph[0].re,
            t: state.t(),
            events: 0,
            tables,
        })
    }

    pub fn n(&self) -> usize {
        self.tables.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    fn zmode(&self, j: usize) -> C64 {
        let n = self.tables.n;
        let h = self.tables.h;
        if j == 0 {
            C64::new(0.0, 0.0)
        } else if j <= h {
            C64::new(self.z.ar[j - 1], self.z.ai[j - 1])
        } else if 2 * j == n {
            self.nyq
        } else {
            let m = n - j;
            C64::new(self.z.br[m - 1], self.z.bi[m - 1])
        }
    }

    /// Fourier pair `(r̂, p̂)` of the current configuration.
    pub fn modes(&self) -> (Vec<C64>, Vec<C64>) {
        let n = self.tables.n;
        let mut rh = vec![C64::new(0.0, 0.0); n];
        let mut ph = vec![C64::new(0.0, 0.0); n];
        rh[0] = C64::new(self.r0, 0.0);
        ph[0] = C64::new(self.p0, 0.0);
        for j in 1..n {
            let a = self.zmode(j);
            let b = self.zmode(n - j).conj();
            rh[j] = (a + b) * 0.5;
            ph[j] = -phi_conj(j, n) * (a - b) * 0.5;
        }
        (rh, ph)
    }

    /// `ψ̂(k) = r̂(k) + i p̂(k)`.
    pub fn wave_hat(&self) -> Vec<C64> {
        let (rh, ph) = self.modes();
        rh.iter().zip(&ph).map(|(r, p)| r + C64::i() * p).collect()
    }

    pub fn to_state(&self) -> ChainState {
        let (rh, ph) = self.modes();
        let d = Dft::new(self.tables.n);
        let r = d.inverse(&rh).into_iter().map(|c| c.re).collect();
        let p = d.inverse(&ph).into_iter().map(|c| c.re).collect();
        ChainState::new(r, p)
            .expect("nonempty chain")
            .with_time(self.t)
    }

    /// `H_n` from mode amplitudes.
    pub fn energy(&self) -> f64 {
        let mut s = self.r0 * self.r0 + self.p0 * self.p0 + self.nyq.norm_sqr();
        for j in 0..self.tables.h {
            s += self.z.ar[j] * self.z.ar[j]
                + self.z.ai[j] * self.z.ai[j]
                + self.z.br[j] * self.z.br[j]
                + self.z.bi[j] * self.z.bi[j];
        }
        s / (2.0 * self.tables.n as f64)
    }

    pub fn total_elongation(&self) -> f64 {
        self.r0
    }

    fn nyquist_phase(&self, dt: f64) -> C64 {
        let (s, c) = (self.tables.omega_max * dt).sin_cos();
        C64::new(c, -s)
    }

    /// Harmonic evolution over `dt` with no flip.
    pub fn rotate(&mut self, dt: f64) {
        if dt == 0.0 {
            return;
        }
        let t = &*self.tables;
        let sc = &mut self.scratch;
        for ((c, s), &w) in sc.cph.iter_mut().zip(sc.sph.iter_mut()).zip(&t.omega) {
            let (ss, cc) = (w * dt).sin_cos();
            *c = cc;
            *s = ss;
        }
        let zero = &sc.row[0];
        let z = &mut self.z;
        rotate_accumulate(t.wide, &sc.cph, &sc.sph, zero, zero, &mut z.ar, &mut z.ai, &mut z.br, &mut z.bi);
        if t.nyquist {
            self.nyq *= self.nyquist_phase(dt);
        }
        self.t += dt;
    }

    /// Current momentum at site `x`.
    pub fn momentum_at(&mut self, x: usize) -> f64 {
        let t = &*self.tables;
        let (qr, qi) = t.row(x, &mut self.scratch.row);
        let m = t.hp;
        let z = &self.z;
        let mut acc = [0.0f64; LANES];
        for j in 0..m {
            acc[j % LANES] += qr[j] * (z.ar[j] - z.br[j]) - qi[j] * (z.ai[j] + z.bi[j]);
        }
        let sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        self.momentum_from_sum(x, sum)
    }

    #[inline]
    fn momentum_from_sum(&self, x: usize, sum: f64) -> f64 {
        let mut p = self.p0 - sum;
        if self.tables.nyquist {
            p += ModalTables::nyquist_sign(x) * self.nyq.im;
        }
        p / self.tables.n as f64
    }

    /// Applies the momentum increment `d` at site `x` to the scalar modes.
    #[inline]
    fn kick_scalars(&mut self, x: usize, d: f64) {
        if self.tables.nyquist {
            self.nyq.im += ModalTables::nyquist_sign(x) * d;
        }
        self.p0 += d;
    }

    /// Reverses `p_x` at the current time.
    pub fn flip(&mut self, x: usize) -> Result<()> {
        let n = self.tables.n;
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        let d = -2.0 * self.momentum_at(x);
        let t = &*self.tables;
        let (qr, qi) = t.row(x, &mut self.scratch.row);
        let z = &mut self.z;
        kick(t.wide, d, qr, qi, &mut z.ar, &mut z.ai, &mut z.br, &mut z.bi);
        self.kick_scalars(x, d);
        self.events += 1;
        Ok(())
    }

    /// Runs the flip dynamics up to `t_end`; returns the number of flips.
    pub fn advance<R: Rng + ?Sized>(&mut self, t_end: f64, gamma: f64, rng: &mut R) -> Result<u64> {
        require_positive("gamma", gamma)?;
        if !(t_end >= self.t) {
            return Err(invalid(
                "t_end",
                format!("{t_end} precedes current time {}", self.t),
            ));
        }
        let n = self.tables.n;
        let rate = gamma * (n as f64).powi(3);
        let clock = Exp::new(rate).map_err(|e| invalid("gamma", e.to_string()))?;
        let start = self.events;
        let tables = Arc::clone(&self.tables);
        let t = &*tables;
        let sc = &mut self.scratch;
        // Deferred rank-one update: increment `kd` at the site whose row sits
        // in `sc.prev` (or in the dense table at `kx`).
        let mut kd = 0.0f64;
        let mut kx = 0usize;
        loop {
            let gap: f64 = clock.sample(rng);
            if self.t + gap >= t_end {
                let rest = t_end - self.t;
                let (qr, qi) = prev_row(t, kx, &sc.prev);
                let z = &mut self.z;
                kick(t.wide, kd, qr, qi, &mut z.ar, &mut z.ai, &mut z.br, &mut z.bi);
                self.rotate(rest);
                self.t = t_end;
                break;
            }
            let x = rng.random_range(0..n);
            let theta = t.omega_max * gap;
            let (qr, qi) = t.row(x, &mut sc.row);
            let (kr, ki) = prev_row(t, kx, &sc.prev);
            let z = &mut self.z;
            let sum = if theta <= SHORT_POLY_MAX_THETA {
                fused::<5>(t.wide, &t.omega, gap, kd, kr, ki, qr, qi, z)
            } else if theta <= POLY_MAX_THETA {
                fused::<7>(t.wide, &t.omega, gap, kd, kr, ki, qr, qi, z)
            } else {
                kick(t.wide, kd, kr, ki, &mut z.ar, &mut z.ai, &mut z.br, &mut z.bi);
                for ((c, s), &w) in sc.cph.iter_mut().zip(sc.sph.iter_mut()).zip(&t.omega) {
                    let (ss, cc) = (w * gap).sin_cos();
                    *c = cc;
                    *s = ss;
                }
                rotate_accumulate(t.wide, &sc.cph, &sc.sph, qr, qi, &mut z.ar, &mut z.ai, &mut z.br, &mut z.bi)
            };
            if matches!(t.sites, SiteTable::Roots { .. }) {
                std::mem::swap(&mut sc.row, &mut sc.prev);
            }
            if t.nyquist {
                let (c, s) = if theta <= POLY_MAX_THETA {
                    poly_cos_sin(theta)
                } else {
                    let (s, c) = theta.sin_cos();
                    (c, s)
                };
                self.nyq *= C64::new(c, -s);
            }
            self.t += gap;
            let mut p = self.p0 - sum;
            if t.nyquist {
                p += ModalTables::nyquist_sign(x) * self.nyq.im;
            }
            let d = -2.0 * p / n as f64;
            if t.nyquist {
                self.nyq.im += ModalTables::nyquist_sign(x) * d;
            }
            self.p0 += d;
            self.events += 1;
            kd = d;
            kx = x;
        }
        Ok(self.events - start)
    }
}

#[inline(always)]
fn poly_cos_sin(th: f64) -> (f64, f64) {
    let x2 = th * th;
    let mut c = COS[6];
    let mut s = SIN[6];
    for k in (0..6).rev() {
        c = c * x2 + COS[k];
        s = s * x2 + SIN[k];
    }
    (c, s * th)
}

#[inline(always)]
fn prev_row<'a>(t: &'a ModalTables, x: usize, buf: &'a [Vec<f64>; 2]) -> (&'a [f64], &'a [f64]) {
    match &t.sites {
        SiteTable::Dense { qr, qi } => {
            let r = x * t.hp..(x + 1) * t.hp;
            (&qr[r.clone()], &qi[r])
        }
        SiteTable::Roots { .. } => (&buf[0], &buf[1]),
    }
}

/// Applies the pending kick `d·(k_r, k_i)`, multiplies every pair by
/// `e^{-iω_j dt}` (Taylor polynomials with `K` terms) and returns
/// `Σ_j Re(q_j A_j + q_{n-j} B_j)` for the row `(q_r, q_i)`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn fused_body<const K: usize>(
    omega: &[f64],
    dt: f64,
    d: f64,
    kr: &[f64],
    ki: &[f64],
    qr: &[f64],
    qi: &[f64],
    ar: &mut [f64],
    ai: &mut [f64],
    br: &mut [f64],
    bi: &mut [f64],
) -> f64 {
    let m = ar.len();
    let (omega, kr, ki, qr, qi) = (&omega[..m], &kr[..m], &ki[..m], &qr[..m], &qi[..m]);
    let (ai, br, bi) = (&mut ai[..m], &mut br[..m], &mut bi[..m]);
    let mut acc = [0.0f64; LANES];
    for j in 0..m {
        let th = omega[j] * dt;
        let x2 = th * th;
        let mut c = COS[K - 1];
        let mut s = SIN[K - 1];
        for k in (0..K - 1).rev() {
            c = c * x2 + COS[k];
            s = s * x2 + SIN[k];
        }
        let s = s * th;
        let dr = d * kr[j];
        let di = d * ki[j];
        let xr = ar[j] - dr;
        let xi = ai[j] + di;
        let yr = br[j] + dr;
        let yi = bi[j] + di;
        let nar = xr * c + xi * s;
        let nai = xi * c - xr * s;
        let nbr = yr * c + yi * s;
        let nbi = yi * c - yr * s;
        ar[j] = nar;
        ai[j] = nai;
        br[j] = nbr;
        bi[j] = nbi;
        acc[j % LANES] += qr[j] * (nar - nbr) - qi[j] * (nai + nbi);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Multiplies every pair by `c_j - i s_j` and returns the row sum as above.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn rotate_accumulate_body(
    c: &[f64],
    s: &[f64],
    qr: &[f64],
    qi: &[f64],
    ar: &mut [f64],
    ai: &mut [f64],
    br: &mut [f64],
    bi: &mut [f64],
) -> f64 {
    let m = ar.len();
    let (c, s, qr, qi) = (&c[..m], &s[..m], &qr[..m], &qi[..m]);
    let (ai, br, bi) = (&mut ai[..m], &mut br[..m], &mut bi[..m]);
    let mut acc = [0.0f64; LANES];
    for j in 0..m {
        let (xr, xi, yr, yi) = (ar[j], ai[j], br[j], bi[j]);
        let nar = xr * c[j] + xi * s[j];
        let nai = xi * c[j] - xr * s[j];
        let nbr = yr * c[j] + yi * s[j];
        let nbi = yi * c[j] - yr * s[j];
        ar[j] = nar;
        ai[j] = nai;
        br[j] = nbr;
        bi[j] = nbi;
        acc[j % LANES] += qr[j] * (nar - nbr) - qi[j] * (nai + nbi);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Rank-one update of all pairs for a momentum increment `d` at one site.
#[inline(always)]
fn kick_body(d: f64, qr: &[f64], qi: &[f64], ar: &mut [f64], ai: &mut [f64], br: &mut [f64], bi: &mut [f64]) {
    let m = ar.len();
    let (qr, qi) = (&qr[..m], &qi[..m]);
    let (ai, br, bi) = (&mut ai[..m], &mut br[..m], &mut bi[..m]);
    for j in 0..m {
        let dr = d * qr[j];
        let di = d * qi[j];
        ar[j] -= dr;
        ai[j] += di;
        br[j] += dr;
        bi[j] += di;
    }
}

/// AVX2 versions of the hot loops. Each performs the same operations in
/// the same order as its portable counterpart, so both paths agree bit for
/// bit.
mod simd {
    #[cfg(target_arch = "x86_64")]
    use std::arch::x86_64::*;

    use super::{COS, LANES, SIN};

    pub(super) fn has_avx2() -> bool {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            false
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[inline(always)]
    unsafe fn hsum(v: __m256d) -> f64 {
        let mut l = [0.0f64; 4];
        _mm256_storeu_pd(l.as_mut_ptr(), v);
        (l[0] + l[1]) + (l[2] + l[3])
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub(super) unsafe fn fused<const K: usize>(
        omega: &[f64],
        dt: f64,
        d: f64,
        kr: &[f64],
        ki: &[f64],
        qr: &[f64],
        qi: &[f64],
        ar: &mut [f64],
        ai: &mut [f64],
        br: &mut [f64],
        bi: &mut [f64],
    ) -> f64 {
        let m = ar.len();
        assert!(m.is_multiple_of(LANES));
        assert!(omega.len() >= m && kr.len() >= m && ki.len() >= m && qr.len() >= m && qi.len() >= m);
        assert!(ai.len() >= m && br.len() >= m && bi.len() >= m);
        let vdt = _mm256_set1_pd(dt);
        let vd = _mm256_set1_pd(d);
        let mut acc = _mm256_setzero_pd();
        let mut j = 0;
        while j < m {
            let th = _mm256_mul_pd(_mm256_loadu_pd(omega.as_ptr().add(j)), vdt);
            let x2 = _mm256_mul_pd(th, th);
            let mut c = _mm256_set1_pd(COS[K - 1]);
            let mut s = _mm256_set1_pd(SIN[K - 1]);
            for k in (0..K - 1).rev() {
                c = _mm256_fmadd_pd(c, x2, _mm256_set1_pd(COS[k]));
                s = _mm256_fmadd_pd(s, x2, _mm256_set1_pd(SIN[k]));
            }
            let s = _mm256_mul_pd(s, th);
            let kr_ = _mm256_loadu_pd(kr.as_ptr().add(j));
            let ki_ = _mm256_loadu_pd(ki.as_ptr().add(j));
            let xr = _mm256_fnmadd_pd(vd, kr_, _mm256_loadu_pd(ar.as_ptr().add(j)));
            let xi = _mm256_fmadd_pd(vd, ki_, _mm256_loadu_pd(ai.as_ptr().add(j)));
            let yr = _mm256_fmadd_pd(vd, kr_, _mm256_loadu_pd(br.as_ptr().add(j)));
            let yi = _mm256_fmadd_pd(vd, ki_, _mm256_loadu_pd(bi.as_ptr().add(j)));
            let nar = _mm256_fmadd_pd(xr, c, _mm256_mul_pd(xi, s));
            let nai = _mm256_fmsub_pd(xi, c, _mm256_mul_pd(xr, s));
            let nbr = _mm256_fmadd_pd(yr, c, _mm256_mul_pd(yi, s));
            let nbi = _mm256_fmsub_pd(yi, c, _mm256_mul_pd(yr, s));
            _mm256_storeu_pd(ar.as_mut_ptr().add(j), nar);
            _mm256_storeu_pd(ai.as_mut_ptr().add(j), nai);
            _mm256_storeu_pd(br.as_mut_ptr().add(j), nbr);
            _mm256_storeu_pd(bi.as_mut_ptr().add(j), nbi);
            let vqr = _mm256_loadu_pd(qr.as_ptr().add(j));
            let vqi = _mm256_loadu_pd(qi.as_ptr().add(j));
            acc = _mm256_fmadd_pd(vqr, _mm256_sub_pd(nar, nbr), acc);
            acc = _mm256_fnmadd_pd(vqi, _mm256_add_pd(nai, nbi), acc);
            j += LANES;
        }
        hsum(acc)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    #[allow(clippy::too_many_arguments)]
    pub(super) unsafe fn rotate_accumulate(
        c: &[f64],
        s: &[f64],
        qr: &[f64],
        qi: &[f64],
        ar: &mut [f64],
        ai: &mut [f64],
        br: &mut [f64],
        bi: &mut [f64],
    ) -> f64 {
        let m = ar.len();
        assert!(m.is_multiple_of(LANES));
        assert!(c.len() >= m && s.len() >= m && qr.len() >= m && qi.len() >= m);
        assert!(ai.len() >= m && br.len() >= m && bi.len() >= m);
        let mut acc = _mm256_setzero_pd();
        let mut j = 0;
        while j < m {
            let vc = _mm256_loadu_pd(c.as_ptr().add(j));
            let vs = _mm256_loadu_pd(s.as_ptr().add(j));
            let xr = _mm256_loadu_pd(ar.as_ptr().add(j));
            let xi = _mm256_loadu_pd(ai.as_ptr().add(j));
            let yr = _mm256_loadu_pd(br.as_ptr().add(j));
            let yi = _mm256_loadu_pd(bi.as_ptr().add(j));
            let nar = _mm256_add_pd(_mm256_mul_pd(xr, vc), _mm256_mul_pd(xi, vs));
            let nai = _mm256_sub_pd(_mm256_mul_pd(xi, vc), _mm256_mul_pd(xr, vs));
            let nbr = _mm256_add_pd(_mm256_mul_pd(yr, vc), _mm256_mul_pd(yi, vs));
            let nbi = _mm256_sub_pd(_mm256_mul_pd(yi, vc), _mm256_mul_pd(yr, vs));
            _mm256_storeu_pd(ar.as_mut_ptr().add(j), nar);
            _mm256_storeu_pd(ai.as_mut_ptr().add(j), nai);
            _mm256_storeu_pd(br.as_mut_ptr().add(j), nbr);
            _mm256_storeu_pd(bi.as_mut_ptr().add(j), nbi);
            let vqr = _mm256_loadu_pd(qr.as_ptr().add(j));
            let vqi = _mm256_loadu_pd(qi.as_ptr().add(j));
            let term = _mm256_sub_pd(
                _mm256_mul_pd(vqr, _mm256_sub_pd(nar, nbr)),
                _mm256_mul_pd(vqi, _mm256_add_pd(nai, nbi)),
            );
            acc = _mm256_add_pd(acc, term);
            j += LANES;
        }
        hsum(acc)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn kick(
        d: f64,
        qr: &[f64],
        qi: &[f64],
        ar: &mut [f64],
        ai: &mut [f64],
        br: &mut [f64],
        bi: &mut [f64],
    ) {
        let m = ar.len();
        assert!(m.is_multiple_of(LANES));
        assert!(qr.len() >= m && qi.len() >= m && ai.len() >= m && br.len() >= m && bi.len() >= m);
        let vd = _mm256_set1_pd(d);
        let mut j = 0;
        while j < m {
            let dr = _mm256_mul_pd(vd, _mm256_loadu_pd(qr.as_ptr().add(j)));
            let di = _mm256_mul_pd(vd, _mm256_loadu_pd(qi.as_ptr().add(j)));
            let pa = ar.as_mut_ptr().add(j);
            let pb = ai.as_mut_ptr().add(j);
            let pc = br.as_mut_ptr().add(j);
            let pd = bi.as_mut_ptr().add(j);
            _mm256_storeu_pd(pa, _mm256_sub_pd(_mm256_loadu_pd(pa), dr));
            _mm256_storeu_pd(pb, _mm256_add_pd(_mm256_loadu_pd(pb), di));
            _mm256_storeu_pd(pc, _mm256_add_pd(_mm256_loadu_pd(pc), dr));
            _mm256_storeu_pd(pd, _mm256_add_pd(_mm256_loadu_pd(pd), di));
            j += LANES;
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn fused<const K: usize>(
    wide: bool,
    omega: &[f64],
    dt: f64,
    d: f64,
    kr: &[f64],
    ki: &[f64],
    qr: &[f64],
    qi: &[f64],
    z: &mut Pairs,
) -> f64 {
    let (ar, ai, br, bi) = (&mut z.ar[..], &mut z.ai[..], &mut z.br[..], &mut z.bi[..]);
    #[cfg(target_arch = "x86_64")]
    if wide {
        // SAFETY: `wide` is set only when AVX2 was detected at runtime.
        return unsafe { simd::fused::<K>(omega, dt, d, kr, ki, qr, qi, ar, ai, br, bi) };
    }
    let _ = wide;
    fused_body::<K>(omega, dt, d, kr, ki, qr, qi, ar, ai, br, bi)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rotate_accumulate(
    wide: bool,
    c: &[f64],
    s: &[f64],
    qr: &[f64],
    qi: &[f64],
    ar: &mut [f64],
    ai: &mut [f64],
    br: &mut [f64],
    bi: &mut [f64],
) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if wide {
        // SAFETY: as in `fused`.
        return unsafe { simd::rotate_accumulate(c, s, qr, qi, ar, ai, br, bi) };
    }
    let _ = wide;
    rotate_accumulate_body(c, s, qr, qi, ar, ai, br, bi)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn kick(wide: bool, d: f64, qr: &[f64], qi: &[f64], ar: &mut [f64], ai: &mut [f64], br: &mut [f64], bi: &mut [f64]) {
    if d == 0.0 {
        return;
    }
    #[cfg(target_arch = "x86_64")]
    if wide {
        // SAFETY: as in `fused`.
        return unsafe { simd::kick(d, qr, qi, ar, ai, br, bi) };
    }
    let _ = wide;
    kick_body(d, qr, qi, ar, ai, br, bi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp};

    fn random_state(n: usize, seed: u64) -> ChainState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let r = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ChainState::new(r, p).unwrap()
    }

    #[test]
    fn polynomial_phase_is_accurate() {
        for i in 0..=100 {
            let th = POLY_MAX_THETA * i as f64 / 100.0;
            let (c, s) = poly_cos_sin(th);
            assert!((c - th.cos()).abs() < 2e-16);
            assert!((s - th.sin()).abs() < 2e-16);
        }
        let short = |th: f64| {
            let x2 = th * th;
            let (mut c, mut s) = (COS[4], SIN[4]);
            for k in (0..4).rev() {
                c = c * x2 + COS[k];
                s = s * x2 + SIN[k];
            }
            (c, s * th)
        };
        for i in 0..=100 {
            let th = SHORT_POLY_MAX_THETA * i as f64 / 100.0;
            let (c, s) = short(th);
            assert!((c - th.cos()).abs() < 2e-16);
            assert!((s - th.sin()).abs() < 2e-16);
        }
    }

    #[test]
    fn roundtrip_and_momentum() {
        for n in [1usize, 2, 3, 4, 7, 10, 16] {
            let s = random_state(n, n as u64);
            let m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
            let back = m.to_state();
            for x in 0..n {
                assert!((back.r()[x] - s.r()[x]).abs() < 1e-13, "n={n}");
                assert!((back.p()[x] - s.p()[x]).abs() < 1e-13, "n={n}");
            }
            let mut m = m;
            for x in 0..n {
                assert!((m.momentum_at(x) - s.p()[x]).abs() < 1e-13);
            }
            assert!((m.energy() - s.total_energy()).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_matches_state_evolution() {
        for n in [2usize, 5, 8, 13] {
            let s = random_state(n, 10 + n as u64);
            let mut m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
            for dt in [1e-5, 3e-3, 0.7] {
                m.rotate(dt);
            }
            let want = s.evolve_deterministic(1e-5 + 3e-3 + 0.7).unwrap();
            let got = m.to_state();
            for x in 0..n {
                assert!((got.r()[x] - want.r()[x]).abs() < 1e-12);
                assert!((got.p()[x] - want.p()[x]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flip_matches_state_flip() {
        for n in [1usize, 2, 6, 9] {
            let s = random_state(n, 20 + n as u64);
            let mut m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
            let mut want = s.clone();
            for x in [0, n / 2, n - 1] {
                m.flip(x).unwrap();
                want.flip_in_place(x).unwrap();
            }
            let got = m.to_state();
            for x in 0..n {
                assert!((got.r()[x] - want.r()[x]).abs() < 1e-13);
                assert!((got.p()[x] - want.p()[x]).abs() < 1e-13);
            }
        }
    }

    /// Replays the event loop with the same random draws on `ChainState`.
    fn reference_run(s: &ChainState, t_end: f64, gamma: f64, seed: u64) -> ChainState {
        let n = s.n();
        let mut rng = crate::rng::stream(seed, 0);
        let clock = Exp::new(gamma * (n as f64).powi(3)).unwrap();
        let mut cur = s.clone();
        loop {
            let gap: f64 = clock.sample(&mut rng);
            if cur.t() + gap >= t_end {
                let rest = t_end - cur.t();
                return cur.evolve_deterministic(rest).unwrap();
            }
            let x = rng.random_range(0..n);
            cur = cur.evolve_deterministic(gap).unwrap();
            cur.flip_in_place(x).unwrap();
        }
    }

    #[test]
    fn advance_matches_reference_replay() {
        for (n, t_end) in [(1usize, 0.5), (2, 0.2), (5, 0.01), (8, 0.01), (13, 2e-3)] {
            let s = random_state(n, 50 + n as u64);
            let want = reference_run(&s, t_end, 1.3, 9);
            for tables in [ModalTables::new(n), ModalTables::portable(n)] {
                let mut m = ModalChain::from_state(&s, tables).unwrap();
                m.advance(t_end, 1.3, &mut crate::rng::stream(9, 0)).unwrap();
                let got = m.to_state();
                for x in 0..n {
                    assert!((got.r()[x] - want.r()[x]).abs() < 1e-10, "n={n}");
                    assert!((got.p()[x] - want.p()[x]).abs() < 1e-10, "n={n}");
                }
            }
        }
    }

    #[test]
    fn advance_in_pieces_keeps_state() {
        let n = 16;
        let s = random_state(n, 61);
        let mut m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
        let mut rng = crate::rng::stream(3, 1);
        let h0 = m.energy();
        for k in 1..=10 {
            m.advance(0.002 * k as f64, 1.0, &mut rng).unwrap();
            assert_eq!(m.t(), 0.002 * k as f64);
            assert!((m.energy() - h0).abs() < 1e-12 * h0);
            assert!((m.total_elongation() - s.total_elongation()).abs() < 1e-12);
        }
        assert!(m.advance(0.001, 1.0, &mut rng).is_err());
    }

    #[test]
    fn vector_and_portable_paths_agree() {
        let n = 40;
        let s = random_state(n, 71);
        let mut a = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
        let mut b = ModalChain::from_state(&s, ModalTables::portable(n)).unwrap();
        a.advance(0.01, 1.0, &mut crate::rng::stream(4, 0)).unwrap();
        b.advance(0.01, 1.0, &mut crate::rng::stream(4, 0)).unwrap();
        assert_eq!(a.events(), b.events());
        let (sa, sb) = (a.to_state(), b.to_state());
        for x in 0..n {
            assert!((sa.p()[x] - sb.p()[x]).abs() < 1e-11);
        }
    }

    #[test]
    fn root_table_path_matches_dense() {
        let n = DENSE_TABLE_MAX_N + 2;
        let s = random_state(n, 44);
        let mut m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
        assert!(matches!(m.tables.sites, SiteTable::Roots { .. }));
        for x in [0, 1, n / 3, n - 1] {
            assert!((m.momentum_at(x) - s.p()[x]).abs() < 1e-12);
        }
        m.rotate(1e-8);
        m.flip(7).unwrap();
        let mut want = s.evolve_deterministic(1e-8).unwrap();
        want.flip_in_place(7).unwrap();
        let got = m.to_state();
        for x in 0..n {
            assert!((got.p()[x] - want.p()[x]).abs() < 1e-11);
        }
        let t_end = 2e-8;
        let want = reference_run(&s, t_end, 1.0, 12);
        let mut m = ModalChain::from_state(&s, ModalTables::new(n)).unwrap();
        m.advance(t_end, 1.0, &mut crate::rng::stream(12, 0)).unwrap();
        assert!(m.events() > 2);
        let got = m.to_state();
        for x in 0..n {
            assert!((got.p()[x] - want.p()[x]).abs() < 1e-10);
        }
    }
}
