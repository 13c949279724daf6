//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use num_complex::Complex64 as C64;

pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-12,
            abs: 1e-300,
            max_intervals: 2000,
        }
    }
}

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// `∫_a^b f` for complex-valued `f`.
pub fn integrate_complex<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Quad<C64> {
    let mut parts = vec![(a, b, gk15(&mut f, a, b))];
    loop {
        let total: C64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        let target = tol.abs.max(tol.rel * total.norm());
        if err <= target || parts.len() >= tol.max_intervals {
            return Quad {
                value: total,
                error: err,
                intervals: parts.len(),
            };
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Quad {
                value: total,
                error: err,
                intervals: parts.len() + 1,
            };
        }
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        parts.push((lo, mid, left));
        parts.push((mid, hi, right));
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Quad<f64> {
    let q = integrate_complex(|x| C64::new(f(x), 0.0), a, b, tol);
    Quad {
        value: q.value.re,
        error: q.error,
        intervals: q.intervals,
    }
}
