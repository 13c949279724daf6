use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Real profile on the torus given by a finite Fourier series
/// `f(u) = Σ_{|η|≤M} c_η e^{2πiηu}` with `c_{-η} = c_η*`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroProfile {
    m: usize,
    c: Vec<C64>,
}

/// Declarative profile description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    /// Indicator of `[start, end)` between `low` and `high`, Fejér-smoothed
    /// with `modes` harmonics.
    SmoothedStep {
        low: f64,
        high: f64,
        #[serde(default = "quarter")]
        start: f64,
        #[serde(default = "three_quarters")]
        end: f64,
        #[serde(default = "eight")]
        modes: u32,
    },
    /// Coefficients as `[η, re, im]`; missing partners `-η` are filled in.
    Fourier { coeffs: Vec<[f64; 3]> },
}

fn one() -> u32 {
    1
}
fn quarter() -> f64 {
    0.25
}
fn three_quarters() -> f64 {
    0.75
}
fn eight() -> u32 {
    8
}

impl MacroProfile {
    pub fn constant(v: f64) -> Self {
        MacroProfile {
            m: 0,
            c: vec![C64::new(v, 0.0)],
        }
    }

    /// `mean + amplitude·cos(2π·mode·u)`.
    pub fn cosine(mean: f64, amplitude: f64, mode: u32) -> Self {
        if mode == 0 {
            return Self::constant(mean + amplitude);
        }
        let m = mode as i64;
        Self::from_coefficients([(0, C64::new(mean, 0.0)), (m, C64::new(0.5 * amplitude, 0.0))])
            .expect("consistent coefficients")
    }

    /// Fejér mean of order `modes` of the step that equals `high` on
    /// `[start, end)` and `low` elsewhere; stays within `[low, high]`.
    pub fn smoothed_step(low: f64, high: f64, start: f64, end: f64, modes: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&start) || !(start..=1.0).contains(&end) {
            return Err(invalid("step", format!("need 0 ≤ start ≤ end ≤ 1, got [{start}, {end})")));
        }
        let jump = high - low;
        let mut pairs = vec![(0i64, C64::new(low + jump * (end - start), 0.0))];
        let mm = modes as f64;
        for eta in 1..=modes as i64 {
            let w = 1.0 - eta as f64 / (mm + 1.0);
            let e = |u: f64| C64::from_polar(1.0, -2.0 * PI * eta as f64 * u);
            let c = jump * (e(start) - e(end)) / C64::new(0.0, 2.0 * PI * eta as f64);
            pairs.push((eta, c * w));
        }
        Self::from_coefficients(pairs)
    }

    /// Builds a real profile; a coefficient and its partner, when both
    /// given, must be conjugate.
    pub fn from_coefficients<I: IntoIterator<Item = (i64, C64)>>(pairs: I) -> Result<Self> {
        let pairs: Vec<(i64, C64)> = pairs.into_iter().collect();
        let m = pairs.iter().map(|p| p.0.unsigned_abs() as usize).max().unwrap_or(0);
        let mut c = vec![C64::new(0.0, 0.0); 2 * m + 1];
        let mut set = vec![false; 2 * m + 1];
        for &(eta, v) in &pairs {
            let i = (eta + m as i64) as usize;
            if set[i] {
                return Err(invalid("coeffs", format!("mode {eta} given twice")));
            }
            set[i] = true;
            c[i] = v;
        }
        for eta in 0..=m as i64 {
            let (ip, im) = ((m as i64 + eta) as usize, (m as i64 - eta) as usize);
            match (set[ip], set[im]) {
                (true, true) => {
                    let scale = 1.0 + c[ip].norm();
                    if (c[ip] - c[im].conj()).norm() > 1e-12 * scale {
                        return Err(invalid("coeffs", format!("modes ±{eta} are not conjugate")));
                    }
                }
                (true, false) => c[im] = c[ip].conj(),
                (false, true) => c[ip] = c[im].conj(),
                (false, false) => {}
            }
        }
        if c[m].im.abs() > 1e-12 * (1.0 + c[m].re.abs()) {
            return Err(invalid("coeffs", "mean coefficient must be real"));
        }
        c[m].im = 0.0;
        Ok(MacroProfile { m, c }.trimmed())
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        match *spec {
            ProfileSpec::Constant { value } => Ok(Self::constant(value)),
            ProfileSpec::Cosine {
                mean,
                amplitude,
                mode,
            } => Ok(Self::cosine(mean, amplitude, mode)),
            ProfileSpec::SmoothedStep {
                low,
                high,
                start,
                end,
                modes,
            } => Self::smoothed_step(low, high, start, end, modes),
            ProfileSpec::Fourier { ref coeffs } => {
                let mut pairs = Vec::with_capacity(coeffs.len());
                for &[eta, re, im] in coeffs {
                    if eta.fract() != 0.0 {
                        return Err(invalid("coeffs", format!("mode index {eta} is not an integer")));
                    }
                    pairs.push((eta as i64, C64::new(re, im)));
                }
                Self::from_coefficients(pairs)
            }
        }
    }

    fn trimmed(mut self) -> Self {
        while self.m > 0 && self.c[0].norm() == 0.0 && self.c[2 * self.m].norm() == 0.0 {
            self.c.remove(0);
            self.c.pop();
            self.m -= 1;
        }
        self
    }

    /// Largest `|η|` with a stored coefficient.
    pub fn max_mode(&self) -> usize {
        self.m
    }

    /// `c_η`, zero outside the support.
    pub fn coeff(&self, eta: i64) -> C64 {
        if eta.unsigned_abs() as usize > self.m {
            C64::new(0.0, 0.0)
        } else {
            self.c[(eta + self.m as i64) as usize]
        }
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let m = self.m as i64;
        self.c.iter().enumerate().map(move |(i, &v)| (i as i64 - m, v))
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut s = self.coeff(0).re;
        for eta in 1..=self.m as i64 {
            let e = C64::from_polar(1.0, 2.0 * PI * eta as f64 * u);
            s += 2.0 * (self.coeff(eta) * e).re;
        }
        s
    }

    /// Values at `x/n`, `x = 0..n`.
    pub fn on_grid(&self, n: usize) -> Vec<f64> {
        (0..n).map(|x| self.eval(x as f64 / n as f64)).collect()
    }

    pub fn min_on_grid(&self, n: usize) -> f64 {
        self.on_grid(n).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Pointwise product, computed exactly on coefficients.
    pub fn product(&self, other: &MacroProfile) -> MacroProfile {
        let m = self.m + other.m;
        let mut c = vec![C64::new(0.0, 0.0); 2 * m + 1];
        for (a, ca) in self.coefficients() {
            for (b, cb) in other.coefficients() {
                c[(a + b + m as i64) as usize] += ca * cb;
            }
        }
        MacroProfile { m, c }.trimmed()
    }

    /// Applies `f(η, c_η)` to every stored coefficient; `f` must preserve
    /// Hermitian symmetry.
    pub fn map_coefficients<F: Fn(i64, C64) -> C64>(&self, f: F) -> MacroProfile {
        let m = self.m as i64;
        MacroProfile {
            m: self.m,
            c: self.c.iter().enumerate().map(|(i, &v)| f(i as i64 - m, v)).collect(),
        }
        .trimmed()
    }

    /// `∂_u f`.
    pub fn derivative(&self) -> MacroProfile {
        self.map_coefficients(|eta, v| v * C64::new(0.0, 2.0 * PI * eta as f64))
    }

    pub fn scaled(&self, s: f64) -> MacroProfile {
        MacroProfile {
            m: self.m,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn plus(&self, other: &MacroProfile) -> MacroProfile {
        let m = self.m.max(other.m);
        let c = (-(m as i64)..=m as i64)
            .map(|eta| self.coeff(eta) + other.coeff(eta))
            .collect();
        MacroProfile { m, c }.trimmed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_values() {
        let p = MacroProfile::cosine(1.0, 0.5, 1);
        assert!((p.eval(0.0) - 1.5).abs() < 1e-15);
        assert!((p.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(p.coeff(1), C64::new(0.25, 0.0));
        assert_eq!(p.coeff(-1), C64::new(0.25, 0.0));
        assert_eq!(p.max_mode(), 1);
    }

    #[test]
    fn hermitian_enforced() {
        let p = MacroProfile::from_coefficients([(2, C64::new(0.1, 0.3))]).unwrap();
        assert_eq!(p.coeff(-2), C64::new(0.1, -0.3));
        assert!(p.eval(0.37).is_finite());
        assert!(MacroProfile::from_coefficients([(1, C64::new(1.0, 0.0)), (-1, C64::new(2.0, 0.0))]).is_err());
        assert!(MacroProfile::from_coefficients([(0, C64::new(1.0, 1.0))]).is_err());
    }

    #[test]
    fn smoothed_step_stays_between_levels() {
        let p = MacroProfile::smoothed_step(1.0, 2.0, 0.25, 0.75, 12).unwrap();
        for v in p.on_grid(997) {
            assert!(v > 1.0 - 1e-12 && v < 2.0 + 1e-12);
        }
        assert!((p.mean() - 1.5).abs() < 1e-14);
        assert!(p.eval(0.5) > p.eval(0.0));
    }

    #[test]
    fn product_matches_pointwise() {
        let a = MacroProfile::cosine(1.0, 0.5, 1);
        let b = MacroProfile::from_coefficients([(0, C64::new(0.3, 0.0)), (2, C64::new(0.1, -0.2))]).unwrap();
        let ab = a.product(&b);
        for i in 0..17 {
            let u = i as f64 / 17.0;
            assert!((ab.eval(u) - a.eval(u) * b.eval(u)).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_parsing() {
        let s: ProfileSpec = serde_json::from_str(r#"{"type":"cosine","mean":1.0,"amplitude":0.5,"mode":1}"#).unwrap();
        assert_eq!(MacroProfile::from_spec(&s).unwrap(), MacroProfile::cosine(1.0, 0.5, 1));
        let s: ProfileSpec = serde_json::from_str(r#"{"type":"fourier","coeffs":[[0,1,0],[1,0.125,0]]}"#).unwrap();
        let p = MacroProfile::from_spec(&s).unwrap();
        assert!((p.eval(0.0) - 1.25).abs() < 1e-15);
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"type":"cosine","mean":1,"amplitude":0,"bogus":2}"#).is_err());
    }
}
