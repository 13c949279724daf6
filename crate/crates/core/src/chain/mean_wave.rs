use num_complex::Complex64 as C64;

use super::rotation::ModeRotation;
use super::state::split_wave;

/// Advances the mean wave `ψ̄̂` over `dt`.
///
/// With `u = i e^{-iπk} p̂` the averaged dynamics of each pair is the damped
/// oscillator `r̂' = ω u`, `u' = -ω r̂ - 2g u` with `g = γn²`, solved here by
/// its exact propagator.
pub fn evolve_mean_wave(psi_bar_hat: &[C64], dt: f64, gamma: f64) -> Vec<C64> {
    let (mut rh, mut ph) = split_wave(psi_bar_hat);
    mean_wave_modes(&mut rh, &mut ph, dt, gamma);
    rh.iter().zip(&ph).map(|(r, p)| r + C64::i() * p).collect()
}

/// Same flow acting on the pair `(r̂, p̂)` in place.
pub fn mean_wave_modes(r_hat: &mut [C64], p_hat: &mut [C64], dt: f64, gamma: f64) {
    assert!(dt >= 0.0 && gamma >= 0.0, "dt and gamma must be nonnegative");
    let n = r_hat.len();
    let g = gamma * (n * n) as f64;
    for j in 0..n {
        let m = ModeRotation::new(j, n);
        let phase = C64::i() * C64::from_polar(1.0, -std::f64::consts::PI * m.k);
        let [[a, b], [c, d]] = damped_propagator(m.omega, g, dt);
        let r = r_hat[j];
        let u = phase * p_hat[j];
        r_hat[j] = a * r + b * u;
        p_hat[j] = (c * r + d * u) / phase;
    }
}

/// `exp(t [[0, ω], [-ω, -2g]])` without overflow for large `g t`.
pub(crate) fn damped_propagator(omega: f64, g: f64, t: f64) -> [[f64; 2]; 2] {
    let disc = g * g - omega * omega;
    // e^{-gt} cosh(νt) and e^{-gt} sinh(νt)/ν, with ν² = disc.
    let (ch, sh) = if disc > 0.0 {
        let nu = disc.sqrt();
        let x = nu * t;
        if x < 1e-4 {
            let e = (-g * t).exp();
            (e * (1.0 + 0.5 * x * x), e * t * (1.0 + x * x / 6.0))
        } else {
            let slow = -omega * omega / (g + nu);
            let fast = -(g + nu);
            let ef = (fast * t).exp();
            let es = (slow * t).exp();
            let diff = if x < 0.5 {
                ef * (2.0 * x).exp_m1()
            } else {
                es - ef
            };
            (0.5 * (es + ef), 0.5 * diff / nu)
        }
    } else if disc < 0.0 {
        let nu = (-disc).sqrt();
        let e = (-g * t).exp();
        let (s, c) = (nu * t).sin_cos();
        (e * c, e * s / nu)
    } else {
        let e = (-g * t).exp();
        (e, e * t)
    };
    [
        [ch + g * sh, omega * sh],
        [-omega * sh, ch - g * sh],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4(omega: f64, g: f64, t: f64, steps: usize) -> [[f64; 2]; 2] {
        let f = |v: [f64; 2]| [omega * v[1], -omega * v[0] - 2.0 * g * v[1]];
        let h = t / steps as f64;
        let mut cols = [[1.0, 0.0], [0.0, 1.0]];
        for col in cols.iter_mut() {
            let mut v = *col;
            for _ in 0..steps {
                let k1 = f(v);
                let k2 = f([v[0] + 0.5 * h * k1[0], v[1] + 0.5 * h * k1[1]]);
                let k3 = f([v[0] + 0.5 * h * k2[0], v[1] + 0.5 * h * k2[1]]);
                let k4 = f([v[0] + h * k3[0], v[1] + h * k3[1]]);
                for i in 0..2 {
                    v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            *col = v;
        }
        [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
    }

    #[test]
    fn propagator_matches_rk4() {
        for &(w, g, t) in &[
            (3.0, 1.0, 0.7),
            (1.0, 3.0, 0.7),
            (2.0, 2.0, 0.5),
            (2.0, 2.0 + 1e-7, 0.5),
            (0.0, 1.5, 1.0),
            (0.05, 40.0, 0.3),
        ] {
            let a = damped_propagator(w, g, t);
            let b = rk4(w, g, t, 20_000);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-10, "{w} {g} {t}: {a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn no_overflow_for_stiff_damping() {
        let a = damped_propagator(1e-3, 1e8, 10.0);
        assert!(a.iter().flatten().all(|v| v.is_finite()));
        assert!(a[0][0] > 0.0 && a[0][0] <= 1.0);
    }

    #[test]
    fn zero_stays_zero_and_real_dc_is_invariant() {
        let z = vec![C64::new(0.0, 0.0); 6];
        assert!(evolve_mean_wave(&z, 0.3, 1.0).iter().all(|c| c.norm() == 0.0));
        let mut psi = vec![C64::new(0.0, 0.0); 6];
        psi[0] = C64::new(2.5, 0.0);
        let out = evolve_mean_wave(&psi, 0.3, 1.0);
        assert!((out[0] - psi[0]).norm() < 1e-15);
    }

    #[test]
    fn zero_damping_reduces_to_harmonic_flow() {
        let n = 7;
        let psi: Vec<C64> = (0..n)
            .map(|j| C64::new((j as f64).sin(), (2.0 * j as f64).cos()))
            .collect();
        let out = evolve_mean_wave(&psi, 0.01, 0.0);
        let (rh, ph) = split_wave(&psi);
        for j in 0..n {
            let (r, p) = ModeRotation::new(j, n).apply(rh[j], ph[j], 0.01);
            assert!((out[j] - (r + C64::i() * p)).norm() < 1e-12);
        }
    }
}
