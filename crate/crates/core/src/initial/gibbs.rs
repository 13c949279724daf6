use rand::Rng;
use rand_distr::StandardNormal;

use super::MacroProfile;
use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::rng::stream;

fn temperatures(temperature: &MacroProfile, n: usize) -> Result<Vec<f64>> {
    let t = temperature.on_grid(n);
    for (x, &v) in t.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveTemperature {
                u: x as f64 / n as f64,
                value: v,
            });
        }
    }
    Ok(t)
}

/// Draws from the product local Gibbs law with tension `τ₀(x/n)` and
/// temperature `β₀⁻¹(x/n)`: `r_x ~ N(τ₀, β₀⁻¹)`, `p_x ~ N(0, β₀⁻¹)`.
pub fn local_gibbs_sample<R: Rng + ?Sized>(
    tau0: &MacroProfile,
    temperature: &MacroProfile,
    n: usize,
    rng: &mut R,
) -> Result<ChainState> {
    if n == 0 {
        return Err(crate::error::invalid("n", "chain length must be positive"));
    }
    let temp = temperatures(temperature, n)?;
    let tau = tau0.on_grid(n);
    let mut r = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for x in 0..n {
        let s = temp[x].sqrt();
        let gr: f64 = rng.sample(StandardNormal);
        let gp: f64 = rng.sample(StandardNormal);
        r.push(tau[x] + s * gr);
        p.push(s * gp);
    }
    ChainState::new(r, p)
}

/// `size` independent samples, member `i` drawn from stream `(root, i)`.
pub fn local_gibbs_ensemble(
    tau0: &MacroProfile,
    temperature: &MacroProfile,
    n: usize,
    size: usize,
    root: u64,
) -> Result<Vec<ChainState>> {
    (0..size)
        .map(|i| local_gibbs_sample(tau0, temperature, n, &mut stream(root, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;

    #[test]
    fn rejects_nonpositive_temperature() {
        let t = MacroProfile::cosine(0.5, 1.0, 1);
        let err = local_gibbs_sample(&MacroProfile::constant(0.0), &t, 16, &mut stream(1, 0)).unwrap_err();
        assert!(matches!(err, Error::NonPositiveTemperature { .. }));
    }

    #[test]
    fn tiny_variance_tracks_profile() {
        let tau = MacroProfile::cosine(1.0, 0.5, 2);
        let s = local_gibbs_sample(&tau, &MacroProfile::constant(1e-12), 64, &mut stream(3, 0)).unwrap();
        for (x, &r) in s.r().iter().enumerate() {
            assert!((r - tau.eval(x as f64 / 64.0)).abs() < 1e-5);
        }
        assert!(s.p().iter().all(|p| p.abs() < 1e-5));
    }

    #[test]
    fn homogeneous_moments() {
        let n = 10_000;
        let s = local_gibbs_sample(&MacroProfile::constant(1.0), &MacroProfile::constant(0.5), n, &mut stream(7, 0)).unwrap();
        let (mut mr, mut mp, mut me) = (Moments::default(), Moments::default(), Moments::default());
        for x in 0..n {
            mr.push(s.r()[x]);
            mp.push(s.p()[x]);
            me.push(0.5 * (s.r()[x].powi(2) + s.p()[x].powi(2)));
        }
        // E e = (τ² + T)/2 + T/2 = 0.5 + 0.5
        for (m, target) in [(mr, 1.0), (mp, 0.0), (me, 1.0)] {
            assert!((m.mean - target).abs() < 4.0 * m.stderr(), "{} vs {target}", m.mean);
        }
    }

    #[test]
    fn site_variance_follows_profile() {
        let temp = MacroProfile::cosine(1.0, 0.5, 1);
        let n = 8;
        let ens = local_gibbs_ensemble(&MacroProfile::constant(0.0), &temp, n, 10_000, 11).unwrap();
        for x in 0..n {
            let mut m = Moments::default();
            ens.iter().for_each(|s| m.push(s.r()[x]));
            let target = temp.eval(x as f64 / n as f64);
            // sd of the sample variance of a Gaussian is σ²·sqrt(2/(M-1))
            let sd = target * (2.0 / 9999.0f64).sqrt();
            assert!((m.variance() - target).abs() < 4.0 * sd, "site {x}");
        }
    }
}
