use anyhow::Result;
use hydrochain::chain::ModalTables;
use hydrochain::fourier::Dft;
use hydrochain::macro_pde::{profile_rows, total_energy_profile, MacroSolution};
use hydrochain::stats::{median, Moments};
use num_complex::Complex64 as C64;
use serde_json::json;

use super::{sorted_snapshots, start_trajectory, ComplexMoments, Exec};
use crate::config::ExperimentConfig;
use crate::output::{Check, ResultRow, RunOutput};
use crate::plot::LinePlot;
use crate::pool::par_chunks;

const BLOCKS: usize = 16;
const PROFILE_POINTS: usize = 128;

/// Ensemble statistics at one snapshot.
#[derive(Debug, Clone)]
struct Snap {
    /// Coefficients `n⁻¹ Σ_x f_x e^{−2πiηx/n}` for `η = −P..=P`.
    coef_r: Vec<ComplexMoments>,
    coef_e: Vec<ComplexMoments>,
    block_r: Vec<Moments>,
    block_e: Vec<Moments>,
}

impl Snap {
    fn new(p: usize, blocks: usize) -> Self {
        Snap {
            coef_r: vec![ComplexMoments::default(); 2 * p + 1],
            coef_e: vec![ComplexMoments::default(); 2 * p + 1],
            block_r: vec![Moments::default(); blocks],
            block_e: vec![Moments::default(); blocks],
        }
    }

    fn merge(&mut self, o: &Snap) {
        for (a, b) in self.coef_r.iter_mut().zip(&o.coef_r) {
            a.merge(b);
        }
        for (a, b) in self.coef_e.iter_mut().zip(&o.coef_e) {
            a.merge(b);
        }
        for (a, b) in self.block_r.iter_mut().zip(&o.block_r) {
            a.merge(b);
        }
        for (a, b) in self.block_e.iter_mut().zip(&o.block_e) {
            a.merge(b);
        }
    }
}

fn push_profile(coef: &mut [ComplexMoments], blocks: &mut [Moments], f: &[f64], dft: &Dft) {
    let n = f.len();
    let p = (coef.len() / 2) as i64;
    let fh = dft.forward_real(f);
    for eta in -p..=p {
        coef[(eta + p) as usize].push(fh[eta.rem_euclid(n as i64) as usize] / n as f64);
    }
    let bs = n / blocks.len();
    for (b, m) in blocks.iter_mut().enumerate() {
        m.push(f[b * bs..(b + 1) * bs].iter().sum::<f64>() / bs as f64);
    }
}

/// `(‖c_emp − c_pde‖₂, ‖stderr‖₂)` over the projected modes.
fn projected_error(coef: &[ComplexMoments], pde: impl Fn(i64) -> C64) -> (f64, f64) {
    let p = (coef.len() / 2) as i64;
    let (mut err, mut noise) = (0.0, 0.0);
    for eta in -p..=p {
        let c = &coef[(eta + p) as usize];
        err += (c.mean() - pde(eta)).norm_sqr();
        noise += c.stderr().norm_sqr();
    }
    (err.sqrt(), noise.sqrt())
}

pub fn run_hydro(cfg: &ExperimentConfig, exec: Exec) -> Result<RunOutput> {
    let tau0 = cfg.tau0()?;
    let temp0 = cfg.temperature0()?;
    let solution = MacroSolution::new(tau0.clone(), temp0.clone(), cfg.gamma, cfg.n_modes)?;
    let snaps = sorted_snapshots(&cfg.t_snapshots);
    let p = cfg.projection_modes;
    let mut out = RunOutput::default();
    let mut summary = Vec::new();
    let mut medians = Vec::new();
    let mut profile_plot = LinePlot::new("elongation profile at the last snapshot", "u", "r");
    let mut energy_plot = LinePlot::new("energy profile at the last snapshot", "u", "e");
    let mut final_errs: Vec<(usize, f64, f64)> = Vec::new();

    for &n in &cfg.n_list {
        let blocks = BLOCKS.min(n);
        let tables = ModalTables::new(n);
        let dft = Dft::new(n);
        let chunks = par_chunks(cfg.ensemble_size, exec.threads, |range| -> Result<Vec<Snap>> {
            let mut acc = vec![Snap::new(p, blocks); snaps.len()];
            for i in range {
                let (mut chain, mut rng) = start_trajectory(&tau0, &temp0, n, exec.seed, i, &tables)?;
                for (s, &t) in acc.iter_mut().zip(&snaps) {
                    chain.advance(t, cfg.gamma, &mut rng)?;
                    let state = chain.to_state();
                    push_profile(&mut s.coef_r, &mut s.block_r, state.r(), &dft);
                    push_profile(&mut s.coef_e, &mut s.block_e, &state.energy_per_site(), &dft);
                }
            }
            Ok(acc)
        })?;
        let mut acc = vec![Snap::new(p, blocks); snaps.len()];
        for c in &chunks {
            for (a, b) in acc.iter_mut().zip(c) {
                a.merge(b);
            }
        }

        let mut per_t = Vec::new();
        let mut r_errs = Vec::new();
        for (s, &t) in acc.iter().zip(&snaps) {
            let state = solution.at(t)?;
            let e_tot = total_energy_profile(&state).e_total;
            let (r_err, r_noise) = projected_error(&s.coef_r, |eta| state.r.coeff(eta));
            let (e_err, e_noise) = projected_error(&s.coef_e, |eta| e_tot.coeff(eta));
            if t > 0.0 {
                r_errs.push(r_err);
            }
            out.rows.push(ResultRow::new(n, t, "r_l2_error", 0, r_err, r_noise));
            out.rows.push(ResultRow::new(n, t, "e_l2_error", 0, e_err, e_noise));
            for (quantity, blocks_m, pde) in [("r_block", &s.block_r, &state.r), ("e_block", &s.block_e, &e_tot)] {
                for (b, m) in blocks_m.iter().enumerate() {
                    out.rows.push(ResultRow::new(n, t, quantity, b as i64, m.mean, m.stderr()));
                    let u = (b as f64 + 0.5) / blocks as f64;
                    out.rows.push(ResultRow::new(n, t, &format!("{quantity}_pde"), b as i64, pde.eval(u), 0.0));
                }
            }
            per_t.push(json!({"t": t, "r_error": r_err, "r_noise": r_noise, "e_error": e_err, "e_noise": e_noise}));
            if t == *snaps.last().expect("nonempty") {
                final_errs.push((n, r_err, e_err));
            }
        }
        let last = acc.last().expect("at least one snapshot");
        let centers = |m: &[Moments]| -> Vec<(f64, f64)> {
            m.iter().enumerate().map(|(b, v)| ((b as f64 + 0.5) / blocks as f64, v.mean)).collect()
        };
        profile_plot = profile_plot.line(&format!("n = {n}"), centers(&last.block_r));
        energy_plot = energy_plot.line(&format!("n = {n}"), centers(&last.block_e));
        let med = if r_errs.is_empty() { f64::NAN } else { median(&r_errs) };
        medians.push((n, med));
        summary.push(json!({"n": n, "snapshots": per_t, "median_r_error": med}));
    }

    let t_last = *snaps.last().expect("validated nonempty");
    let state = solution.at(t_last)?;
    let grid: Vec<f64> = (0..PROFILE_POINTS).map(|i| i as f64 / PROFILE_POINTS as f64).collect();
    profile_plot = profile_plot.dashed("PDE", grid.iter().map(|&u| (u, state.r.eval(u))).collect());
    let e_tot = total_energy_profile(&state).e_total;
    energy_plot = energy_plot.dashed("PDE", grid.iter().map(|&u| (u, e_tot.eval(u))).collect());
    out.plots.push(("elongation_profile".into(), profile_plot));
    out.plots.push(("energy_profile".into(), energy_plot));
    if medians.len() >= 2 && medians.iter().all(|(_, m)| *m > 0.0) {
        out.plots.push((
            "elongation_error".into(),
            LinePlot::new("median elongation error", "n", "L2 error")
                .log_log()
                .line("median over snapshots", medians.iter().map(|&(n, m)| (n as f64, m)).collect()),
        ));
    }

    let mut records = Vec::new();
    for &t in &snaps {
        for row in profile_rows(&solution.at(t)?, PROFILE_POINTS) {
            records.push(row.iter().map(|v| format!("{v:.12e}")).collect());
        }
    }
    out.tables.push((
        "profiles.csv".into(),
        ["t", "u", "r", "e_mech", "e_thm", "e"].iter().map(|s| s.to_string()).collect(),
        records,
    ));

    let &(n_max, r_final, e_final) = final_errs.iter().max_by_key(|e| e.0).expect("validated");
    out.checks.push(Check::at_most(
        "hydro_r_error",
        r_final,
        cfg.tolerances.hydro_r,
        format!("elongation L2 error at n = {n_max}, t = {t_last}"),
    ));
    out.checks.push(Check::at_most(
        "hydro_e_error",
        e_final,
        cfg.tolerances.hydro_e,
        format!("energy L2 error at n = {n_max}, t = {t_last}"),
    ));
    if medians.len() >= 2 && snaps.iter().any(|&t| t > 0.0) {
        let mut sorted = medians.clone();
        sorted.sort_by_key(|&(n, _)| n);
        let monotone = sorted.windows(2).all(|w| w[1].1 < w[0].1);
        out.checks.push(Check::flag(
            "hydro_median_monotone",
            monotone,
            format!("median elongation error over snapshots by n: {sorted:?}"),
        ));
    }
    out.summary = json!({"kind": "hydro", "runs": summary, "projection_modes": p});
    Ok(out)
}
