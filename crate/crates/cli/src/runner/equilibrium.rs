use anyhow::Result;
use hydrochain::chain::{ChainState, ModalTables};
use hydrochain::initial::{thermal_spectrum, thermo_e, thermo_r};
use hydrochain::stats::Moments;
use serde_json::json;

use super::{sorted_snapshots, start_trajectory, Exec};
use crate::config::ExperimentConfig;
use crate::output::{Check, ResultRow, RunOutput};
use crate::plot::LinePlot;
use crate::pool::par_chunks;

fn z(m: &Moments, want: f64) -> f64 {
    let se = m.stderr();
    if se > 0.0 {
        (m.mean - want) / se
    } else if m.mean == want {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn run_equilibrium(cfg: &ExperimentConfig, exec: Exec) -> Result<RunOutput> {
    let tau0 = cfg.tau0()?;
    let temp0 = cfg.temperature0()?;
    let tau = tau0.mean();
    let temp = temp0.mean();
    let beta = 1.0 / temp;
    let want = [thermo_r(tau, beta)?, 0.0, thermo_e(tau, beta)?];
    let names = ["r", "p", "energy"];
    let snaps = sorted_snapshots(&cfg.t_snapshots);
    let mut out = RunOutput::default();
    let mut summary = Vec::new();
    let mut worst_moment_z: f64 = 0.0;
    let mut worst_spectrum_z: f64 = 0.0;
    let mut spectrum_plot = LinePlot::new("thermal spectrum", "k", "u_n(k)");

    for &n in &cfg.n_list {
        let tables = ModalTables::new(n);
        let chunks = par_chunks(cfg.ensemble_size, exec.threads, |range| -> Result<Vec<Vec<ChainState>>> {
            let mut per_snap = vec![Vec::with_capacity(range.len()); snaps.len()];
            for i in range {
                let (mut chain, mut rng) = start_trajectory(&tau0, &temp0, n, exec.seed, i, &tables)?;
                for (bucket, &t) in per_snap.iter_mut().zip(&snaps) {
                    chain.advance(t, cfg.gamma, &mut rng)?;
                    bucket.push(chain.to_state());
                }
            }
            Ok(per_snap)
        })?;
        let mut per_t = Vec::new();
        for (s, &t) in snaps.iter().enumerate() {
            let states: Vec<ChainState> = chunks.iter().flat_map(|c| c[s].iter().cloned()).collect();
            let mut m = [Moments::default(); 3];
            for st in &states {
                let nf = n as f64;
                m[0].push(st.total_elongation() / nf);
                m[1].push(st.total_momentum() / nf);
                m[2].push(st.total_energy() / nf);
            }
            let zs: Vec<f64> = m.iter().zip(&want).map(|(mm, &w)| z(mm, w)).collect();
            for ((name, mm), zz) in names.iter().zip(&m).zip(&zs) {
                out.rows.push(ResultRow::new(n, t, &format!("mean_{name}"), 0, mm.mean, mm.stderr()));
                worst_moment_z = worst_moment_z.max(zz.abs());
            }
            let spec = thermal_spectrum(&states)?;
            let mut spec_z: f64 = 0.0;
            for (j, (&u, &se)) in spec.u_n.iter().zip(&spec.u_n_stderr).enumerate() {
                out.rows.push(ResultRow::new(n, t, "u_n", j as i64, u, se));
                let zz = if se > 0.0 { (u - temp) / se } else { f64::INFINITY };
                spec_z = spec_z.max(zz.abs());
            }
            worst_spectrum_z = worst_spectrum_z.max(spec_z);
            if s == 0 {
                spectrum_plot = spectrum_plot.line(
                    &format!("n = {n}, t = {t}"),
                    spec.u_n.iter().enumerate().map(|(j, &u)| (j as f64 / n as f64, u)).collect(),
                );
            }
            per_t.push(json!({
                "t": t,
                "means": m.iter().map(|mm| mm.mean).collect::<Vec<_>>(),
                "stderr": m.iter().map(|mm| mm.stderr()).collect::<Vec<_>>(),
                "z": zs,
                "spectrum_max_z": spec_z,
            }));
        }
        summary.push(json!({"n": n, "snapshots": per_t}));
    }
    spectrum_plot = spectrum_plot.dashed("temperature", vec![(0.0, temp), (1.0, temp)]);
    out.plots.push(("thermal_spectrum".into(), spectrum_plot));
    out.checks.push(Check::at_most(
        "equilibrium_moments",
        worst_moment_z,
        cfg.tolerances.z_moments,
        format!("largest |z| of grid means of r, p, E against {want:?}"),
    ));
    out.checks.push(Check::at_most(
        "thermal_spectrum_flat",
        worst_spectrum_z,
        cfg.tolerances.z_spectrum,
        format!("largest per-k |u_n(k) − {temp}| in standard errors"),
    ));
    out.summary = json!({"kind": "equilibrium", "expected": want, "runs": summary});
    Ok(out)
}
