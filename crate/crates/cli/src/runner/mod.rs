//! Experiment runners.

mod equilibrium;
mod hydro;
mod matrix;
mod wigner_le;

pub use equilibrium::run_equilibrium;
pub use hydro::run_hydro;
pub use matrix::run_matrix_verify;
pub use wigner_le::run_wigner_le;

use std::sync::Arc;

use anyhow::Result;
use hydrochain::chain::{ModalChain, ModalTables};
use hydrochain::initial::{local_gibbs_sample, MacroProfile};
use hydrochain::rng::{substream, StreamRng};
use hydrochain::stats::Moments;
use num_complex::Complex64 as C64;

/// Execution settings shared by all runners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exec {
    pub seed: u64,
    pub threads: usize,
}

/// Trajectory `i` of the run at chain length `n`: its initial state draws
/// from purpose 0 and its dynamics from purpose 1 of stream `(n, i)`.
pub(crate) fn start_trajectory(
    tau0: &MacroProfile,
    temperature0: &MacroProfile,
    n: usize,
    seed: u64,
    i: usize,
    tables: &Arc<ModalTables>,
) -> Result<(ModalChain, StreamRng)> {
    let id = ((n as u64) << 32) | i as u64;
    let state = local_gibbs_sample(tau0, temperature0, n, &mut substream(seed, id, 0))?;
    let chain = ModalChain::from_state(&state, Arc::clone(tables))?;
    Ok((chain, substream(seed, id, 1)))
}

/// Mergeable mean of a complex quantity with separate real/imaginary errors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct ComplexMoments {
    pub re: Moments,
    pub im: Moments,
}

impl ComplexMoments {
    pub fn push(&mut self, z: C64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, o: &ComplexMoments) {
        self.re.merge(&o.re);
        self.im.merge(&o.im);
    }

    pub fn mean(&self) -> C64 {
        C64::new(self.re.mean, self.im.mean)
    }

    pub fn stderr(&self) -> C64 {
        C64::new(self.re.stderr(), self.im.stderr())
    }
}

pub(crate) fn sorted_snapshots(ts: &[f64]) -> Vec<f64> {
    let mut v = ts.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
