//! Measures flip events per second of the modal kernel.
//!
//! `cargo run --release -p hydrochain --example kernel_throughput -- 128 0.2`

use std::time::Instant;

use hydrochain::chain::{ModalChain, ModalTables};
use hydrochain::rng::stream;
use hydrochain::ChainState;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let t_end: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let state = ChainState::new(
        (0..n).map(|x| (x as f64 * 0.37).sin()).collect(),
        (0..n).map(|x| (x as f64 * 0.91).cos()).collect(),
    )
    .expect("valid state");
    let mut chain = ModalChain::from_state(&state, ModalTables::new(n)).expect("sizes match");
    let h0 = chain.energy();
    let start = Instant::now();
    let events = chain.advance(t_end, 1.0, &mut stream(1, 0)).expect("valid run");
    let secs = start.elapsed().as_secs_f64();
    println!(
        "n={n} events={events} time={secs:.3}s ns/event={:.1} rel_energy_drift={:.2e}",
        1e9 * secs / events as f64,
        (chain.energy() - h0).abs() / h0
    );
}
