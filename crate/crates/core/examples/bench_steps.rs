//! Simulator throughput: `cargo run --release -p starwalk --example bench_steps`.

use std::time::Instant;

use starwalk::simulate::{terminal_state, RngConfig, SimConfig};
use starwalk::{GraphPoint, ProcessParams};

fn main() -> starwalk::Result<()> {
    let p = ProcessParams::walsh(vec![0.7, 0.3])?;
    let cfg = SimConfig::new(1e-4, 1.0, 2000)?;
    let steps = cfg.n_paths as f64 * cfg.horizon / cfg.dt;
    let t = Instant::now();
    let mut acc = 0.0;
    for i in 0..cfg.n_paths {
        acc += terminal_state(&p, GraphPoint::Vertex, &cfg, &mut RngConfig::new(1, i as u64).rng())?.local_time;
    }
    let el = t.elapsed().as_secs_f64();
    println!(
        "{steps:.0} steps in {el:.2}s, {:.1} ns/step, mean L_1 {:.4}",
        el / steps * 1e9,
        acc / cfg.n_paths as f64
    );
    Ok(())
}
