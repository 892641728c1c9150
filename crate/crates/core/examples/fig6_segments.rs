//! Feature-space segmentation of foil-proxy elites: per-segment PCA
//! reduction and local models against one flat model.
//!
//! `cargo run --release --example fig6_segments -- [seed]`

use hsail::harness::fig6::{run_fig6, Fig6Config};
use hsail::BenchmarkProblem;

fn main() -> hsail::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(0, |a| a.parse().expect("seed"));
    let problem = BenchmarkProblem::foil_proxy();
    let t = std::time::Instant::now();
    let result = run_fig6(&problem, &Fig6Config::default(), seed)?;
    println!("segment  size  dims  local_mse   resid_mse   flat_mse");
    for s in &result.segments {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{:>7} {:>5} {:>5}  {:>9}  {:>9}  {:>9}",
            s.segment,
            s.size,
            s.retained_dims,
            fmt(s.local_mse),
            fmt(s.residual_mse),
            fmt(s.flat_mse)
        );
    }
    let sum = &result.summary;
    println!(
        "{} elites; reduced in {:.0}% of segments; local model better in {:.0}% (residual-trained {:.0}%); {:.1}s",
        sum.elites,
        100.0 * sum.reduced_fraction,
        100.0 * sum.local_better_fraction,
        100.0 * sum.residual_better_fraction,
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
