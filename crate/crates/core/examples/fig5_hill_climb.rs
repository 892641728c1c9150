//! GP against BANN as the landscape for a hill climber on 1-D Ackley.
//!
//! `cargo run --release --example fig5_hill_climb -- [replicates] [seed]`

use hsail::harness::fig5::{run_fig5, Fig5Config};
use hsail::BenchmarkProblem;

fn main() -> hsail::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicates = args.next().map_or(100, |a| a.parse().expect("replicates"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let cfg = Fig5Config {
        replicates,
        ..Fig5Config::default()
    };
    let problem = BenchmarkProblem::ackley(1)?;
    let t = std::time::Instant::now();
    let result = run_fig5(&problem, &cfg, seed)?;
    for s in &result.summaries {
        println!(
            "{:>5}: median {:.4}  variance {:.4}  ({} ok, {} failed)",
            s.model, s.median, s.variance, s.replicates_ok, s.replicates_failed
        );
    }
    println!(
        "{} optima records in {:.1}s",
        result.records.len(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
