//! Plain MAP-Elites on 2-D Rastrigin.
//!
//! `cargo run --release --example map_elites -- [evaluations] [seed]`

use hsail::{map_elites, BenchmarkProblem, FitnessSource, IlluminationConfig};

fn main() -> hsail::Result<()> {
    let mut args = std::env::args().skip(1);
    let evaluations = args
        .next()
        .map_or(50_000, |a| a.parse().expect("evaluations"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let problem = BenchmarkProblem::rastrigin(2)?;
    let cfg = IlluminationConfig {
        total_evaluations: evaluations,
        seed,
        ..IlluminationConfig::default()
    };
    let result = map_elites(&problem, &cfg, FitnessSource::TrueObjective)?;
    for h in result.history.iter().step_by(40) {
        println!(
            "{:>7} evals  coverage {:.3}  qd {:>10.1}",
            h.evals, h.metrics.coverage, h.metrics.qd_score
        );
    }
    let m = result.archive.metrics();
    let best = m.best.expect("non-empty archive");
    println!(
        "final: coverage {:.3}, qd {:.1}, best objective {:.4}",
        m.coverage,
        m.qd_score,
        problem.to_objective(best)
    );
    Ok(())
}
