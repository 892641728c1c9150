//! One SAIL run on foil-proxy with a GP surrogate, logging each round.
//!
//! `cargo run --release --example sail_foil -- [seed]`

use hsail::acquisition::{sail, AcquisitionConfig, SailConfig};
use hsail::{BenchmarkProblem, IlluminationConfig, Problem};

fn main() -> hsail::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(0, |a| a.parse().expect("seed"));
    let problem = BenchmarkProblem::foil_proxy();
    let cfg = SailConfig {
        illumination: IlluminationConfig {
            init_count: 50,
            total_evaluations: 3000,
            resolution: vec![16, 16],
            ..IlluminationConfig::default()
        },
        acquisition: AcquisitionConfig {
            batch_size: 25,
            rounds: 6,
            ..AcquisitionConfig::default()
        },
    };
    let result = sail(&problem, &cfg, seed)?;
    for r in &result.rounds {
        println!(
            "round {}: {} true evaluations, acquisition coverage {:.2}, predicted qd {:.2}, trained in {:.2}s",
            r.round, r.true_evals, r.acq_coverage, r.pred_qd_score_surrogate, r.surrogate_train_seconds
        );
    }
    let predicted = result.prediction_archive.metrics();
    let truth = result
        .prediction_archive
        .rescored(|e| problem.evaluate(&e.x))
        .metrics();
    println!(
        "prediction map: coverage {:.2}, predicted qd {:.2}, true qd {:.2}",
        predicted.coverage, predicted.qd_score, truth.qd_score
    );
    Ok(())
}
