//! SAIL against plain MAP-Elites on foil-proxy at an equal budget of true
//! evaluations. SAIL's prediction map is re-scored on the true objective.
//!
//! `cargo run --release --example sail_vs_map_elites -- [pairs]`

use hsail::acquisition::{sail, AcquisitionConfig, SailConfig};
use hsail::domain::derive_seed;
use hsail::{map_elites, BenchmarkProblem, FitnessSource, IlluminationConfig, Problem};

fn main() -> hsail::Result<()> {
    let pairs: u64 = std::env::args()
        .nth(1)
        .map_or(10, |a| a.parse().expect("pairs"));
    let problem = BenchmarkProblem::foil_proxy();
    let sail_cfg = SailConfig {
        illumination: IlluminationConfig {
            init_count: 100,
            total_evaluations: 4000,
            resolution: vec![20, 20],
            ..IlluminationConfig::default()
        },
        acquisition: AcquisitionConfig {
            batch_size: 100,
            rounds: 9,
            ..AcquisitionConfig::default()
        },
    };
    let budget = sail_cfg.true_budget();
    let mut wins = 0;
    for pair in 0..pairs {
        let seed = derive_seed(42, pair);
        let t = std::time::Instant::now();
        let s = sail(&problem, &sail_cfg, seed)?;
        let sail_qd = s
            .prediction_archive
            .rescored(|e| problem.evaluate(&e.x))
            .metrics();
        let plain = map_elites(
            &problem,
            &IlluminationConfig {
                total_evaluations: budget,
                seed,
                ..sail_cfg.illumination.clone()
            },
            FitnessSource::TrueObjective,
        )?;
        let me = plain.archive.metrics();
        wins += usize::from(sail_qd.qd_score >= me.qd_score);
        println!(
            "pair {pair}: SAIL qd {:.2} (coverage {:.2})  MAP-Elites qd {:.2} (coverage {:.2})  {:.1}s",
            sail_qd.qd_score,
            sail_qd.coverage,
            me.qd_score,
            me.coverage,
            t.elapsed().as_secs_f64()
        );
    }
    println!("SAIL at least as good on {wins}/{pairs} pairs, {budget} true evaluations each");
    Ok(())
}
