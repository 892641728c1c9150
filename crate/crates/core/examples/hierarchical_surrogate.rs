//! Hierarchical surrogate over foil-proxy elites: k-means segments in
//! feature space, PCA-reduced node models, residual coupling down the tree.
//!
//! `cargo run --release --example hierarchical_surrogate`

use hsail::hierarchy::{ConfidenceStrategy, HierarchicalSurrogate, HierarchyConfig};
use hsail::{map_elites, BenchmarkProblem, FitnessSource, IlluminationConfig, Problem, Sample};

fn main() -> hsail::Result<()> {
    let problem = BenchmarkProblem::foil_proxy();
    let cfg = IlluminationConfig {
        total_evaluations: 20_000,
        resolution: vec![24, 24],
        ..IlluminationConfig::default()
    };
    let archive = map_elites(&problem, &cfg, FitnessSource::TrueObjective)?.archive;
    let samples: Vec<Sample> = archive
        .elites()
        .map(|e| Sample {
            x: e.x.clone(),
            features: e.features.clone(),
            fitness: e.fitness,
        })
        .collect();

    let mut model = HierarchicalSurrogate::build(&samples, &HierarchyConfig::default(), 3)?;
    let root = model.describe();
    println!("{} elites, {} nodes", samples.len(), model.node_count());
    for (i, child) in root.children.iter().enumerate() {
        println!(
            "segment {i}: {} samples, {} of {} dims retained, training rmse {:.2e}",
            child.sample_count,
            child.retained_dims,
            problem.spec().dim(),
            child.training_rmse
        );
    }

    let probe = &samples[samples.len() / 2];
    for strategy in [
        ConfidenceStrategy::FlatVariance,
        ConfidenceStrategy::DepthWeighted,
    ] {
        model.set_confidence_strategy(strategy, 0.5);
        let p = model.hier_predict(&probe.x, &probe.features);
        println!(
            "{strategy}: mean {:.5} (true {:.5}), confidence {:.3e}, path {:?}",
            p.mean, probe.fitness, p.confidence, p.path
        );
    }
    Ok(())
}
