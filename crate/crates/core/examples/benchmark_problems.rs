//! The registered benchmark problems and the foil proxy's outputs.
//!
//! `cargo run --release --example benchmark_problems`

use hsail::benchmarks::foil_proxy;
use hsail::{BenchmarkProblem, Problem};

fn main() -> hsail::Result<()> {
    println!(
        "registered names: {}",
        BenchmarkProblem::registered_names().join(", ")
    );
    for name in [
        "ackley",
        "rastrigin",
        "ackley-5d",
        "rastrigin-10d",
        "foil-proxy",
    ] {
        let p = BenchmarkProblem::by_name(name)?;
        let mid = p.spec().midpoint();
        println!(
            "{:<12} dim {:>2}  features {}  fitness at midpoint {:.4}  ceiling {:.4}",
            p.name(),
            p.spec().dim(),
            p.spec().feature_dim(),
            p.evaluate(&mid),
            p.ceiling()
        );
    }
    let flat = vec![0.5; 15];
    let out = foil_proxy(&flat)?;
    println!(
        "foil proxy at the flat shape: drag {:.4}, features {:?}",
        out.drag, out.features
    );
    Ok(())
}
