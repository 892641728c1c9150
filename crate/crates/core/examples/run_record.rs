//! Drives the experiment harness from code: parse a TOML run config, run
//! it into a directory, and print the manifest.
//!
//! `cargo run --release --example run_record -- [out_dir]`

use hsail::harness::cli::{execute, Prepared};
use hsail::harness::{ExperimentKind, RunConfig};
use hsail::BenchmarkProblem;

const CONFIG: &str = r#"
problem = "rastrigin"
seed = 11

[illumination]
total_evaluations = 5000
resolution = [16, 16]
"#;

fn main() -> hsail::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "run_record_demo".into());
    let config = RunConfig::from_toml_str(CONFIG)?;
    let prepared = Prepared {
        kind: ExperimentKind::MapElites,
        problem: BenchmarkProblem::by_name(config.problem_or("rastrigin"))?,
        config,
        out: out.into(),
    };
    let manifest = execute(&prepared)?;
    for f in manifest.files.iter().chain(&manifest.timing_files) {
        println!("{:<20} {}", f.path, f.digest);
    }
    Ok(())
}
