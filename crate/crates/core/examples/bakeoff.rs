//! Surrogate bake-off on foil-proxy: training and prediction cost, holdout
//! RMSE and rank correlation for GP, BANN and the hierarchical surrogate.
//!
//! `cargo run --release --example bakeoff -- 50 100 200 400`

use hsail::ann::BannConfig;
use hsail::harness::bakeoff::{run_bakeoff, write_bakeoff_csv, BakeoffConfig};
use hsail::BenchmarkProblem;

fn main() -> hsail::Result<()> {
    let mut cfg = BakeoffConfig {
        sizes: std::env::args()
            .skip(1)
            .map(|a| a.parse().expect("size"))
            .collect(),
        bann: Some(BannConfig {
            members: 8,
            ..BannConfig::default()
        }),
        ..BakeoffConfig::default()
    };
    if cfg.sizes.is_empty() {
        cfg.sizes = vec![50, 100, 200, 400];
    }
    let result = run_bakeoff(&BenchmarkProblem::foil_proxy(), &cfg, 0)?;
    write_bakeoff_csv(&result.rows, std::io::stdout().lock())?;
    if let Some(slope) = result.gp_time_slope {
        println!("GP training time grows as n^{slope:.2} over this grid");
    }
    Ok(())
}
