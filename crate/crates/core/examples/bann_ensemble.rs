//! Bootstrapped neural-network ensemble: members are trained by
//! Levenberg-Marquardt on bootstrap resamples; their spread is the
//! prediction's uncertainty.
//!
//! `cargo run --release --example bann_ensemble`

use hsail::ann::{BannConfig, BannEnsemble};
use hsail::surrogate::Regressor;

fn main() -> hsail::Result<()> {
    let f = |x: f64| (3.0 * x).sin() + 0.5 * x;
    let xs: Vec<Vec<f64>> = (0..25)
        .map(|i| vec![-1.0 + 2.0 * i as f64 / 24.0])
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
    let cfg = BannConfig {
        members: 12,
        hidden: 6,
        ..BannConfig::default()
    };
    let ensemble = BannEnsemble::train(&xs, &ys, (&[-2.0], &[2.0]), &cfg, 7)?;
    println!("{} members", ensemble.members().len());
    println!("    x     true     mean       sd");
    // the last rows extrapolate past the training range, where members disagree
    for i in 0..=10 {
        let x = -1.0 + 0.25 * i as f64;
        let p = ensemble.predict(&[x]);
        println!(
            "{x:>5.2} {:>8.3} {:>8.3} {:>8.3}",
            f(x),
            p.mean,
            p.variance.sqrt()
        );
    }
    Ok(())
}
