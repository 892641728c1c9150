//! Gaussian-process regression on a handful of 1-D Ackley samples, with
//! marginal-likelihood hyperparameter fitting.
//!
//! `cargo run --release --example gp_regression`

use hsail::benchmarks::ackley;
use hsail::gp::{fit_hyperparams, GpModel, HyperSearch};

fn main() -> hsail::Result<()> {
    let xs: Vec<Vec<f64>> = (0..12)
        .map(|i| vec![-30.0 + 60.0 * i as f64 / 11.0])
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| ackley(x)).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let centred: Vec<f64> = ys.iter().map(|y| y - mean).collect();

    let hyper = fit_hyperparams(&xs, &centred, &HyperSearch::default())?;
    let gp = GpModel::train(&xs, &centred, &hyper)?;
    println!(
        "length scale {:.3}, signal variance {:.3}, noise {:.2e}, log marginal likelihood {:.3}",
        hyper.length_scales[0],
        hyper.signal_variance,
        hyper.noise_variance,
        gp.log_marginal_likelihood()
    );
    println!("     x   ackley     mean       sd");
    for i in 0..=12 {
        let x = -32.0 + 64.0 * i as f64 / 12.0;
        let p = gp.predict(&[x]);
        println!(
            "{x:>6.1} {:>8.3} {:>8.3} {:>8.3}",
            ackley(&[x]),
            p.mean + mean,
            p.variance.sqrt()
        );
    }
    Ok(())
}
