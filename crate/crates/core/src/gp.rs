//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! [`GpModel`] is the raw zero-mean model. [`GpRegressor`] wraps it with
//! target standardisation and marginal-likelihood hyperparameter fitting,
//! and is what the surrogate layer uses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::rng_from_seed;
use crate::error::{Error, Result};
use crate::surrogate::{Prediction, Regressor};

const MAX_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub jitter: f64,
}

impl GpHyperparams {
    pub fn isotropic(
        dim: usize,
        length_scale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Self {
        Self {
            length_scales: vec![length_scale; dim],
            signal_variance,
            noise_variance,
            jitter: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.length_scales.is_empty()
            && self.length_scales.iter().all(|l| *l > 0.0 && l.is_finite())
            && self.signal_variance > 0.0
            && self.signal_variance.is_finite()
            && self.noise_variance >= 0.0
            && self.noise_variance.is_finite()
            && self.jitter > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "invalid GP hyperparameters {self:?}"
            )))
        }
    }
}

/// `σ²_f · exp(−½ Σ ((a_i − b_i)/ℓ_i)²)`
pub fn kernel(a: &[f64], b: &[f64], hyper: &GpHyperparams) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hyper.length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    hyper.signal_variance * (-0.5 * r2).exp()
}

/// Zero-mean GP conditioned on `(X, y)`.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: GpHyperparams,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Lower Cholesky factor of `K + (noise + jitter)·I`, row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter_used: f64,
}

impl GpModel {
    /// Factorises the Gram matrix, doubling the jitter (up to 1e-4) until
    /// it is positive definite.
    pub fn train(inputs: &[Vec<f64>], targets: &[f64], hyper: &GpHyperparams) -> Result<Self> {
        hyper.validate()?;
        let n = inputs.len();
        if n == 0 {
            return Err(Error::Training(
                "GP needs at least one training point".into(),
            ));
        }
        if targets.len() != n {
            return Err(Error::Argument(format!(
                "{n} inputs but {} targets",
                targets.len()
            )));
        }
        let d = hyper.length_scales.len();
        if let Some(bad) = inputs.iter().position(|x| x.len() != d) {
            return Err(Error::Argument(format!(
                "input {bad} has dimension {}, kernel expects {d}",
                inputs[bad].len()
            )));
        }
        if hyper.noise_variance == 0.0 {
            if let Some((i, j)) = find_duplicate(inputs) {
                return Err(Error::Training(format!(
                    "inputs {i} and {j} coincide and noise variance is 0: Gram matrix is singular"
                )));
            }
        }

        let gram = DMatrix::from_fn(n, n, |i, j| kernel(&inputs[i], &inputs[j], hyper));
        let mut jitter = hyper.jitter;
        let factor = loop {
            let shifted = &gram + DMatrix::identity(n, n) * (hyper.noise_variance + jitter);
            if let Some(c) = shifted.cholesky() {
                break c;
            }
            jitter *= 2.0;
            if jitter > MAX_JITTER {
                return Err(Error::Training(format!(
                    "Gram matrix not positive definite even with jitter {MAX_JITTER:e}"
                )));
            }
        };
        let alpha = factor.solve(&DVector::from_column_slice(targets));
        let l = factor.l();
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol[i * n + j] = l[(i, j)];
            }
        }
        Ok(Self {
            hyper: hyper.clone(),
            inputs: inputs.to_vec(),
            targets: targets.to_vec(),
            chol,
            alpha: alpha.as_slice().to_vec(),
            jitter_used: jitter,
        })
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Lower Cholesky factor as a dense matrix.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_row_slice(n, n, &self.chol)
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let n = self.len();
        let kx: Vec<f64> = self
            .inputs
            .iter()
            .map(|xi| kernel(x, xi, &self.hyper))
            .collect();
        let mean = kx.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        // forward substitution v = L⁻¹ k
        let mut v = kx;
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i];
            let s: f64 = row.iter().zip(&v[..i]).map(|(l, vj)| l * vj).sum();
            v[i] = (v[i] - s) / self.chol[i * n + i];
        }
        let prior = self.hyper.signal_variance;
        let variance = (prior - v.iter().map(|t| t * t).sum::<f64>()).max(0.0);
        Prediction { mean, variance }
    }

    /// Predictive mean only; O(n·d) instead of O(n²).
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.inputs
            .iter()
            .zip(&self.alpha)
            .map(|(xi, a)| kernel(x, xi, &self.hyper) * a)
            .sum()
    }

    /// `log p(y | X, θ)` through the Cholesky factor.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self
            .targets
            .iter()
            .zip(&self.alpha)
            .map(|(y, a)| y * a)
            .sum();
        let log_det_half: f64 = (0..n).map(|i| self.chol[i * n + i].ln()).sum();
        -0.5 * fit - log_det_half - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn find_duplicate(inputs: &[Vec<f64>]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| {
        inputs[a]
            .iter()
            .zip(&inputs[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
        .windows(2)
        .find(|w| inputs[w[0]] == inputs[w[1]])
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// Multi-start coordinate search over log-hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSearch {
    /// Random starts in addition to the default candidate.
    pub restarts: usize,
    /// Likelihood evaluations allowed per start.
    pub max_evals: usize,
    pub initial_log_step: f64,
    pub min_log_step: f64,
    /// Fit the noise variance too; otherwise it stays at `fixed_noise`.
    pub fit_noise: bool,
    pub fixed_noise: f64,
    /// Length-scale search box, as multiples of each input dimension's range.
    pub length_scale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub noise_variance_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for HyperSearch {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_evals: 150,
            initial_log_step: 1.0,
            min_log_step: 0.05,
            fit_noise: true,
            fixed_noise: 1e-6,
            length_scale_bounds: (1e-2, 1e2),
            signal_variance_bounds: (1e-4, 1e2),
            noise_variance_bounds: (1e-6, 1.0),
            seed: 0,
        }
    }
}

fn log_likelihood_of(inputs: &[Vec<f64>], targets: &[f64], hyper: &GpHyperparams) -> f64 {
    match GpModel::train(inputs, targets, hyper) {
        Ok(m) => m.log_marginal_likelihood(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// The default starting candidate used by [`fit_hyperparams`].
pub fn default_candidate(
    inputs: &[Vec<f64>],
    targets: &[f64],
    search: &HyperSearch,
) -> GpHyperparams {
    let ranges = input_ranges(inputs);
    let var = sample_variance(targets).max(search.signal_variance_bounds.0);
    GpHyperparams {
        length_scales: ranges.iter().map(|r| 0.3 * r).collect(),
        signal_variance: var.clamp(
            search.signal_variance_bounds.0,
            search.signal_variance_bounds.1,
        ),
        noise_variance: if search.fit_noise {
            (1e-3 * var).clamp(
                search.noise_variance_bounds.0,
                search.noise_variance_bounds.1,
            )
        } else {
            search.fixed_noise
        },
        jitter: 1e-8,
    }
}

/// Maximises the exact log marginal likelihood. The result is never worse
/// than any starting candidate.
pub fn fit_hyperparams(
    inputs: &[Vec<f64>],
    targets: &[f64],
    search: &HyperSearch,
) -> Result<GpHyperparams> {
    if inputs.len() < 2 {
        return Err(Error::Argument(
            "hyperparameter fitting needs at least 2 points".into(),
        ));
    }
    let d = inputs[0].len();
    let ranges = input_ranges(inputs);
    let n_params = d + 1 + usize::from(search.fit_noise);

    let mut lo = Vec::with_capacity(n_params);
    let mut hi = Vec::with_capacity(n_params);
    for r in &ranges {
        lo.push((search.length_scale_bounds.0 * r).ln());
        hi.push((search.length_scale_bounds.1 * r).ln());
    }
    lo.push(search.signal_variance_bounds.0.ln());
    hi.push(search.signal_variance_bounds.1.ln());
    if search.fit_noise {
        lo.push(search.noise_variance_bounds.0.ln());
        hi.push(search.noise_variance_bounds.1.ln());
    }

    let decode = |theta: &[f64]| GpHyperparams {
        length_scales: theta[..d].iter().map(|t| t.exp()).collect(),
        signal_variance: theta[d].exp(),
        noise_variance: if search.fit_noise {
            theta[d + 1].exp()
        } else {
            search.fixed_noise
        },
        jitter: 1e-8,
    };
    let default = default_candidate(inputs, targets, search);
    let mut start0: Vec<f64> = default.length_scales.iter().map(|l| l.ln()).collect();
    start0.push(default.signal_variance.ln());
    if search.fit_noise {
        start0.push(default.noise_variance.ln());
    }
    for (t, (l, h)) in start0.iter_mut().zip(lo.iter().zip(&hi)) {
        *t = t.clamp(*l, *h);
    }

    let mut rng = rng_from_seed(search.seed);
    let mut starts = vec![start0];
    for _ in 0..search.restarts {
        starts.push(
            lo.iter()
                .zip(&hi)
                .map(|(l, h)| rng.random_range(*l..=*h))
                .collect(),
        );
    }

    let objective = |theta: &[f64]| log_likelihood_of(inputs, targets, &decode(theta));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (theta, value) = coordinate_search(&objective, start, &lo, &hi, search);
        if value.is_finite() && best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((theta, value));
        }
    }
    match best {
        Some((theta, _)) => Ok(decode(&theta)),
        None => Err(Error::Training(
            "no hyperparameter candidate produced a factorisable Gram matrix".into(),
        )),
    }
}

fn coordinate_search<F: Fn(&[f64]) -> f64>(
    objective: &F,
    mut theta: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    search: &HyperSearch,
) -> (Vec<f64>, f64) {
    let mut value = objective(&theta);
    let mut evals = 1;
    let mut step = search.initial_log_step;
    while step >= search.min_log_step && evals < search.max_evals {
        let mut improved = false;
        for k in 0..theta.len() {
            for sign in [1.0, -1.0] {
                if evals >= search.max_evals {
                    break;
                }
                let mut trial = theta.clone();
                trial[k] = (trial[k] + sign * step).clamp(lo[k], hi[k]);
                if trial[k] == theta[k] {
                    continue;
                }
                let v = objective(&trial);
                evals += 1;
                if v > value {
                    theta = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (theta, value)
}

fn input_ranges(inputs: &[Vec<f64>]) -> Vec<f64> {
    let d = inputs.first().map_or(0, Vec::len);
    (0..d)
        .map(|k| {
            let (lo, hi) = inputs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[k]), hi.max(x[k]))
                });
            let r = hi - lo;
            if r > 1e-12 {
                r
            } else {
                1.0
            }
        })
        .collect()
}

fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpConfig {
    /// Fit hyperparameters by marginal likelihood; otherwise use `hyper`.
    pub fit: bool,
    /// Fixed hyperparameters (standardised target units), used when
    /// `fit` is false. `None` means the default candidate.
    pub hyper: Option<GpHyperparams>,
    pub search: HyperSearch,
    /// Hyperparameters are fitted on at most this many points (evenly
    /// strided subset); the final model always uses every point.
    pub max_fit_samples: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            fit: true,
            hyper: None,
            search: HyperSearch::default(),
            max_fit_samples: 200,
        }
    }
}

/// GP on standardised targets: `y' = (y − mean) / sd`.
#[derive(Debug, Clone)]
pub struct GpRegressor {
    model: GpModel,
    y_mean: f64,
    y_scale: f64,
}

impl GpRegressor {
    pub fn train(inputs: &[Vec<f64>], targets: &[f64], cfg: &GpConfig, seed: u64) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Training(
                "GP needs at least one training point".into(),
            ));
        }
        let y_mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let sd = sample_variance(targets).sqrt();
        let y_scale = if sd > 1e-12 { sd } else { 1.0 };
        let z: Vec<f64> = targets.iter().map(|y| (y - y_mean) / y_scale).collect();

        let hyper = if cfg.fit && inputs.len() >= 2 {
            let search = HyperSearch {
                seed,
                ..cfg.search.clone()
            };
            if inputs.len() > cfg.max_fit_samples {
                let stride = inputs.len() as f64 / cfg.max_fit_samples as f64;
                let idx: Vec<usize> = (0..cfg.max_fit_samples)
                    .map(|i| (i as f64 * stride) as usize)
                    .collect();
                let xs: Vec<Vec<f64>> = idx.iter().map(|&i| inputs[i].clone()).collect();
                let ys: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
                fit_hyperparams(&xs, &ys, &search)?
            } else {
                fit_hyperparams(inputs, &z, &search)?
            }
        } else {
            match &cfg.hyper {
                Some(h) => h.clone(),
                None => {
                    let mut h = default_candidate(inputs, &z, &cfg.search);
                    h.signal_variance = 1.0;
                    h
                }
            }
        };
        let model = GpModel::train(inputs, &z, &hyper)?;
        Ok(Self {
            model,
            y_mean,
            y_scale,
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }
}

impl Regressor for GpRegressor {
    fn predict(&self, x: &[f64]) -> Prediction {
        let p = self.model.predict(x);
        Prediction {
            mean: self.y_mean + self.y_scale * p.mean,
            variance: self.y_scale * self.y_scale * p.variance,
        }
    }

    fn predict_mean(&self, x: &[f64]) -> f64 {
        self.y_mean + self.y_scale * self.model.predict_mean(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper1(l: f64, s: f64, noise: f64) -> GpHyperparams {
        GpHyperparams::isotropic(1, l, s, noise)
    }

    #[test]
    fn kernel_examples() {
        let h = hyper1(1.0, 2.0, 0.0);
        assert_eq!(kernel(&[0.3], &[0.3], &h), 2.0);
        assert!((kernel(&[0.0], &[1.0], &h) - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((kernel(&[0.0], &[1.0], &h) - 1.21306).abs() < 1e-5);
        assert!(kernel(&[0.0], &[1e3], &h) < 1e-300);
        let h2 = GpHyperparams {
            length_scales: vec![0.5, 2.0],
            ..hyper1(1.0, 1.5, 0.0)
        };
        assert_eq!(
            kernel(&[0.1, 0.7], &[0.4, -0.2], &h2),
            kernel(&[0.4, -0.2], &[0.1, 0.7], &h2)
        );
    }

    #[test]
    fn single_point_interpolates() {
        let m = GpModel::train(&[vec![0.2]], &[3.0], &hyper1(0.5, 1.0, 0.0)).unwrap();
        let p = m.predict(&[0.2]);
        assert!((p.mean - 3.0).abs() < 1e-6);
        assert!(p.variance <= 1e-6);
    }

    #[test]
    fn duplicates_without_noise_fail() {
        let x = vec![vec![0.1], vec![0.5], vec![0.1]];
        let err = GpModel::train(&x, &[1.0, 2.0, 3.0], &hyper1(0.5, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
        assert!(GpModel::train(&x, &[1.0, 2.0, 3.0], &hyper1(0.5, 1.0, 0.1)).is_ok());
    }

    #[test]
    fn far_points_revert_to_prior() {
        let x = vec![vec![0.0], vec![0.3], vec![0.9]];
        let m = GpModel::train(&x, &[1.0, -2.0, 0.5], &hyper1(0.2, 1.7, 0.0)).unwrap();
        let p = m.predict(&[100.0]);
        assert!(p.mean.abs() < 1e-12);
        assert!((p.variance - 1.7).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs_gram() {
        let x: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64 * 0.17, (i * i) as f64 * 0.05])
            .collect();
        let h = GpHyperparams {
            length_scales: vec![0.3, 0.6],
            ..hyper1(1.0, 1.3, 0.01)
        };
        let m = GpModel::train(&x, &[0.0; 6], &h).unwrap();
        let l = m.cholesky_factor();
        let k = DMatrix::from_fn(6, 6, |i, j| kernel(&x[i], &x[j], &h))
            + DMatrix::identity(6, 6) * (h.noise_variance + m.jitter_used());
        let rel = (&l * l.transpose() - &k).norm() / k.norm();
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn flat_data_prefers_small_signal() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let y = vec![0.0; 8];
        let search = HyperSearch::default();
        let fitted = fit_hyperparams(&x, &y, &search).unwrap();
        let big = GpHyperparams {
            signal_variance: 10.0,
            ..fitted.clone()
        };
        assert!(
            log_likelihood_of(&x, &y, &fitted) > log_likelihood_of(&x, &y, &big),
            "{fitted:?}"
        );
        assert!(fitted.signal_variance < 1e-2, "{fitted:?}");
    }

    #[test]
    fn fitted_beats_default_candidate() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin() + 0.3 * v[0]).collect();
        let search = HyperSearch::default();
        let fitted = fit_hyperparams(&x, &y, &search).unwrap();
        let default = default_candidate(&x, &y, &search);
        assert!(log_likelihood_of(&x, &y, &fitted) >= log_likelihood_of(&x, &y, &default));
        assert!(fit_hyperparams(&x[..1], &y[..1], &search).is_err());
    }

    #[test]
    fn regressor_restores_target_scale() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| 100.0 + 20.0 * v[0] * v[0]).collect();
        let cfg = GpConfig {
            search: HyperSearch {
                fit_noise: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = GpRegressor::train(&x, &y, &cfg, 1).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!(
                (r.predict(xi).mean - yi).abs() < 1e-4 * yi,
                "{} vs {yi} hyper {:?}",
                r.predict(xi).mean,
                r.model().hyper()
            );
            assert!((r.predict_mean(xi) - r.predict(xi).mean).abs() < 1e-9);
        }
    }
}
