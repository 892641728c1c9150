//! One-hidden-layer tanh networks trained with Levenberg-Marquardt, and the
//! bootstrapped ensemble (BANN) built from them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{derive_seed, rng_from_seed};
use crate::error::{Error, Result};
use crate::surrogate::{Prediction, Regressor};

/// `d → h (tanh) → 1 (identity)`.
///
/// Parameters are laid out as `W1` (h×d, row-major), `b1` (h), `w2` (h), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    input_dim: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl MlpNet {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            params: vec![0.0; Self::param_count_for(input_dim, hidden)],
        }
    }

    pub fn from_params(input_dim: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::param_count_for(input_dim, hidden) {
            return Err(Error::Argument(format!(
                "{} parameters given, a {input_dim}-{hidden}-1 net has {}",
                params.len(),
                Self::param_count_for(input_dim, hidden)
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            params,
        })
    }

    /// Uniform in `[−0.5, 0.5] / √fan_in`.
    pub fn random<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input_dim, hidden);
        let in_scale = 1.0 / (input_dim as f64).sqrt();
        let out_scale = 1.0 / (hidden as f64).sqrt();
        let hidden_block = hidden * (input_dim + 1);
        for (k, p) in net.params.iter_mut().enumerate() {
            let u: f64 = rng.random_range(-0.5..=0.5);
            *p = u * if k < hidden_block {
                in_scale
            } else {
                out_scale
            };
        }
        net
    }

    pub fn param_count_for(input_dim: usize, hidden: usize) -> usize {
        hidden * (input_dim + 1) + hidden + 1
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, d) = (self.hidden, self.input_dim);
        let w1 = &self.params[..h * d];
        let b1 = &self.params[h * d..h * d + h];
        let w2 = &self.params[h * d + h..h * d + 2 * h];
        (w1, b1, w2, self.params[h * d + 2 * h])
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let d = self.input_dim;
        let mut out = b2;
        for j in 0..self.hidden {
            let row = &w1[j * d..(j + 1) * d];
            let z = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out += w2[j] * z.tanh();
        }
        out
    }

    /// Writes `∂output/∂params` at `x` into `grad`; returns the output.
    fn forward_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let (h, d) = (self.hidden, self.input_dim);
        let mut out = b2;
        for j in 0..h {
            let row = &w1[j * d..(j + 1) * d];
            let a = (b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh();
            out += w2[j] * a;
            let back = w2[j] * (1.0 - a * a);
            for k in 0..d {
                grad[j * d + k] = back * x[k];
            }
            grad[h * d + j] = back;
            grad[h * d + h + j] = a;
        }
        grad[h * d + 2 * h] = 1.0;
        out
    }

    /// Analytic Jacobian of the outputs w.r.t. the parameters, one row per
    /// input.
    pub fn jacobian(&self, inputs: &[Vec<f64>]) -> DMatrix<f64> {
        let p = self.param_count();
        let mut jac = DMatrix::zeros(inputs.len(), p);
        let mut grad = vec![0.0; p];
        for (i, x) in inputs.iter().enumerate() {
            self.forward_with_gradient(x, &mut grad);
            for (k, g) in grad.iter().enumerate() {
                jac[(i, k)] = *g;
            }
        }
        jac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmConfig {
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the SSE by less than this.
    pub tolerance: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            initial_damping: 1e-2,
            damping_up: 10.0,
            damping_down: 0.1,
            max_iterations: 200,
            tolerance: 1e-9,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_damping > 0.0
            && self.damping_up > 1.0
            && self.damping_down > 0.0
            && self.damping_down < 1.0
            && self.tolerance > 0.0
        {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "invalid Levenberg-Marquardt settings {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub net: MlpNet,
    /// SSE at the start and after every accepted step.
    pub sse_trace: Vec<f64>,
}

const MAX_DAMPING: f64 = 1e12;

fn sse(net: &MlpNet, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    inputs
        .iter()
        .zip(targets)
        .map(|(x, y)| (y - net.forward(x)).powi(2))
        .sum()
}

/// Levenberg-Marquardt on the sum of squared residuals, starting from
/// `net`'s current parameters.
pub fn lm_refine(
    net: MlpNet,
    inputs: &[Vec<f64>],
    targets: &[f64],
    cfg: &LmConfig,
) -> Result<LmOutcome> {
    cfg.validate()?;
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::Argument(format!(
            "{} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let mut net = net;
    let p = net.param_count();
    let mut damping = cfg.initial_damping;
    let mut current = sse(&net, inputs, targets);
    let mut trace = vec![current];
    if !current.is_finite() {
        return Err(Error::Training("initial SSE is not finite".into()));
    }

    'outer: for _ in 0..cfg.max_iterations {
        let jac = net.jacobian(inputs);
        let residual = DVector::from_iterator(
            inputs.len(),
            inputs.iter().zip(targets).map(|(x, y)| y - net.forward(x)),
        );
        let jtj = jac.tr_mul(&jac);
        let jtr = jac.tr_mul(&residual);
        loop {
            let system = &jtj + DMatrix::identity(p, p) * damping;
            let delta = match system.cholesky() {
                Some(c) => c.solve(&jtr),
                None => {
                    damping *= cfg.damping_up;
                    if damping > MAX_DAMPING {
                        return Err(Error::Training(
                            "normal equations could not be solved at any damping".into(),
                        ));
                    }
                    continue;
                }
            };
            let mut trial = net.clone();
            for (w, dw) in trial.params.iter_mut().zip(delta.iter()) {
                *w += dw;
            }
            let trial_sse = sse(&trial, inputs, targets);
            if trial_sse < current {
                let gain = current - trial_sse;
                net = trial;
                current = trial_sse;
                trace.push(current);
                damping = (damping * cfg.damping_down).max(1e-15);
                if gain < cfg.tolerance {
                    break 'outer;
                }
                break;
            }
            damping *= cfg.damping_up;
            if damping > MAX_DAMPING {
                // no descent direction left at any damping: converged
                break 'outer;
            }
        }
    }
    Ok(LmOutcome {
        net,
        sse_trace: trace,
    })
}

/// Initialises a `d-h-1` net from `rng` and trains it.
pub fn lm_train<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    hidden: usize,
    cfg: &LmConfig,
    rng: &mut R,
) -> Result<LmOutcome> {
    if hidden == 0 {
        return Err(Error::Argument(
            "hidden layer needs at least one unit".into(),
        ));
    }
    let d = inputs.first().map_or(0, Vec::len);
    if inputs.len() < MlpNet::param_count_for(d, hidden) {
        log::debug!(
            "training a {}-parameter net on {} samples",
            MlpNet::param_count_for(d, hidden),
            inputs.len()
        );
    }
    lm_refine(MlpNet::random(d, hidden, rng), inputs, targets, cfg)
}

/// Affine maps used to condition network inputs and targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    in_lower: Vec<f64>,
    in_upper: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl Normalization {
    /// Inputs mapped from `[lower, upper]` to `[−1, 1]`; targets standardised.
    pub fn new(lower: &[f64], upper: &[f64], targets: &[f64]) -> Self {
        let n = targets.len().max(1) as f64;
        let y_mean = targets.iter().sum::<f64>() / n;
        let var = if targets.len() > 1 {
            targets.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let (in_lower, in_upper) = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| {
                if u - l > 1e-12 {
                    (*l, *u)
                } else {
                    (*l - 0.5, *l + 0.5)
                }
            })
            .unzip();
        Self {
            in_lower,
            in_upper,
            y_mean,
            y_scale: if sd > 1e-12 { sd } else { 1.0 },
        }
    }

    /// Bounds taken from the data's own per-dimension range.
    pub fn from_data(inputs: &[Vec<f64>], targets: &[f64]) -> Self {
        let d = inputs.first().map_or(0, Vec::len);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for x in inputs {
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        Self::new(&lo, &hi, targets)
    }

    pub fn input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.in_lower.iter().zip(&self.in_upper))
            .map(|(v, (l, u))| 2.0 * (v - l) / (u - l) - 1.0)
            .collect()
    }

    pub fn input_inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.in_lower.iter().zip(&self.in_upper))
            .map(|(v, (l, u))| l + 0.5 * (v + 1.0) * (u - l))
            .collect()
    }

    pub fn target(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_scale
    }

    pub fn target_inverse(&self, z: f64) -> f64 {
        self.y_mean + self.y_scale * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BannConfig {
    pub members: usize,
    pub hidden: usize,
    pub lm: LmConfig,
}

impl Default for BannConfig {
    fn default() -> Self {
        Self {
            members: 16,
            hidden: 10,
            lm: LmConfig::default(),
        }
    }
}

/// Bootstrapped ensemble of identically shaped networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BannEnsemble {
    members: Vec<MlpNet>,
    norm: Normalization,
}

/// `n` indices drawn uniformly from `0..n` with replacement.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Trains one member on the rows `indices` of the (already normalised) data.
pub fn train_member<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    hidden: usize,
    cfg: &LmConfig,
    rng: &mut R,
) -> Result<MlpNet> {
    let xs: Vec<Vec<f64>> = indices.iter().map(|&i| inputs[i].clone()).collect();
    let ys: Vec<f64> = indices.iter().map(|&i| targets[i]).collect();
    Ok(lm_train(&xs, &ys, hidden, cfg, rng)?.net)
}

impl BannEnsemble {
    pub fn from_members(members: Vec<MlpNet>, norm: Normalization) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Argument("ensemble needs members".into()));
        }
        let shape = (members[0].input_dim, members[0].hidden);
        if members.iter().any(|m| (m.input_dim, m.hidden) != shape) {
            return Err(Error::Argument(
                "ensemble members differ in architecture".into(),
            ));
        }
        Ok(Self { members, norm })
    }

    /// Member `m` gets its own generator seeded `derive_seed(seed, m)`, which
    /// draws its bootstrap resample and then its initial weights.
    pub fn train(
        inputs: &[Vec<f64>],
        targets: &[f64],
        bounds: (&[f64], &[f64]),
        cfg: &BannConfig,
        seed: u64,
    ) -> Result<Self> {
        if cfg.members < 2 {
            return Err(Error::Argument(format!(
                "ensemble size must be at least 2, got {}",
                cfg.members
            )));
        }
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Training(format!(
                "{} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let norm = Normalization::new(bounds.0, bounds.1, targets);
        let xs: Vec<Vec<f64>> = inputs.iter().map(|x| norm.input(x)).collect();
        let ys: Vec<f64> = targets.iter().map(|y| norm.target(*y)).collect();

        let mut members = Vec::with_capacity(cfg.members);
        let mut failures = Vec::new();
        for m in 0..cfg.members {
            let mut rng = rng_from_seed(derive_seed(seed, m as u64));
            let idx = bootstrap_indices(xs.len(), &mut rng);
            match train_member(&xs, &ys, &idx, cfg.hidden, &cfg.lm, &mut rng) {
                Ok(net) => members.push(net),
                Err(e) => failures.push((m, e)),
            }
        }
        if failures.len() * 2 > cfg.members {
            return Err(Error::Training(format!(
                "{} of {} ensemble members failed; first: {}",
                failures.len(),
                cfg.members,
                failures[0].1
            )));
        }
        for (m, e) in &failures {
            log::warn!("dropping ensemble member {m}: {e}");
        }
        Self::from_members(members, norm)
    }

    pub fn members(&self) -> &[MlpNet] {
        &self.members
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    /// Every member's output, in original target units.
    pub fn member_outputs(&self, x: &[f64]) -> Vec<f64> {
        let z = self.norm.input(x);
        self.members
            .iter()
            .map(|m| self.norm.target_inverse(m.forward(&z)))
            .collect()
    }
}

/// Mean and unbiased sample variance.
pub fn mean_and_variance(values: &[f64]) -> Prediction {
    let n = values.len();
    if n == 0 {
        return Prediction {
            mean: 0.0,
            variance: 0.0,
        };
    }
    // deviations from the first value: identical members give exactly zero
    let shift = values[0];
    let d_mean = values.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let mean = shift + d_mean;
    let variance = if n > 1 {
        values
            .iter()
            .map(|v| (v - shift - d_mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64
    } else {
        0.0
    };
    Prediction { mean, variance }
}

impl Regressor for BannEnsemble {
    fn predict(&self, x: &[f64]) -> Prediction {
        mean_and_variance(&self.member_outputs(x))
    }

    fn member_predictions(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.member_outputs(x))
    }
}

/// A single network behind the same normalisation as the ensemble.
#[derive(Debug, Clone)]
pub struct MlpRegressor {
    net: MlpNet,
    norm: Normalization,
}

impl MlpRegressor {
    pub fn train(
        inputs: &[Vec<f64>],
        targets: &[f64],
        bounds: (&[f64], &[f64]),
        hidden: usize,
        cfg: &LmConfig,
        seed: u64,
    ) -> Result<Self> {
        let norm = Normalization::new(bounds.0, bounds.1, targets);
        let xs: Vec<Vec<f64>> = inputs.iter().map(|x| norm.input(x)).collect();
        let ys: Vec<f64> = targets.iter().map(|y| norm.target(*y)).collect();
        let net = lm_train(&xs, &ys, hidden, cfg, &mut rng_from_seed(seed))?.net;
        Ok(Self { net, norm })
    }
}

impl Regressor for MlpRegressor {
    fn predict(&self, x: &[f64]) -> Prediction {
        Prediction {
            mean: self
                .norm
                .target_inverse(self.net.forward(&self.norm.input(x))),
            variance: 0.0,
        }
    }
}
