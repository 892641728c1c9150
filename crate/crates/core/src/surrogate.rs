//! The common surrogate contract and the factories that build GP, ensemble,
//! and hierarchical models from configuration.

use serde::{Deserialize, Serialize};

use crate::ann::{BannConfig, BannEnsemble, LmConfig, MlpRegressor};
use crate::domain::{DomainSpec, Sample};
use crate::error::{Error, Result};
use crate::gp::{GpConfig, GpRegressor};
use crate::hierarchy::{HierarchicalSurrogate, HierarchyConfig};

/// Predictive mean and variance of a model at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// A trained regression model over plain input vectors.
pub trait Regressor: Send + Sync {
    fn predict(&self, x: &[f64]) -> Prediction;

    fn predict_mean(&self, x: &[f64]) -> f64 {
        self.predict(x).mean
    }

    /// Per-member outputs for ensemble models.
    fn member_predictions(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Predicts exactly zero with zero variance. Stands in for a node model
/// whose training failed or that has nothing to learn.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroModel;

impl Regressor for ZeroModel {
    fn predict(&self, _x: &[f64]) -> Prediction {
        Prediction {
            mean: 0.0,
            variance: 0.0,
        }
    }
}

/// A surrogate of the objective. Hierarchical models route on the feature
/// coordinates; flat models ignore them.
pub trait SurrogateModel: Send + Sync {
    fn predict(&self, x: &[f64], features: &[f64]) -> Prediction;

    fn predict_mean(&self, x: &[f64], features: &[f64]) -> f64 {
        self.predict(x, features).mean
    }
}

/// A [`Regressor`] used directly as a surrogate on the parameter vector.
pub struct FlatSurrogate(pub Box<dyn Regressor>);

impl SurrogateModel for FlatSurrogate {
    fn predict(&self, x: &[f64], _features: &[f64]) -> Prediction {
        self.0.predict(x)
    }

    fn predict_mean(&self, x: &[f64], _features: &[f64]) -> f64 {
        self.0.predict_mean(x)
    }
}

/// The model family placed at a single node (or used flat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Gp(GpConfig),
    Bann(BannConfig),
    Mlp(MlpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub lm: LmConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            lm: LmConfig::default(),
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Gp(GpConfig::default())
    }
}

impl ModelConfig {
    pub fn label(&self) -> &'static str {
        match self {
            ModelConfig::Gp(_) => "gp",
            ModelConfig::Bann(_) => "bann",
            ModelConfig::Mlp(_) => "mlp",
        }
    }

    /// Trains on `(inputs, targets)`. Networks scale inputs from `bounds`,
    /// or from the data's own range when `bounds` is `None`.
    pub fn fit(
        &self,
        inputs: &[Vec<f64>],
        targets: &[f64],
        bounds: Option<(&[f64], &[f64])>,
        seed: u64,
    ) -> Result<Box<dyn Regressor>> {
        if inputs.is_empty() {
            return Err(Error::Training("no training samples".into()));
        }
        let data_bounds;
        let bounds = match bounds {
            Some(b) => b,
            None => {
                data_bounds = data_range(inputs);
                (data_bounds.0.as_slice(), data_bounds.1.as_slice())
            }
        };
        Ok(match self {
            ModelConfig::Gp(cfg) => Box::new(GpRegressor::train(inputs, targets, cfg, seed)?),
            ModelConfig::Bann(cfg) => {
                Box::new(BannEnsemble::train(inputs, targets, bounds, cfg, seed)?)
            }
            ModelConfig::Mlp(cfg) => Box::new(MlpRegressor::train(
                inputs, targets, bounds, cfg.hidden, &cfg.lm, seed,
            )?),
        })
    }
}

pub(crate) fn data_range(inputs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = inputs.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in inputs {
        for k in 0..d {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    (lo, hi)
}

/// Which surrogate SAIL and the harness train on true samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurrogateConfig {
    Gp(GpConfig),
    Bann(BannConfig),
    Hierarchical(HierarchyConfig),
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig::Gp(GpConfig::default())
    }
}

impl SurrogateConfig {
    pub fn label(&self) -> &'static str {
        match self {
            SurrogateConfig::Gp(_) => "gp",
            SurrogateConfig::Bann(_) => "bann",
            SurrogateConfig::Hierarchical(_) => "hierarchical",
        }
    }

    pub fn train(
        &self,
        samples: &[Sample],
        spec: &DomainSpec,
        seed: u64,
    ) -> Result<Box<dyn SurrogateModel>> {
        let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.x.0.clone()).collect();
        let targets: Vec<f64> = samples.iter().map(|s| s.fitness).collect();
        let bounds = Some((spec.lower(), spec.upper()));
        Ok(match self {
            SurrogateConfig::Gp(cfg) => Box::new(FlatSurrogate(
                ModelConfig::Gp(cfg.clone()).fit(&inputs, &targets, bounds, seed)?,
            )),
            SurrogateConfig::Bann(cfg) => Box::new(FlatSurrogate(
                ModelConfig::Bann(cfg.clone()).fit(&inputs, &targets, bounds, seed)?,
            )),
            SurrogateConfig::Hierarchical(cfg) => {
                Box::new(HierarchicalSurrogate::build(samples, cfg, seed)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configs_parse_from_toml() {
        let cfg: SurrogateConfig = toml::from_str(
            r#"
            kind = "bann"
            members = 4
            [lm]
            max_iterations = 20
            "#,
        )
        .unwrap();
        match cfg {
            SurrogateConfig::Bann(b) => {
                assert_eq!(b.members, 4);
                assert_eq!(b.hidden, 10);
                assert_eq!(b.lm.max_iterations, 20);
            }
            other => panic!("parsed {other:?}"),
        }
        let bad = toml::from_str::<SurrogateConfig>("kind = \"gp\"\nfitt = true\n");
        assert!(bad.is_err());
    }

    #[test]
    fn zero_model_predicts_zero() {
        let p = ZeroModel.predict(&[1.0, 2.0]);
        assert_eq!((p.mean, p.variance), (0.0, 0.0));
    }
}
