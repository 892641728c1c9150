//! Surrogate bake-off over a grid of training-set sizes: training time,
//! per-prediction time, holdout RMSE and rank correlation with the truth.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use crate::ann::BannConfig;
use crate::archive::fmt_f64;
use crate::domain::{derive_seed, latin_or_uniform_init, rng_from_seed, InitStrategy, Sample};
use crate::error::{Error, Result};
use crate::gp::GpConfig;
use crate::hierarchy::HierarchyConfig;
use crate::illumination::Problem;
use crate::surrogate::{SurrogateConfig, SurrogateModel};

pub const ORACLE: &str = "oracle";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BakeoffConfig {
    pub sizes: Vec<usize>,
    pub test_size: usize,
    /// Predictions timed per cell (cycling over the holdout set).
    pub timing_predictions: usize,
    pub gp: Option<GpConfig>,
    pub bann: Option<BannConfig>,
    pub hierarchical: Option<HierarchyConfig>,
}

impl Default for BakeoffConfig {
    fn default() -> Self {
        Self {
            sizes: vec![50, 100, 200, 400, 800],
            test_size: 200,
            timing_predictions: 1000,
            // hyperparameters fitted on every point, so timings show the full cost
            gp: Some(GpConfig {
                max_fit_samples: usize::MAX,
                ..GpConfig::default()
            }),
            bann: Some(BannConfig::default()),
            hierarchical: Some(HierarchyConfig::default()),
        }
    }
}

impl BakeoffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::Config(
                "bakeoff.sizes must be non-empty with every n >= 2".into(),
            ));
        }
        if self.test_size < 2 {
            return Err(Error::Config("bakeoff.test_size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn models(&self) -> Vec<SurrogateConfig> {
        let mut out = Vec::new();
        if let Some(c) = &self.gp {
            out.push(SurrogateConfig::Gp(c.clone()));
        }
        if let Some(c) = &self.bann {
            out.push(SurrogateConfig::Bann(c.clone()));
        }
        if let Some(c) = &self.hierarchical {
            out.push(SurrogateConfig::Hierarchical(c.clone()));
        }
        out
    }
}

/// One grid cell. Metrics are `None` when training failed (`error` set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BakeoffRow {
    pub model: String,
    pub n: usize,
    pub train_s: Option<f64>,
    pub predict_us: Option<f64>,
    pub rmse: Option<f64>,
    pub spearman: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BakeoffResult {
    pub rows: Vec<BakeoffRow>,
    /// Log-log slope of GP training seconds against n (n >= 100), if the
    /// GP was part of the grid with at least two such sizes.
    pub gp_time_slope: Option<f64>,
}

fn design(problem: &dyn Problem, n: usize, seed: u64) -> Result<Vec<Sample>> {
    let mut rng = rng_from_seed(seed);
    latin_or_uniform_init(problem.spec(), n, InitStrategy::Stratified, &mut rng)?
        .into_iter()
        .map(|x| {
            let features = problem.checked_features(&x)?;
            let fitness = problem.evaluate(&x);
            Ok(Sample {
                x,
                features,
                fitness,
            })
        })
        .collect()
}

fn score(
    predict: &dyn Fn(&[f64], &[f64]) -> f64,
    test: &[Sample],
    timing_predictions: usize,
) -> (f64, f64, f64) {
    let preds: Vec<f64> = test.iter().map(|s| predict(&s.x, &s.features)).collect();
    let truth: Vec<f64> = test.iter().map(|s| s.fitness).collect();
    let rmse = (preds
        .iter()
        .zip(&truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / test.len() as f64)
        .sqrt();
    let rho = stats::spearman(&preds, &truth);
    let reps = timing_predictions.max(1);
    let start = Instant::now();
    let mut sink = 0.0;
    for i in 0..reps {
        let s = &test[i % test.len()];
        sink += predict(&s.x, &s.features);
    }
    std::hint::black_box(sink);
    let us = start.elapsed().as_secs_f64() * 1e6 / reps as f64;
    (us, rmse, rho)
}

pub fn run_bakeoff(problem: &dyn Problem, cfg: &BakeoffConfig, seed: u64) -> Result<BakeoffResult> {
    cfg.validate()?;
    let test = design(problem, cfg.test_size, derive_seed(seed, 0))?;
    let spec = problem.spec();
    let models = cfg.models();
    let cells: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(si, _)| (0..=models.len()).map(move |m| (si, m)))
        .collect();

    let mut rows: Vec<BakeoffRow> = cells
        .par_iter()
        .map(|&(si, m)| -> Result<BakeoffRow> {
            let n = cfg.sizes[si];
            let train = design(problem, n, derive_seed(seed, 1 + si as u64))?;
            if m == models.len() {
                let truth = |x: &[f64], _: &[f64]| problem.evaluate(x);
                let (us, rmse, rho) = score(&truth, &test, cfg.timing_predictions);
                return Ok(BakeoffRow {
                    model: ORACLE.into(),
                    n,
                    train_s: Some(0.0),
                    predict_us: Some(us),
                    rmse: Some(rmse),
                    spearman: Some(rho),
                    error: None,
                });
            }
            let model_cfg = &models[m];
            let start = Instant::now();
            let trained: Result<Box<dyn SurrogateModel>> =
                model_cfg.train(&train, spec, derive_seed(seed, 1000 + si as u64));
            let train_s = start.elapsed().as_secs_f64();
            Ok(match trained {
                Ok(model) => {
                    let mean = |x: &[f64], f: &[f64]| model.predict_mean(x, f);
                    let (us, rmse, rho) = score(&mean, &test, cfg.timing_predictions);
                    BakeoffRow {
                        model: model_cfg.label().into(),
                        n,
                        train_s: Some(train_s),
                        predict_us: Some(us),
                        rmse: Some(rmse),
                        spearman: Some(rho),
                        error: None,
                    }
                }
                Err(e) => BakeoffRow {
                    model: model_cfg.label().into(),
                    n,
                    train_s: None,
                    predict_us: None,
                    rmse: None,
                    spearman: None,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| (a.model.as_str(), a.n).cmp(&(b.model.as_str(), b.n)));

    let (ns, ts): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.model == "gp" && r.n >= 100)
        .filter_map(|r| r.train_s.filter(|t| *t > 0.0).map(|t| (r.n as f64, t)))
        .unzip();
    let gp_time_slope = (ns.len() >= 2).then(|| stats::log_log_slope(&ns, &ts));
    Ok(BakeoffResult {
        rows,
        gp_time_slope,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "failed".into())
}

/// Full table including timings.
pub fn write_bakeoff_csv<W: Write>(rows: &[BakeoffRow], mut w: W) -> Result<()> {
    writeln!(w, "model,n,train_s,predict_us,rmse,spearman")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.model,
            r.n,
            cell(r.train_s),
            cell(r.predict_us),
            cell(r.rmse),
            cell(r.spearman)
        )?;
    }
    Ok(())
}

/// The timing-free columns, reproducible byte for byte.
pub fn write_accuracy_csv<W: Write>(rows: &[BakeoffRow], mut w: W) -> Result<()> {
    writeln!(w, "model,n,rmse,spearman")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.model,
            r.n,
            cell(r.rmse),
            cell(r.spearman)
        )?;
    }
    Ok(())
}
