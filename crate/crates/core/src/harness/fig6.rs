//! Segmentation study: elites from plain MAP-Elites are clustered in
//! feature space; each segment gets a PCA-reduced local model, which is
//! compared on a holdout split against one flat model trained on all
//! training samples.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::fmt_f64;
use crate::domain::{derive_seed, rng_from_seed, Sample};
use crate::error::{Error, Result};
use crate::hierarchy::kmeans::kmeans;
use crate::hierarchy::pca::{pca_fit, DEFAULT_CUTOFF};
use crate::illumination::{map_elites, FitnessSource, IlluminationConfig, Problem};
use crate::surrogate::{ModelConfig, Regressor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig6Config {
    /// MAP-Elites run that produces the elite sample set.
    pub elites: IlluminationConfig,
    pub segments: usize,
    pub kmeans_restarts: usize,
    pub pca_cutoff: f64,
    pub holdout_fraction: f64,
    /// Segments with fewer training samples get no local model.
    pub min_segment_train: usize,
    pub local_model: ModelConfig,
    pub flat_model: ModelConfig,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Self {
            // a fine map gives segments of ~200 elites each
            elites: IlluminationConfig {
                init_count: 200,
                total_evaluations: 150_000,
                sigma_frac: 0.05,
                resolution: vec![64, 64],
                ..IlluminationConfig::default()
            },
            segments: 16,
            kmeans_restarts: 10,
            pca_cutoff: DEFAULT_CUTOFF,
            holdout_fraction: 0.2,
            min_segment_train: 5,
            local_model: ModelConfig::default(),
            flat_model: ModelConfig::default(),
        }
    }
}

impl Fig6Config {
    pub fn validate(&self) -> Result<()> {
        self.elites.validate()?;
        if self.segments == 0 {
            return Err(Error::Config("fig6.segments must be at least 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "fig6.holdout_fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if !(self.pca_cutoff >= 0.0 && self.pca_cutoff < 1.0) {
            return Err(Error::Config(format!(
                "fig6.pca_cutoff must lie in [0, 1), got {}",
                self.pca_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: usize,
    /// All samples assigned to the segment (train and holdout).
    pub size: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub retained_dims: usize,
    /// `None` when the segment was too small for a local model.
    pub local_mse: Option<f64>,
    /// `None` when the segment has no holdout samples.
    pub flat_mse: Option<f64>,
    /// Local model trained on the flat model's residuals; predicts
    /// `flat(x) + local(z)`.
    pub residual_mse: Option<f64>,
}

impl SegmentReport {
    pub fn flagged(&self) -> bool {
        self.local_mse.is_none() || self.flat_mse.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Summary {
    pub elites: usize,
    pub input_dim: usize,
    pub segments: usize,
    pub flagged_segments: usize,
    /// Fraction of all segments retaining fewer than `input_dim` dimensions.
    pub reduced_fraction: f64,
    /// Fraction of all segments where the local model's holdout MSE is
    /// strictly below the flat model's.
    pub local_better_fraction: f64,
    /// The same fraction for the residual-trained local models.
    pub residual_better_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Result {
    pub segments: Vec<SegmentReport>,
    pub summary: Fig6Summary,
}

fn mse(model: &dyn Regressor, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    inputs
        .iter()
        .zip(targets)
        .map(|(x, y)| (model.predict_mean(x) - y).powi(2))
        .sum::<f64>()
        / inputs.len() as f64
}

pub fn run_fig6(problem: &dyn Problem, cfg: &Fig6Config, seed: u64) -> Result<Fig6Result> {
    cfg.validate()?;
    let spec = problem.spec();
    let illum = IlluminationConfig {
        seed: derive_seed(seed, 0),
        ..cfg.elites.clone()
    };
    let archive = map_elites(problem, &illum, FitnessSource::TrueObjective)?.archive;
    let samples: Vec<Sample> = archive
        .elites()
        .map(|e| Sample {
            x: e.x.clone(),
            features: e.features.clone(),
            fitness: e.fitness,
        })
        .collect();
    segment_study(&samples, spec.dim(), cfg, seed)
}

/// The study on a given sample set.
pub fn segment_study(
    samples: &[Sample],
    input_dim: usize,
    cfg: &Fig6Config,
    seed: u64,
) -> Result<Fig6Result> {
    cfg.validate()?;
    if samples.len() < cfg.segments {
        return Err(Error::Argument(format!(
            "{} samples cannot form {} segments",
            samples.len(),
            cfg.segments
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, 1)));
    let n_test = ((samples.len() as f64) * cfg.holdout_fraction).round() as usize;
    let mut is_test = vec![false; samples.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }

    let features: Vec<Vec<f64>> = samples.iter().map(|s| s.features.0.clone()).collect();
    let clusters = kmeans(
        &features,
        cfg.segments,
        cfg.kmeans_restarts,
        &mut rng_from_seed(derive_seed(seed, 2)),
    )?;

    let (train_x, train_y): (Vec<Vec<f64>>, Vec<f64>) = (0..samples.len())
        .filter(|&i| !is_test[i])
        .map(|i| (samples[i].x.0.clone(), samples[i].fitness))
        .unzip();
    let flat = cfg
        .flat_model
        .fit(&train_x, &train_y, None, derive_seed(seed, 3))?;

    let segments: Vec<SegmentReport> = (0..cfg.segments)
        .into_par_iter()
        .map(|s| {
            let members: Vec<usize> = (0..samples.len())
                .filter(|&i| clusters.assignment[i] == s)
                .collect();
            let split = |test: bool| -> (Vec<Vec<f64>>, Vec<f64>) {
                members
                    .iter()
                    .filter(|&&i| is_test[i] == test)
                    .map(|&i| (samples[i].x.0.clone(), samples[i].fitness))
                    .unzip()
            };
            let (tr_x, tr_y) = split(false);
            let (te_x, te_y) = split(true);
            let fit_on = if tr_x.is_empty() { &te_x } else { &tr_x };
            let pca = pca_fit(fit_on, cfg.pca_cutoff)?;
            let flat_mse = (!te_x.is_empty()).then(|| mse(flat.as_ref(), &te_x, &te_y));
            let local_ok = tr_x.len() >= cfg.min_segment_train && !te_x.is_empty();
            let z: Vec<Vec<f64>> = tr_x.iter().map(|x| pca.project(x)).collect();
            let zt: Vec<Vec<f64>> = te_x.iter().map(|x| pca.project(x)).collect();
            let local_mse = if local_ok {
                match cfg
                    .local_model
                    .fit(&z, &tr_y, None, derive_seed(seed, 100 + s as u64))
                {
                    Ok(local) => Some(mse(local.as_ref(), &zt, &te_y)),
                    Err(e) => {
                        log::warn!("fig6 segment {s}: local model failed: {e}");
                        None
                    }
                }
            } else {
                None
            };
            let residual_mse = if local_ok {
                let r: Vec<f64> = tr_x
                    .iter()
                    .zip(&tr_y)
                    .map(|(x, y)| y - flat.predict_mean(x))
                    .collect();
                match cfg
                    .local_model
                    .fit(&z, &r, None, derive_seed(seed, 200 + s as u64))
                {
                    Ok(local) => {
                        let err = te_x
                            .iter()
                            .zip(&zt)
                            .zip(&te_y)
                            .map(|((x, z), y)| {
                                (flat.predict_mean(x) + local.predict_mean(z) - y).powi(2)
                            })
                            .sum::<f64>();
                        Some(err / te_x.len() as f64)
                    }
                    Err(e) => {
                        log::warn!("fig6 segment {s}: residual model failed: {e}");
                        None
                    }
                }
            } else {
                None
            };
            Ok(SegmentReport {
                segment: s,
                size: members.len(),
                train_size: tr_x.len(),
                test_size: te_x.len(),
                retained_dims: pca.retained(),
                local_mse,
                flat_mse,
                residual_mse,
            })
        })
        .collect::<Result<_>>()?;

    let n = segments.len() as f64;
    let beats = |local: fn(&SegmentReport) -> Option<f64>| {
        segments
            .iter()
            .filter(|s| matches!((local(s), s.flat_mse), (Some(l), Some(f)) if l < f))
            .count() as f64
            / n
    };
    let summary = Fig6Summary {
        elites: samples.len(),
        input_dim,
        segments: segments.len(),
        flagged_segments: segments.iter().filter(|s| s.flagged()).count(),
        reduced_fraction: segments
            .iter()
            .filter(|s| s.retained_dims < input_dim)
            .count() as f64
            / n,
        local_better_fraction: beats(|s| s.local_mse),
        residual_better_fraction: beats(|s| s.residual_mse),
    };
    Ok(Fig6Result { segments, summary })
}

/// `segment,size,retained_dims,local_mse,flat_mse` with raw-target local models.
pub fn write_segments_csv<W: Write>(segments: &[SegmentReport], w: W) -> Result<()> {
    write_table(segments, |s| s.local_mse, w)
}

/// Same schema, with `local_mse` taken from the residual-trained models.
pub fn write_residual_segments_csv<W: Write>(segments: &[SegmentReport], w: W) -> Result<()> {
    write_table(segments, |s| s.residual_mse, w)
}

fn write_table<W: Write>(
    segments: &[SegmentReport],
    local: fn(&SegmentReport) -> Option<f64>,
    mut w: W,
) -> Result<()> {
    writeln!(w, "segment,size,retained_dims,local_mse,flat_mse")?;
    for s in segments {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.segment,
            s.size,
            s.retained_dims,
            local(s).map(fmt_f64).unwrap_or_default(),
            s.flat_mse.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureCoordinates, ParameterVector};

    #[test]
    fn constant_segment_keeps_one_dimension() {
        // two well separated feature clusters, one with constant parameters
        let mut samples = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0;
            samples.push(Sample {
                x: ParameterVector(vec![0.3, 0.3, 0.3]),
                features: FeatureCoordinates(vec![0.05 + 0.01 * t, 0.05]),
                fitness: 1.0,
            });
            samples.push(Sample {
                x: ParameterVector(vec![t, 1.0 - t, t * t]),
                features: FeatureCoordinates(vec![0.9 + 0.01 * t, 0.9]),
                fitness: t,
            });
        }
        let cfg = Fig6Config {
            segments: 2,
            ..Fig6Config::default()
        };
        let r = segment_study(&samples, 3, &cfg, 0).unwrap();
        let constant = r.segments.iter().find(|s| s.retained_dims == 1).unwrap();
        assert_eq!(constant.size, 20);
        assert_eq!(r.summary.segments, 2);
    }
}
