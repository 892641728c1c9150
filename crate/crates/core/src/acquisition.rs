//! Upper-confidence-bound acquisition and the SAIL outer loop.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::archive::{fmt_f64, Archive, Elite};
use crate::domain::{
    derive_seed, latin_or_uniform_init, mutate, rng_from_seed, ParameterVector, Sample,
};
use crate::error::{Error, Result};
use crate::illumination::{map_elites_seeded, FitnessSource, IlluminationConfig, Problem};
use crate::surrogate::{SurrogateConfig, SurrogateModel};

/// `mean + kappa·√variance`
pub fn ucb(mean: f64, variance: f64, kappa: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::Argument(format!(
            "variance must be non-negative, got {variance}"
        )));
    }
    Ok(mean + kappa * variance.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub kappa: f64,
    /// New true evaluations per round.
    pub batch_size: usize,
    pub rounds: usize,
    pub surrogate: SurrogateConfig,
    /// Surrogate evaluations for the final prediction map; `None` reuses
    /// the per-round illumination budget.
    pub prediction_evaluations: Option<usize>,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            batch_size: 10,
            rounds: 10,
            surrogate: SurrogateConfig::default(),
            prediction_evaluations: None,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return Err(Error::Argument(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// SAIL settings. `illumination.init_count` is the number of initial true
/// evaluations; `illumination.total_evaluations` is the surrogate budget of
/// each inner MAP-Elites run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SailConfig {
    pub illumination: IlluminationConfig,
    pub acquisition: AcquisitionConfig,
}

impl SailConfig {
    /// `init_count + rounds·batch_size`
    pub fn true_budget(&self) -> usize {
        self.illumination.init_count + self.acquisition.rounds * self.acquisition.batch_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub true_evals: usize,
    pub acq_coverage: f64,
    pub pred_qd_score_surrogate: f64,
    pub surrogate_train_seconds: f64,
}

pub struct SailResult {
    pub prediction_archive: Archive,
    pub true_samples: Vec<Sample>,
    pub rounds: Vec<RoundRecord>,
    pub final_surrogate: Box<dyn SurrogateModel>,
}

/// Illuminates `ucb(model)` starting from `seeds`.
pub fn acquisition_archive(
    problem: &dyn Problem,
    model: &dyn SurrogateModel,
    kappa: f64,
    cfg: &IlluminationConfig,
    seeds: Vec<ParameterVector>,
) -> Result<Archive> {
    let fitness = |x: &[f64], f: &[f64]| {
        if kappa == 0.0 {
            model.predict_mean(x, f)
        } else {
            let p = model.predict(x, f);
            p.mean + kappa * p.variance.max(0.0).sqrt()
        }
    };
    Ok(map_elites_seeded(problem, cfg, FitnessSource::Surrogate(&fitness), seeds)?.archive)
}

/// Elites of an archive built from the true samples, at most `cap` of them.
fn seed_population(
    samples: &[Sample],
    resolution: &[usize],
    cap: usize,
) -> Result<Vec<ParameterVector>> {
    let mut archive = Archive::new(resolution.to_vec())?;
    for s in samples {
        archive.offer(Elite {
            x: s.x.clone(),
            features: s.features.clone(),
            fitness: s.fitness,
        })?;
    }
    Ok(archive
        .elites()
        .take(cap.max(1))
        .map(|e| e.x.clone())
        .collect())
}

fn evaluate(problem: &dyn Problem, x: ParameterVector) -> Result<Sample> {
    let features = problem.checked_features(&x)?;
    let fitness = problem.evaluate(&x);
    Ok(Sample {
        x,
        features,
        fitness,
    })
}

/// Surrogate-assisted illumination.
///
/// Makes exactly `init_count + rounds·batch_size` calls to
/// `problem.evaluate`.
pub fn sail(problem: &dyn Problem, cfg: &SailConfig, seed: u64) -> Result<SailResult> {
    cfg.illumination.validate()?;
    cfg.acquisition.validate()?;
    let acq = &cfg.acquisition;
    let spec = problem.spec();
    let mut rng = rng_from_seed(seed);

    let init = latin_or_uniform_init(
        spec,
        cfg.illumination.init_count,
        cfg.illumination.init_strategy,
        &mut rng,
    )?;
    let mut samples: Vec<Sample> = init
        .into_iter()
        .map(|x| evaluate(problem, x))
        .collect::<Result<_>>()?;

    let inner_budget = cfg.illumination.total_evaluations;
    let seed_cap = inner_budget / 2;
    let mut rounds = Vec::with_capacity(acq.rounds);

    for round in 0..acq.rounds {
        let started = Instant::now();
        let model = acq
            .surrogate
            .train(&samples, spec, derive_seed(seed, 2 * round as u64))
            .map_err(|e| {
                Error::Training(format!(
                    "SAIL round {round}: {} surrogate failed: {e}",
                    acq.surrogate.label()
                ))
            })?;
        let train_seconds = started.elapsed().as_secs_f64();

        let inner = IlluminationConfig {
            seed: derive_seed(seed, 2 * round as u64 + 1),
            ..cfg.illumination.clone()
        };
        let seeds = seed_population(&samples, &inner.resolution, seed_cap)?;
        let archive = acquisition_archive(problem, model.as_ref(), acq.kappa, &inner, seeds)?;

        let pred_qd: f64 = archive
            .elites()
            .map(|e| model.predict_mean(&e.x, &e.features))
            .sum();

        // uniform over occupied bins, preferring elites not yet evaluated
        let (fresh, stale): (Vec<&Elite>, Vec<&Elite>) = archive
            .elites()
            .partition(|e| !samples.iter().any(|s| s.x == e.x));
        let mut batch: Vec<ParameterVector> = Vec::with_capacity(acq.batch_size);
        for pool in [&fresh, &stale] {
            let want = (acq.batch_size - batch.len()).min(pool.len());
            for i in sample_indices(&mut rng, pool.len(), want) {
                batch.push(pool[i].x.clone());
            }
        }
        while batch.len() < acq.batch_size {
            // fewer occupied bins than the batch: perturb what was chosen
            let parent = batch[batch.len() % batch.len().max(1)].clone();
            batch.push(mutate(
                &parent,
                cfg.illumination.sigma_frac,
                spec,
                &mut rng,
            )?);
        }
        for x in batch {
            samples.push(evaluate(problem, x)?);
        }

        rounds.push(RoundRecord {
            round,
            true_evals: samples.len(),
            acq_coverage: archive.metrics().coverage,
            pred_qd_score_surrogate: pred_qd,
            surrogate_train_seconds: train_seconds,
        });
    }

    let final_surrogate = acq
        .surrogate
        .train(&samples, spec, derive_seed(seed, 2 * acq.rounds as u64))
        .map_err(|e| {
            Error::Training(format!(
                "SAIL final model: {} surrogate failed: {e}",
                acq.surrogate.label()
            ))
        })?;
    let prediction_cfg = IlluminationConfig {
        seed: derive_seed(seed, 2 * acq.rounds as u64 + 1),
        total_evaluations: acq.prediction_evaluations.unwrap_or(inner_budget),
        ..cfg.illumination.clone()
    };
    let seeds = seed_population(
        &samples,
        &prediction_cfg.resolution,
        prediction_cfg.total_evaluations / 2,
    )?;
    let prediction_archive = acquisition_archive(
        problem,
        final_surrogate.as_ref(),
        0.0,
        &prediction_cfg,
        seeds,
    )?;

    Ok(SailResult {
        prediction_archive,
        true_samples: samples,
        rounds,
        final_surrogate,
    })
}

/// `round,true_evals,acq_coverage,pred_qd_score_surrogate,surrogate_train_seconds`
pub fn write_rounds_csv<W: Write>(rounds: &[RoundRecord], mut w: W) -> Result<()> {
    writeln!(
        w,
        "round,true_evals,acq_coverage,pred_qd_score_surrogate,surrogate_train_seconds"
    )?;
    for r in rounds {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.round,
            r.true_evals,
            fmt_f64(r.acq_coverage),
            fmt_f64(r.pred_qd_score_surrogate),
            fmt_f64(r.surrogate_train_seconds)
        )?;
    }
    Ok(())
}
