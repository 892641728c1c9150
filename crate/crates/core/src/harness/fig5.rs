//! Hill-climber comparison on a 1-D problem: per replicate, GP and BANN
//! surrogates are trained on the same small design, a deterministic hill
//! climber descends each surrogate's mean from fixed equidistant starts, and
//! the final points are scored on the true objective.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::sha256_hex;
use super::stats;
use crate::ann::BannConfig;
use crate::archive::fmt_f64;
use crate::benchmarks::BenchmarkProblem;
use crate::domain::{
    derive_seed, latin_or_uniform_init, rng_from_seed, InitStrategy, ParameterVector,
};
use crate::error::{Error, Result};
use crate::gp::{GpConfig, HyperSearch};
use crate::illumination::{hill_climb, Problem};
use crate::surrogate::{ModelConfig, Regressor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Config {
    pub replicates: usize,
    pub starts: usize,
    pub training_size: usize,
    pub init_strategy: InitStrategy,
    /// Initial climber step as a fraction of the domain width.
    pub climb_step: f64,
    pub climb_max_iters: usize,
    pub gp: GpConfig,
    pub bann: BannConfig,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            replicates: 100,
            starts: 10,
            training_size: 10,
            init_strategy: InitStrategy::Stratified,
            climb_step: 0.05,
            climb_max_iters: 1000,
            // Interpolating GP: noise is held at a small fixed value.
            gp: GpConfig {
                search: HyperSearch {
                    fit_noise: false,
                    ..HyperSearch::default()
                },
                ..GpConfig::default()
            },
            bann: BannConfig::default(),
        }
    }
}

impl Fig5Config {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.starts == 0 || self.training_size < 2 {
            return Err(Error::Config(
                "fig5 needs replicates >= 1, starts >= 1 and training_size >= 2".into(),
            ));
        }
        if !(self.climb_step > 0.0 && self.climb_step <= 1.0) {
            return Err(Error::Config(format!(
                "fig5.climb_step must lie in (0, 1], got {}",
                self.climb_step
            )));
        }
        Ok(())
    }

    fn models(&self) -> [ModelConfig; 2] {
        [
            ModelConfig::Gp(self.gp.clone()),
            ModelConfig::Bann(self.bann.clone()),
        ]
    }
}

/// One discovered optimum. `x_final`/`f_true` are `None` when the model
/// failed to train for that replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumRecord {
    pub model: String,
    pub replicate: usize,
    pub start_index: usize,
    pub x_final: Option<f64>,
    pub f_true: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    pub median: f64,
    pub variance: f64,
}

/// Digest of the training set a model actually received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDigest {
    pub model: String,
    pub replicate: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Result {
    pub records: Vec<OptimumRecord>,
    pub summaries: Vec<ModelSummary>,
    pub digests: Vec<SampleDigest>,
}

impl Fig5Result {
    pub fn summary(&self, model: &str) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == model)
    }
}

/// Equidistant interior starting points `lower + range·(i + ½)/n`.
pub fn equidistant_starts(problem: &dyn Problem, n: usize) -> Vec<ParameterVector> {
    let spec = problem.spec();
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            ParameterVector(
                (0..spec.dim())
                    .map(|d| spec.lower()[d] + t * spec.range(d))
                    .collect(),
            )
        })
        .collect()
}

fn training_digest(inputs: &[Vec<f64>], targets: &[f64]) -> String {
    let mut text = String::new();
    for (x, y) in inputs.iter().zip(targets) {
        for v in x {
            text.push_str(&fmt_f64(*v));
            text.push(',');
        }
        text.push_str(&fmt_f64(*y));
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

struct ReplicateOutput {
    records: Vec<OptimumRecord>,
    digests: Vec<SampleDigest>,
}

fn run_replicate(
    problem: &BenchmarkProblem,
    cfg: &Fig5Config,
    starts: &[ParameterVector],
    replicate: usize,
    seed: u64,
) -> Result<ReplicateOutput> {
    let spec = problem.spec();
    let rep_seed = derive_seed(seed, replicate as u64);
    let mut rng = rng_from_seed(rep_seed);
    let design = latin_or_uniform_init(spec, cfg.training_size, cfg.init_strategy, &mut rng)?;
    let inputs: Vec<Vec<f64>> = design.iter().map(|x| x.0.clone()).collect();
    let targets: Vec<f64> = inputs.iter().map(|x| problem.objective(x)).collect();

    let mut out = ReplicateOutput {
        records: Vec::new(),
        digests: Vec::new(),
    };
    for (m, model_cfg) in cfg.models().iter().enumerate() {
        let label = model_cfg.label().to_string();
        out.digests.push(SampleDigest {
            model: label.clone(),
            replicate,
            digest: training_digest(&inputs, &targets),
        });
        let fitted = model_cfg.fit(
            &inputs,
            &targets,
            Some((spec.lower(), spec.upper())),
            derive_seed(rep_seed, 1 + m as u64),
        );
        let model: Box<dyn Regressor> = match fitted {
            Ok(model) => model,
            Err(e) => {
                log::warn!("fig5 replicate {replicate}: {label} training failed: {e}");
                for start_index in 0..starts.len() {
                    out.records.push(OptimumRecord {
                        model: label.clone(),
                        replicate,
                        start_index,
                        x_final: None,
                        f_true: None,
                    });
                }
                continue;
            }
        };
        for (start_index, start) in starts.iter().enumerate() {
            // the climber maximises, so it climbs the negated predicted objective
            let climb = hill_climb(
                |x| -model.predict_mean(x),
                start,
                spec,
                cfg.climb_step,
                cfg.climb_max_iters,
            )?;
            out.records.push(OptimumRecord {
                model: label.clone(),
                replicate,
                start_index,
                x_final: Some(climb.x_best[0]),
                f_true: Some(problem.objective(&climb.x_best)),
            });
        }
    }
    Ok(out)
}

pub fn run_fig5(problem: &BenchmarkProblem, cfg: &Fig5Config, seed: u64) -> Result<Fig5Result> {
    cfg.validate()?;
    if problem.spec().dim() != 1 {
        return Err(Error::Config(format!(
            "fig5 needs a 1-D problem, `{}` has {} dimensions",
            problem.name(),
            problem.spec().dim()
        )));
    }
    let starts = equidistant_starts(problem, cfg.starts);
    let outputs: Vec<ReplicateOutput> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(problem, cfg, &starts, r, seed))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut digests = Vec::new();
    for o in outputs {
        records.extend(o.records);
        digests.extend(o.digests);
    }
    records.sort_by(|a, b| {
        (a.model.as_str(), a.replicate, a.start_index).cmp(&(
            b.model.as_str(),
            b.replicate,
            b.start_index,
        ))
    });
    digests.sort_by(|a, b| (a.model.as_str(), a.replicate).cmp(&(b.model.as_str(), b.replicate)));

    let summaries = cfg
        .models()
        .iter()
        .map(|m| {
            let label = m.label();
            let mine: Vec<&OptimumRecord> = records.iter().filter(|r| r.model == label).collect();
            let values: Vec<f64> = mine.iter().filter_map(|r| r.f_true).collect();
            let failed = mine.iter().filter(|r| r.f_true.is_none()).count() / cfg.starts;
            ModelSummary {
                model: label.to_string(),
                replicates_ok: cfg.replicates - failed,
                replicates_failed: failed,
                median: stats::median(&values),
                variance: stats::variance(&values),
            }
        })
        .collect();
    Ok(Fig5Result {
        records,
        summaries,
        digests,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_optima_csv<W: Write>(records: &[OptimumRecord], mut w: W) -> Result<()> {
    writeln!(w, "model,replicate,start_index,x_final,f_true")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.model,
            r.replicate,
            r.start_index,
            opt(r.x_final),
            opt(r.f_true)
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(summaries: &[ModelSummary], mut w: W) -> Result<()> {
    writeln!(w, "model,replicates_ok,replicates_failed,median,variance")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.model,
            s.replicates_ok,
            s.replicates_failed,
            fmt_f64(s.median),
            fmt_f64(s.variance)
        )?;
    }
    Ok(())
}

pub fn write_digests_csv<W: Write>(digests: &[SampleDigest], mut w: W) -> Result<()> {
    writeln!(w, "model,replicate,sample_digest")?;
    for d in digests {
        writeln!(w, "{},{},{}", d.model, d.replicate, d.digest)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_are_interior_and_equidistant() {
        let p = BenchmarkProblem::ackley(1).unwrap();
        let s = equidistant_starts(&p, 10);
        assert_eq!(s.len(), 10);
        let gap = s[1][0] - s[0][0];
        for w in s.windows(2) {
            assert!((w[1][0] - w[0][0] - gap).abs() < 1e-9);
        }
        assert!(s[0][0] > -32.768 && s[9][0] < 32.768);
    }

    #[test]
    fn small_study_shape_and_pairing() {
        let p = BenchmarkProblem::ackley(1).unwrap();
        let cfg = Fig5Config {
            replicates: 3,
            starts: 4,
            bann: BannConfig {
                members: 3,
                hidden: 3,
                ..BannConfig::default()
            },
            ..Fig5Config::default()
        };
        let r = run_fig5(&p, &cfg, 5).unwrap();
        assert_eq!(r.records.len(), 2 * 3 * 4);
        for rep in 0..3 {
            let d: Vec<&SampleDigest> = r.digests.iter().filter(|d| d.replicate == rep).collect();
            assert_eq!(d.len(), 2);
            assert_eq!(d[0].digest, d[1].digest);
        }
        assert_eq!(r, run_fig5(&p, &cfg, 5).unwrap());
    }
}
