//! `hsail` command line: one subcommand per experiment.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::bakeoff::{run_bakeoff, write_accuracy_csv, write_bakeoff_csv};
use super::config::{ExperimentKind, RunConfig};
use super::fig5::{run_fig5, write_digests_csv, write_optima_csv, write_summary_csv};
use super::fig6::{run_fig6, write_residual_segments_csv, write_segments_csv};
use super::record::{Manifest, RunRecord};
use crate::acquisition::{sail, write_rounds_csv, SailConfig};
use crate::archive::fmt_f64;
use crate::benchmarks::BenchmarkProblem;
use crate::domain::{derive_seed, Sample};
use crate::error::{Error, Result};
use crate::hierarchy::HierarchicalSurrogate;
use crate::illumination::{
    map_elites, write_history_csv, FitnessSource, IlluminationConfig, Problem,
};

#[derive(Debug, Parser)]
#[command(
    name = "hsail",
    version,
    about = "Surrogate-assisted illumination experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plain MAP-Elites on the true objective.
    MapElites(RunArgs),
    /// Surrogate-assisted illumination.
    Sail(RunArgs),
    /// Surrogate-assisted hill climbing on 1-D Ackley, GP against BANN.
    Fig5(RunArgs),
    /// Feature-space segmentation with per-segment PCA and local models.
    Fig6(RunArgs),
    /// Training/prediction cost and accuracy over a grid of sample sizes.
    Bakeoff(RunArgs),
    /// Build a hierarchical surrogate over MAP-Elites elites and write it as JSON.
    Export(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::MapElites(a) => (ExperimentKind::MapElites, a),
            Command::Sail(a) => (ExperimentKind::Sail, a),
            Command::Fig5(a) => (ExperimentKind::Fig5, a),
            Command::Fig6(a) => (ExperimentKind::Fig6, a),
            Command::Bakeoff(a) => (ExperimentKind::Bakeoff, a),
            Command::Export(a) => (ExperimentKind::Export, a),
        }
    }
}

fn default_problem(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::MapElites => "rastrigin",
        ExperimentKind::Fig5 => "ackley",
        _ => "foil-proxy",
    }
}

/// A fully resolved experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub kind: ExperimentKind,
    pub config: RunConfig,
    pub problem: BenchmarkProblem,
    pub out: PathBuf,
}

/// Resolves config, overrides and problem. Errors here are usage errors.
pub fn prepare(
    kind: ExperimentKind,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<Prepared> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(k) = cfg.experiment {
        if k != kind {
            return Err(Error::Config(format!(
                "config declares experiment `{}` but the `{}` subcommand was used",
                k.as_str(),
                kind.as_str()
            )));
        }
    }
    cfg.experiment = Some(kind);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = Some(o.to_path_buf());
    }
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    let problem = BenchmarkProblem::by_name(cfg.problem_or(default_problem(kind)))?;
    validate(kind, &cfg, &problem)?;
    Ok(Prepared {
        kind,
        config: cfg,
        problem,
        out,
    })
}

fn validate(kind: ExperimentKind, cfg: &RunConfig, problem: &BenchmarkProblem) -> Result<()> {
    match kind {
        ExperimentKind::MapElites => cfg.illumination.validate(),
        ExperimentKind::Sail => {
            cfg.illumination.validate()?;
            cfg.acquisition.validate()
        }
        ExperimentKind::Fig5 => {
            cfg.fig5.validate()?;
            if problem.spec().dim() != 1 {
                return Err(Error::Config(format!(
                    "fig5 needs a 1-D problem, `{}` has {} dimensions",
                    problem.name(),
                    problem.spec().dim()
                )));
            }
            Ok(())
        }
        ExperimentKind::Fig6 => cfg.fig6.validate(),
        ExperimentKind::Bakeoff => cfg.bakeoff.validate(),
        ExperimentKind::Export => {
            cfg.illumination.validate()?;
            cfg.export.hierarchy.validate()
        }
    }
    .map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    })
}

pub fn write_samples_csv<W: Write>(samples: &[Sample], mut w: W) -> Result<()> {
    let (d, f) = samples
        .first()
        .map_or((0, 0), |s| (s.x.len(), s.features.len()));
    let mut header: Vec<String> = (0..d).map(|i| format!("x_{i}")).collect();
    header.extend((0..f).map(|i| format!("feat_{i}")));
    header.push("fitness".into());
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let row: Vec<String> =
            s.x.iter()
                .chain(s.features.iter())
                .chain(std::iter::once(&s.fitness))
                .map(|v| fmt_f64(*v))
                .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn illumination_for(cfg: &RunConfig) -> IlluminationConfig {
    IlluminationConfig {
        seed: cfg.seed,
        ..cfg.illumination.clone()
    }
}

/// Runs a prepared experiment and writes its outputs and manifest.
pub fn execute(p: &Prepared) -> Result<Manifest> {
    let cfg = &p.config;
    let seed = cfg.seed;
    let problem = &p.problem;
    let started = Instant::now();
    let mut rec = RunRecord::create(&p.out, p.kind.as_str(), cfg, seed)?;
    match p.kind {
        ExperimentKind::MapElites => {
            let r = map_elites(
                problem,
                &illumination_for(cfg),
                FitnessSource::TrueObjective,
            )?;
            rec.write_with("archive.csv", |w| r.archive.write_csv(w))?;
            rec.write_with("history.csv", |w| write_history_csv(&r.history, w))?;
            rec.write_json(
                "summary.json",
                &serde_json::json!({
                    "problem": problem.name(),
                    "evaluations": r.evaluations,
                    "metrics": r.archive.metrics(),
                }),
            )?;
        }
        ExperimentKind::Sail => {
            let sail_cfg = SailConfig {
                illumination: illumination_for(cfg),
                acquisition: cfg.acquisition.clone(),
            };
            let r = sail(problem, &sail_cfg, seed)?;
            let rescored = r.prediction_archive.rescored(|e| problem.evaluate(&e.x));
            rec.write_with("prediction_archive.csv", |w| {
                r.prediction_archive.write_csv(w)
            })?;
            rec.write_with("prediction_archive_true.csv", |w| rescored.write_csv(w))?;
            rec.write_with("true_samples.csv", |w| {
                write_samples_csv(&r.true_samples, w)
            })?;
            rec.write_timing_with("sail_rounds.csv", |w| write_rounds_csv(&r.rounds, w))?;
            rec.write_json(
                "summary.json",
                &serde_json::json!({
                    "problem": problem.name(),
                    "surrogate": cfg.acquisition.surrogate.label(),
                    "true_evaluations": r.true_samples.len(),
                    "prediction_metrics": r.prediction_archive.metrics(),
                    "prediction_metrics_true": rescored.metrics(),
                }),
            )?;
        }
        ExperimentKind::Fig5 => {
            let r = run_fig5(problem, &cfg.fig5, seed)?;
            rec.write_with("fig5_optima.csv", |w| write_optima_csv(&r.records, w))?;
            rec.write_with("fig5_summary.csv", |w| write_summary_csv(&r.summaries, w))?;
            rec.write_with("fig5_samples.csv", |w| write_digests_csv(&r.digests, w))?;
        }
        ExperimentKind::Fig6 => {
            let r = run_fig6(problem, &cfg.fig6, seed)?;
            rec.write_with("fig6_segments.csv", |w| write_segments_csv(&r.segments, w))?;
            rec.write_with("fig6_segments_residual.csv", |w| {
                write_residual_segments_csv(&r.segments, w)
            })?;
            rec.write_json("fig6_summary.json", &r.summary)?;
        }
        ExperimentKind::Bakeoff => {
            let r = run_bakeoff(problem, &cfg.bakeoff, seed)?;
            rec.write_timing_with("bakeoff.csv", |w| write_bakeoff_csv(&r.rows, w))?;
            rec.write_with("bakeoff_accuracy.csv", |w| write_accuracy_csv(&r.rows, w))?;
            let failures: Vec<_> = r
                .rows
                .iter()
                .filter_map(|row| {
                    row.error
                        .as_ref()
                        .map(|e| serde_json::json!({"model": row.model, "n": row.n, "error": e}))
                })
                .collect();
            rec.write_json("bakeoff_failures.json", &failures)?;
            rec.write_timing(
                "bakeoff_timing.json",
                serde_json::to_string_pretty(
                    &serde_json::json!({ "gp_time_log_log_slope": r.gp_time_slope }),
                )?
                .as_bytes(),
            )?;
        }
        ExperimentKind::Export => {
            let r = map_elites(
                problem,
                &illumination_for(cfg),
                FitnessSource::TrueObjective,
            )?;
            let samples: Vec<Sample> = r
                .archive
                .elites()
                .map(|e| Sample {
                    x: e.x.clone(),
                    features: e.features.clone(),
                    fitness: e.fitness,
                })
                .collect();
            let model = HierarchicalSurrogate::build(
                &samples,
                &cfg.export.hierarchy,
                derive_seed(seed, 1),
            )?;
            rec.write_with("archive.csv", |w| r.archive.write_csv(w))?;
            rec.write(
                "hierarchy.json",
                format!("{}\n", model.to_json()?).as_bytes(),
            )?;
        }
    }
    let wall = started.elapsed().as_secs_f64();
    rec.write_timing(
        "timings.json",
        format!("{{\n  \"wall_seconds\": {}\n}}\n", fmt_f64(wall)).as_bytes(),
    )?;
    rec.finish()
}

/// Parses `argv` (program name first) and runs the experiment.
/// Returns 0 on success, 1 on usage or config errors, 2 on runtime failure.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (kind, args) = cli.command.split();
    let prepared = match prepare(kind, args.config.as_deref(), args.seed, args.out.as_deref()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match execute(&prepared) {
        Ok(m) => {
            println!(
                "{}: wrote {} files to {}",
                kind.as_str(),
                m.files.len() + m.timing_files.len() + 1,
                prepared.out.display()
            );
            0
        }
        Err(e) => {
            eprintln!("error: {} failed: {e}", kind.as_str());
            2
        }
    }
}
