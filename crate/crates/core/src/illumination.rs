//! The MAP-Elites loop and a deterministic coordinate-probe hill climber.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::archive::{fmt_f64, Archive, ArchiveMetrics, Elite};
use crate::domain::{
    latin_or_uniform_init, mutate, rng_from_seed, DomainSpec, FeatureCoordinates, InitStrategy,
    ParameterVector,
};
use crate::error::{Error, Result};

/// An expensive objective together with its feature function.
///
/// `evaluate` returns fitness in the maximisation convention; `features`
/// returns unit-cube coordinates. Both must be deterministic.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn spec(&self) -> &DomainSpec;
    fn evaluate(&self, x: &[f64]) -> f64;
    fn features(&self, x: &[f64]) -> Vec<f64>;

    /// Features checked against the unit cube.
    fn checked_features(&self, x: &[f64]) -> Result<FeatureCoordinates> {
        FeatureCoordinates::new(self.features(x)).map_err(|_| {
            Error::Domain(format!(
                "problem `{}` produced features {:?} outside [0, 1] for x = {:?}",
                self.name(),
                self.features(x),
                x
            ))
        })
    }
}

/// Fitness oracle for one illumination run.
#[derive(Clone, Copy)]
pub enum FitnessSource<'a> {
    /// The problem's own (expensive) `evaluate`.
    TrueObjective,
    /// Any cheap model taking `(x, features)`.
    Surrogate(&'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync)),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IlluminationConfig {
    pub init_count: usize,
    pub total_evaluations: usize,
    pub sigma_frac: f64,
    pub resolution: Vec<usize>,
    pub seed: u64,
    pub init_strategy: InitStrategy,
}

impl Default for IlluminationConfig {
    fn default() -> Self {
        Self {
            init_count: 100,
            total_evaluations: 10_000,
            sigma_frac: 0.1,
            resolution: vec![32, 32],
            seed: 0,
            init_strategy: InitStrategy::Stratified,
        }
    }
}

impl IlluminationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.init_count == 0 {
            return Err(Error::Argument("init_count must be at least 1".into()));
        }
        if self.init_count > self.total_evaluations {
            return Err(Error::Argument(format!(
                "init_count {} exceeds total_evaluations {}",
                self.init_count, self.total_evaluations
            )));
        }
        if !(self.sigma_frac > 0.0 && self.sigma_frac <= 1.0) {
            return Err(Error::Argument(format!(
                "sigma_frac must lie in (0, 1], got {}",
                self.sigma_frac
            )));
        }
        if self.resolution.is_empty() || self.resolution.contains(&0) {
            return Err(Error::Argument(format!(
                "resolution must be positive, got {:?}",
                self.resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryPoint {
    pub evals: usize,
    #[serde(flatten)]
    pub metrics: ArchiveMetrics,
}

#[derive(Debug, Clone)]
pub struct IlluminationResult {
    pub archive: Archive,
    pub history: Vec<HistoryPoint>,
    /// Calls made to the fitness source.
    pub evaluations: usize,
}

/// Runs MAP-Elites from a fresh initial design of `cfg.init_count` points.
pub fn map_elites(
    problem: &dyn Problem,
    cfg: &IlluminationConfig,
    source: FitnessSource<'_>,
) -> Result<IlluminationResult> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let initial =
        latin_or_uniform_init(problem.spec(), cfg.init_count, cfg.init_strategy, &mut rng)?;
    run(problem, cfg, source, initial, rng)
}

/// Runs MAP-Elites whose initial population is `initial` instead of a fresh
/// design. The initial points count against `cfg.total_evaluations`;
/// `cfg.init_count` is ignored.
pub fn map_elites_seeded(
    problem: &dyn Problem,
    cfg: &IlluminationConfig,
    source: FitnessSource<'_>,
    initial: Vec<ParameterVector>,
) -> Result<IlluminationResult> {
    let cfg = IlluminationConfig {
        init_count: initial.len().max(1),
        ..cfg.clone()
    };
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::Argument(
            "seeded illumination needs at least one point".into(),
        ));
    }
    let rng = rng_from_seed(cfg.seed);
    run(problem, &cfg, source, initial, rng)
}

fn run(
    problem: &dyn Problem,
    cfg: &IlluminationConfig,
    source: FitnessSource<'_>,
    initial: Vec<ParameterVector>,
    mut rng: crate::domain::SeededRng,
) -> Result<IlluminationResult> {
    let spec = problem.spec();
    if spec.feature_dim() != cfg.resolution.len() {
        return Err(Error::Argument(format!(
            "problem has {} features but the map has {} dimensions",
            spec.feature_dim(),
            cfg.resolution.len()
        )));
    }
    let mut archive = Archive::new(cfg.resolution.clone())?;
    let cadence = (cfg.total_evaluations / 200).max(1);
    let mut history = Vec::new();
    let mut evals = 0usize;

    let assess = |x: ParameterVector, archive: &mut Archive| -> Result<()> {
        let features = problem.checked_features(&x)?;
        let fitness = match source {
            FitnessSource::TrueObjective => problem.evaluate(&x),
            FitnessSource::Surrogate(f) => f(&x, &features),
        };
        archive.offer(Elite {
            x,
            features,
            fitness,
        })?;
        Ok(())
    };

    for x in initial {
        assess(x, &mut archive)?;
        evals += 1;
        if evals % cadence == 0 {
            history.push(HistoryPoint {
                evals,
                metrics: archive.metrics(),
            });
        }
    }
    while evals < cfg.total_evaluations {
        let parent = archive.random_elite(&mut rng)?.x.clone();
        let child = mutate(&parent, cfg.sigma_frac, spec, &mut rng)?;
        assess(child, &mut archive)?;
        evals += 1;
        if evals % cadence == 0 {
            history.push(HistoryPoint {
                evals,
                metrics: archive.metrics(),
            });
        }
    }
    if history.last().map(|h| h.evals) != Some(evals) {
        history.push(HistoryPoint {
            evals,
            metrics: archive.metrics(),
        });
    }
    Ok(IlluminationResult {
        archive,
        history,
        evaluations: evals,
    })
}

/// `evals,coverage,qd_score,best`
pub fn write_history_csv<W: Write>(history: &[HistoryPoint], mut w: W) -> Result<()> {
    writeln!(w, "evals,coverage,qd_score,best")?;
    for h in history {
        writeln!(
            w,
            "{},{},{},{}",
            h.evals,
            fmt_f64(h.metrics.coverage),
            fmt_f64(h.metrics.qd_score),
            h.metrics.best.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimbResult {
    pub x_best: ParameterVector,
    pub f_best: f64,
    pub iterations: usize,
    /// Surface value after every iteration, starting with the start point.
    pub trace: Vec<f64>,
}

/// Deterministic coordinate-probe ascent on `surface`.
///
/// Each iteration probes `x ± step·range_i` along every dimension (clamped to
/// the box) and moves to the best strictly improving probe. Without an
/// improvement the step halves. Stops once `step < 1e-6` or after
/// `max_iters` iterations. `step` is a fraction of each dimension's range.
pub fn hill_climb<F>(
    surface: F,
    start: &ParameterVector,
    spec: &DomainSpec,
    step: f64,
    max_iters: usize,
) -> Result<ClimbResult>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::Argument(format!(
            "step must be positive, got {step}"
        )));
    }
    if !spec.contains(start) {
        return Err(Error::Domain(format!(
            "start {:?} outside the domain",
            start.0
        )));
    }
    let mut x = start.0.clone();
    let mut fx = surface(&x);
    let mut step = step;
    let mut trace = vec![fx];
    let mut iterations = 0;
    while iterations < max_iters && step >= 1e-6 {
        iterations += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for d in 0..spec.dim() {
            for sign in [1.0, -1.0] {
                let mut probe = x.clone();
                probe[d] = (probe[d] + sign * step * spec.range(d))
                    .clamp(spec.lower()[d], spec.upper()[d]);
                if probe[d] == x[d] {
                    continue;
                }
                let fp = surface(&probe);
                let incumbent = best.as_ref().map_or(fx, |b| b.1);
                if fp > incumbent {
                    best = Some((probe, fp));
                }
            }
        }
        match best {
            Some((p, fp)) => {
                x = p;
                fx = fp;
            }
            None => step *= 0.5,
        }
        trace.push(fx);
    }
    Ok(ClimbResult {
        x_best: ParameterVector(x),
        f_best: fx,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Features are the coordinates themselves; fitness is constant.
    struct Flat {
        spec: DomainSpec,
        value: f64,
    }

    impl Problem for Flat {
        fn name(&self) -> &str {
            "flat"
        }
        fn spec(&self) -> &DomainSpec {
            &self.spec
        }
        fn evaluate(&self, _x: &[f64]) -> f64 {
            self.value
        }
        fn features(&self, x: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
    }

    struct Broken(DomainSpec);

    impl Problem for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn spec(&self) -> &DomainSpec {
            &self.0
        }
        fn evaluate(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn features(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0] * 2.0, 0.5]
        }
    }

    fn flat() -> Flat {
        Flat {
            spec: DomainSpec::uniform(2, 0.0, 1.0, 2).unwrap(),
            value: 1.5,
        }
    }

    #[test]
    fn budget_equal_to_init_only_places_initial_points() {
        let cfg = IlluminationConfig {
            init_count: 20,
            total_evaluations: 20,
            resolution: vec![8, 8],
            ..Default::default()
        };
        let res = map_elites(&flat(), &cfg, FitnessSource::TrueObjective).unwrap();
        assert_eq!(res.evaluations, 20);
        let init = latin_or_uniform_init(
            &flat().spec,
            20,
            InitStrategy::Stratified,
            &mut rng_from_seed(0),
        )
        .unwrap();
        for e in res.archive.elites() {
            assert!(init.contains(&e.x));
        }
    }

    #[test]
    fn constant_fitness_qd_is_coverage_times_bins() {
        let cfg = IlluminationConfig {
            init_count: 10,
            total_evaluations: 3000,
            resolution: vec![10, 10],
            seed: 4,
            ..Default::default()
        };
        let p = flat();
        let res = map_elites(&p, &cfg, FitnessSource::TrueObjective).unwrap();
        let m = res.archive.metrics();
        assert!((m.qd_score - m.coverage * 100.0 * p.value).abs() < 1e-9);
        let first = res.history.first().unwrap().metrics.coverage;
        assert!(m.coverage > first);
        for w in res.history.windows(2) {
            assert!(w[1].metrics.coverage >= w[0].metrics.coverage);
        }
    }

    #[test]
    fn out_of_range_features_name_the_vector() {
        let p = Broken(DomainSpec::uniform(2, 0.0, 1.0, 2).unwrap());
        let cfg = IlluminationConfig {
            init_count: 10,
            total_evaluations: 10,
            resolution: vec![4, 4],
            ..Default::default()
        };
        let err = map_elites(&p, &cfg, FitnessSource::TrueObjective).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Domain(_)));
        assert!(msg.contains("x = ["), "{msg}");
    }

    #[test]
    fn surrogate_source_is_used() {
        let cfg = IlluminationConfig {
            init_count: 10,
            total_evaluations: 500,
            resolution: vec![4, 4],
            ..Default::default()
        };
        let f = |x: &[f64], _: &[f64]| -x[0];
        let res = map_elites(&flat(), &cfg, FitnessSource::Surrogate(&f)).unwrap();
        for e in res.archive.elites() {
            assert_eq!(e.fitness, -e.x[0]);
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = IlluminationConfig {
            init_count: 10,
            total_evaluations: 5,
            ..Default::default()
        };
        assert!(map_elites(&flat(), &cfg, FitnessSource::TrueObjective).is_err());
    }

    #[test]
    fn hill_climb_finds_quadratic_peak() {
        let spec = DomainSpec::uniform(1, 0.0, 1.0, 1).unwrap();
        let res = hill_climb(
            |x| -(x[0] - 0.3).powi(2),
            &ParameterVector(vec![0.0]),
            &spec,
            0.1,
            10_000,
        )
        .unwrap();
        assert!((res.x_best[0] - 0.3).abs() < 1e-4, "{:?}", res.x_best);
        for w in res.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn hill_climb_at_optimum_stays_put() {
        let spec = DomainSpec::uniform(2, -1.0, 1.0, 1).unwrap();
        let start = ParameterVector(vec![0.25, -0.5]);
        let res = hill_climb(
            |x| -(x[0] - 0.25).powi(2) - (x[1] + 0.5).powi(2),
            &start,
            &spec,
            0.05,
            1000,
        )
        .unwrap();
        assert_eq!(res.x_best, start);
        assert!(hill_climb(|_| 0.0, &start, &spec, 0.0, 10).is_err());
    }
}
