//! Benchmark objectives and the problems built on them.
//!
//! Objectives are minimised; the [`BenchmarkProblem`] adapter turns them into
//! maximised fitness `ceiling − f(x)`, where `ceiling` bounds `f` over the
//! domain. That keeps every fitness non-negative so QD scores grow with
//! coverage.

use std::f64::consts::{E, PI};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::illumination::Problem;

pub const ACKLEY_BOUND: f64 = 32.768;
pub const RASTRIGIN_BOUND: f64 = 5.12;
pub const FOIL_DIM: usize = 15;
const FOIL_LATENT: usize = 4;

/// Ackley with constants `a`, `b`, `c`.
pub fn ackley_with(x: &[f64], a: f64, b: f64, c: f64) -> f64 {
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / n;
    // grouped so that both pairs cancel exactly at the origin
    a * (1.0 - (-b * sq.sqrt()).exp()) + (E - cs.exp())
}

/// Ackley with `a = 20`, `b = 0.2`, `c = 2π`.
pub fn ackley(x: &[f64]) -> f64 {
    ackley_with(x, 20.0, 0.2, 2.0 * PI)
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// First `k` coordinates mapped from the box to `[0, 1]`.
pub fn leading_coordinates(x: &[f64], spec: &DomainSpec, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| ((x[i] - spec.lower()[i]) / spec.range(i)).clamp(0.0, 1.0))
        .collect()
}

/// Orthonormal 4×15 latent map: the first four DCT-II basis rows.
fn foil_latent_row(j: usize) -> [f64; FOIL_DIM] {
    let n = FOIL_DIM as f64;
    let scale = if j == 0 {
        (1.0 / n).sqrt()
    } else {
        (2.0 / n).sqrt()
    };
    let mut row = [0.0; FOIL_DIM];
    for (i, r) in row.iter_mut().enumerate() {
        *r = scale * (PI * j as f64 * (i as f64 + 0.5) / n).cos();
    }
    row
}

/// The latent map as rows.
pub fn foil_latent_map() -> Vec<[f64; FOIL_DIM]> {
    (0..FOIL_LATENT).map(foil_latent_row).collect()
}

const FOIL_TARGET: [f64; FOIL_LATENT] = [0.3, -0.4, 0.25, -0.2];
const FOIL_WEIGHT: [f64; FOIL_LATENT] = [1.0, 2.0, 1.5, 3.0];
/// Upper bound of [`foil_proxy`] drag over the unit box.
pub const FOIL_DRAG_CEILING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoilOutput {
    pub drag: f64,
    /// `(area-like, camber-like)`, both in `[0, 1]`.
    pub features: [f64; 2],
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Synthetic stand-in for a 15-parameter airfoil drag evaluation.
///
/// Parameters 0..8 act as upper-surface and 8..15 as lower-surface control
/// heights. Drag depends on `x` only through a 4-dimensional latent
/// projection `z = A·(x − ½)`: a weighted quadratic bowl around a fixed
/// target, a shallow cosine ripple, and a small `z₀·z₁` coupling. Features
/// are smooth functionals of the mean surface heights.
pub fn foil_proxy(x: &[f64]) -> Result<FoilOutput> {
    if x.len() != FOIL_DIM {
        return Err(Error::Domain(format!(
            "foil proxy takes {FOIL_DIM} parameters, got {}",
            x.len()
        )));
    }
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Domain(format!(
            "foil parameter {i} = {v} outside [0, 1]"
        )));
    }
    let mut z = [0.0; FOIL_LATENT];
    for (j, zj) in z.iter_mut().enumerate() {
        let row = foil_latent_row(j);
        *zj = row.iter().zip(x).map(|(a, v)| a * (v - 0.5)).sum();
    }
    let mut drag = 0.01;
    for j in 0..FOIL_LATENT {
        let dz = z[j] - FOIL_TARGET[j];
        drag += 0.02 * FOIL_WEIGHT[j] * dz * dz;
        drag += 0.004 * (1.0 - (3.0 * PI * dz).cos());
    }
    drag += 0.005 * (z[0] * z[1]).powi(2);

    let upper = x[..8].iter().sum::<f64>() / 8.0;
    let lower = x[8..].iter().sum::<f64>() / 7.0;
    let area = smoothstep(0.5 * (upper + lower));
    let camber = smoothstep(0.5 * (upper - lower + 1.0));
    Ok(FoilOutput {
        drag,
        features: [area, camber],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Ackley,
    Rastrigin,
    FoilProxy,
}

/// A named objective on a box, with its feature function and fitness adapter.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    name: String,
    spec: DomainSpec,
    objective: Objective,
    ceiling: f64,
}

impl BenchmarkProblem {
    pub fn ackley(dim: usize) -> Result<Self> {
        let spec = DomainSpec::uniform(dim, -ACKLEY_BOUND, ACKLEY_BOUND, dim.min(2))?;
        Ok(Self {
            name: format!("ackley-{dim}d"),
            spec,
            objective: Objective::Ackley,
            ceiling: 20.0 + E,
        })
    }

    pub fn rastrigin(dim: usize) -> Result<Self> {
        let spec = DomainSpec::uniform(dim, -RASTRIGIN_BOUND, RASTRIGIN_BOUND, dim.min(2))?;
        Ok(Self {
            name: format!("rastrigin-{dim}d"),
            spec,
            objective: Objective::Rastrigin,
            ceiling: dim as f64 * (20.0 + RASTRIGIN_BOUND * RASTRIGIN_BOUND),
        })
    }

    pub fn foil_proxy() -> Self {
        Self {
            name: "foil-proxy".into(),
            spec: DomainSpec::uniform(FOIL_DIM, 0.0, 1.0, 2).expect("valid unit box"),
            objective: Objective::FoilProxy,
            ceiling: FOIL_DRAG_CEILING,
        }
    }

    /// Looks a problem up by name: `ackley-<d>d`, `rastrigin-<d>d`, or
    /// `foil-proxy`. Bare `ackley` / `rastrigin` mean 1 and 2 dimensions.
    pub fn by_name(name: &str) -> Result<Self> {
        let parse_dim = |rest: &str| -> Result<usize> {
            rest.strip_suffix('d')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|d| *d >= 1)
                .ok_or_else(|| Error::UnknownProblem(name.to_string()))
        };
        match name {
            "foil-proxy" | "foil_proxy" => Ok(Self::foil_proxy()),
            "ackley" => Self::ackley(1),
            "rastrigin" => Self::rastrigin(2),
            _ => {
                if let Some(rest) = name.strip_prefix("ackley-") {
                    Self::ackley(parse_dim(rest)?)
                } else if let Some(rest) = name.strip_prefix("rastrigin-") {
                    Self::rastrigin(parse_dim(rest)?)
                } else {
                    Err(Error::UnknownProblem(name.to_string()))
                }
            }
        }
    }

    pub fn registered_names() -> &'static [&'static str] {
        &["ackley-<d>d", "rastrigin-<d>d", "foil-proxy"]
    }

    pub fn objective_kind(&self) -> Objective {
        self.objective
    }

    /// The raw (minimised) objective value.
    pub fn objective(&self, x: &[f64]) -> f64 {
        match self.objective {
            Objective::Ackley => ackley(x),
            Objective::Rastrigin => rastrigin(x),
            Objective::FoilProxy => foil_proxy(x).map(|o| o.drag).unwrap_or(f64::NAN),
        }
    }

    /// Fitness offset: `fitness = ceiling − objective`.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn to_objective(&self, fitness: f64) -> f64 {
        self.ceiling - fitness
    }

    /// Location and value of the global minimum where known analytically.
    pub fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        match self.objective {
            Objective::Ackley | Objective::Rastrigin => Some((vec![0.0; self.spec.dim()], 0.0)),
            Objective::FoilProxy => None,
        }
    }
}

impl Problem for BenchmarkProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.ceiling - self.objective(x)
    }

    fn features(&self, x: &[f64]) -> Vec<f64> {
        match self.objective {
            Objective::FoilProxy => foil_proxy(x)
                .map(|o| o.features.to_vec())
                .unwrap_or_else(|_| vec![f64::NAN; 2]),
            _ => leading_coordinates(x, &self.spec, self.spec.feature_dim()),
        }
    }
}
