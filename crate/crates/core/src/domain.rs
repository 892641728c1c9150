//! Search-space types, seeded randomness, and the variation operators shared
//! by every optimizer in the crate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

/// Builds a generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a master seed and a stream index.
///
/// This is the split function used to hand parallel workers their own
/// generators: two rounds of SplitMix64 mixing over `master ^ f(stream)`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Bounded search space plus the dimensionality of its feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    feature_dim: usize,
}

impl DomainSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, feature_dim: usize) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Argument(
                "domain needs at least one dimension".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::Argument(format!(
                "bound lengths differ: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        if feature_dim == 0 {
            return Err(Error::Argument("feature_dim must be at least 1".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Argument(format!(
                    "dimension {i}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            feature_dim,
        })
    }

    /// Same bounds `[lo, hi]` in every one of `dim` dimensions.
    pub fn uniform(dim: usize, lo: f64, hi: f64, feature_dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], feature_dim)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Clamps `x` into the box in place.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn midpoint(&self) -> ParameterVector {
        ParameterVector(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }
}

/// A point of the search space (the genome).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Behavioural descriptor, normalised to the unit hypercube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCoordinates(pub Vec<f64>);

impl FeatureCoordinates {
    /// Wraps `coords`, rejecting anything outside `[0, 1]` (or NaN).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain(format!(
                "feature coordinate {c} outside [0, 1] in {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for FeatureCoordinates {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A truly evaluated point. Fitness is always maximised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: ParameterVector,
    pub features: FeatureCoordinates,
    pub fitness: f64,
}

/// Draws a vector uniformly inside the box.
pub fn random_vector<R: Rng + ?Sized>(spec: &DomainSpec, rng: &mut R) -> ParameterVector {
    ParameterVector(
        spec.lower
            .iter()
            .zip(&spec.upper)
            .map(|(lo, hi)| rng.random_range(*lo..=*hi))
            .collect(),
    )
}

/// Isotropic Gaussian mutation, `sigma_frac` of each dimension's range,
/// clamped back into the box.
pub fn mutate<R: Rng + ?Sized>(
    x: &ParameterVector,
    sigma_frac: f64,
    spec: &DomainSpec,
    rng: &mut R,
) -> Result<ParameterVector> {
    if !(sigma_frac > 0.0 && sigma_frac <= 1.0) {
        return Err(Error::Argument(format!(
            "sigma_frac must lie in (0, 1], got {sigma_frac}"
        )));
    }
    if x.len() != spec.dim() {
        return Err(Error::Argument(format!(
            "vector has {} entries, domain has {}",
            x.len(),
            spec.dim()
        )));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut child: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v + sigma_frac * spec.range(i) * std_normal.sample(rng))
        .collect();
    spec.clamp(&mut child);
    Ok(ParameterVector(child))
}

/// How the initial sample set is spread over the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Latin-hypercube: every dimension's `n` strata hold exactly one point.
    #[default]
    Stratified,
    Uniform,
}

/// Initial design of `n` points.
pub fn latin_or_uniform_init<R: Rng + ?Sized>(
    spec: &DomainSpec,
    n: usize,
    strategy: InitStrategy,
    rng: &mut R,
) -> Result<Vec<ParameterVector>> {
    if n == 0 {
        return Err(Error::Argument("initial design needs n >= 1".into()));
    }
    match strategy {
        InitStrategy::Uniform => Ok((0..n).map(|_| random_vector(spec, rng)).collect()),
        InitStrategy::Stratified => {
            let mut points = vec![vec![0.0; spec.dim()]; n];
            let mut strata: Vec<usize> = (0..n).collect();
            for d in 0..spec.dim() {
                strata.shuffle(rng);
                let (lo, width) = (spec.lower[d], spec.range(d) / n as f64);
                for (p, s) in points.iter_mut().zip(&strata) {
                    let u: f64 = rng.random();
                    // keep the draw strictly inside its stratum's half-open interval
                    let v = lo + width * (*s as f64 + u);
                    p[d] = v.min(lo + width * (*s as f64 + 1.0)).min(spec.upper[d]);
                }
            }
            Ok(points.into_iter().map(ParameterVector).collect())
        }
    }
}
