//! Quality-diversity illumination with surrogate assistance.
//!
//! The crate provides a MAP-Elites archive and loop, Gaussian-process and
//! bootstrapped neural-network surrogates, a hierarchical surrogate that
//! segments samples in feature space, the SAIL acquisition loop, benchmark
//! problems, and an experiment harness with a small CLI front end.

pub mod acquisition;
pub mod ann;
pub mod archive;
pub mod benchmarks;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod hierarchy;
pub mod illumination;
pub mod surrogate;

pub use archive::{bin_index, Archive, Elite, InsertionOutcome};
pub use benchmarks::BenchmarkProblem;
pub use domain::{DomainSpec, FeatureCoordinates, ParameterVector, Sample};
pub use error::{Error, Result};
pub use illumination::{map_elites, FitnessSource, IlluminationConfig, Problem};
pub use surrogate::{Prediction, SurrogateConfig, SurrogateModel};
