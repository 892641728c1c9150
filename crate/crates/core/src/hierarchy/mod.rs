//! Hierarchical surrogate built from feature-space segmentation.
//!
//! The sample set is split recursively with k-means on feature
//! coordinates. Every node reduces its segment's parameter vectors with PCA
//! and trains a model in that reduced space. In residual-coupled mode a
//! child learns what its ancestors got wrong, so a prediction is the sum of
//! the node predictions along the routed path. In independent-subsets mode
//! each node learns raw targets and the path acts as a small ensemble.

pub mod kmeans;
pub mod pca;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{derive_seed, rng_from_seed, Sample};
use crate::error::{Error, Result};
use crate::surrogate::{ModelConfig, Prediction, Regressor, SurrogateModel, ZeroModel};

pub use kmeans::{kmeans, KMeansResult};
pub use pca::{pca_fit, PcaProjection};

/// How path-level predictive variance is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfidenceStrategy {
    /// Variance across ensemble members' full-path predictions.
    FlatVariance,
    /// `Σ_d w_d · var_d` with `w_d ∝ γ^(leaf_depth − d)`.
    #[default]
    DepthWeighted,
}

impl FromStr for ConfidenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat-variance" => Ok(Self::FlatVariance),
            "depth-weighted" => Ok(Self::DepthWeighted),
            other => Err(Error::Argument(format!(
                "unknown confidence strategy `{other}`"
            ))),
        }
    }
}

impl fmt::Display for ConfidenceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FlatVariance => "flat-variance",
            Self::DepthWeighted => "depth-weighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuildMode {
    #[default]
    ResidualCoupled,
    IndependentSubsets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HierarchyConfig {
    pub depth: usize,
    pub branching: usize,
    pub min_leaf_samples: usize,
    pub kmeans_restarts: usize,
    pub pca_cutoff: f64,
    pub model: ModelConfig,
    pub confidence: ConfidenceStrategy,
    pub gamma: f64,
    pub mode: BuildMode,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            branching: 4,
            min_leaf_samples: 8,
            kmeans_restarts: 10,
            pca_cutoff: pca::DEFAULT_CUTOFF,
            model: ModelConfig::default(),
            confidence: ConfidenceStrategy::default(),
            gamma: 0.5,
            mode: BuildMode::default(),
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.branching < 2 {
            return Err(Error::Argument(format!(
                "branching must be at least 2, got {}",
                self.branching
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Argument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// One segment of the hierarchy.
pub struct SegmentNode {
    pub depth: usize,
    /// Feature-space centroid used for routing (the feature mean at the root).
    pub centroid: Vec<f64>,
    /// Indices into the build sample set.
    pub members: Vec<usize>,
    pub pca: PcaProjection,
    pub model: Box<dyn Regressor>,
    /// RMSE of the path sum (or of this node alone, for independent
    /// subsets) on the node's own training samples.
    pub training_rmse: f64,
    /// Training failed and the node fell back to a zero model.
    pub failed: bool,
    pub children: Vec<SegmentNode>,
}

impl SegmentNode {
    /// Prediction of this node's own model at `x`.
    pub fn node_prediction(&self, x: &[f64]) -> NodePrediction {
        let z = self.pca.project(x);
        let p = self.model.predict(&z);
        NodePrediction {
            depth: self.depth,
            mean: p.mean,
            variance: p.variance,
            members: self.model.member_predictions(&z),
        }
    }

    /// Nearest child centroid to `features`; ties go to the lowest index.
    pub fn route(&self, features: &[f64]) -> Option<usize> {
        if self.children.is_empty() {
            return None;
        }
        let centroids: Vec<Vec<f64>> = self.children.iter().map(|c| c.centroid.clone()).collect();
        Some(kmeans::nearest(features, &centroids))
    }

    fn count_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(SegmentNode::count_nodes)
            .sum::<usize>()
    }

    fn describe(&self) -> NodeDescription {
        NodeDescription {
            depth: self.depth,
            centroid: self.centroid.clone(),
            sample_count: self.members.len(),
            retained_dims: self.pca.retained(),
            training_rmse: self.training_rmse,
            children: self.children.iter().map(SegmentNode::describe).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePrediction {
    pub depth: usize,
    pub mean: f64,
    pub variance: f64,
    pub members: Option<Vec<f64>>,
}

/// Aggregated path confidence (a variance) for the node predictions of one
/// root-to-leaf path.
///
/// * flat-variance: if every node carries the same number of ensemble
///   members, the sample variance of the members' summed path predictions;
///   otherwise the sum of node variances.
/// * depth-weighted: `Σ_d w_d·var_d` with `w_d = γ^(L−d) / Σ γ^(L−d')`,
///   `L` the deepest node on the path.
pub fn hier_confidence(
    path: &[NodePrediction],
    strategy: ConfidenceStrategy,
    gamma: f64,
) -> Result<f64> {
    if path.is_empty() {
        return Ok(0.0);
    }
    if !(gamma > 0.0) {
        return Err(Error::Argument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(match strategy {
        ConfidenceStrategy::FlatVariance => {
            let sizes: Vec<Option<usize>> = path
                .iter()
                .map(|n| n.members.as_ref().map(Vec::len))
                .collect();
            match sizes[0] {
                Some(m) if m >= 2 && sizes.iter().all(|s| *s == Some(m)) => {
                    let sums: Vec<f64> = (0..m)
                        .map(|i| path.iter().map(|n| n.members.as_ref().unwrap()[i]).sum())
                        .collect();
                    crate::ann::mean_and_variance(&sums).variance
                }
                _ => path.iter().map(|n| n.variance).sum(),
            }
        }
        ConfidenceStrategy::DepthWeighted => {
            let leaf = path.iter().map(|n| n.depth).max().unwrap_or(0);
            let weights: Vec<f64> = path
                .iter()
                .map(|n| gamma.powi((leaf - n.depth) as i32))
                .collect();
            let total: f64 = weights.iter().sum();
            path.iter()
                .zip(&weights)
                .map(|(n, w)| w / total * n.variance)
                .sum()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierPrediction {
    pub mean: f64,
    pub confidence: f64,
    /// Child index taken at every level below the root.
    pub path: Vec<usize>,
}

/// Serializable summary of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDescription {
    pub depth: usize,
    pub centroid: Vec<f64>,
    pub sample_count: usize,
    pub retained_dims: usize,
    pub training_rmse: f64,
    pub children: Vec<NodeDescription>,
}

pub struct HierarchicalSurrogate {
    root: SegmentNode,
    confidence: ConfidenceStrategy,
    gamma: f64,
    mode: BuildMode,
}

struct Builder<'a> {
    inputs: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
    cfg: &'a HierarchyConfig,
    seed: u64,
    next_id: u64,
}

impl HierarchicalSurrogate {
    /// Builds the tree over `samples`. `cfg.depth = 0` gives a single
    /// flat model (after PCA).
    pub fn build(samples: &[Sample], cfg: &HierarchyConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if samples.is_empty() {
            return Err(Error::Training("hierarchy needs samples".into()));
        }
        let mut builder = Builder {
            inputs: samples.iter().map(|s| s.x.0.clone()).collect(),
            features: samples.iter().map(|s| s.features.0.clone()).collect(),
            cfg,
            seed,
            next_id: 0,
        };
        let targets: Vec<f64> = samples.iter().map(|s| s.fitness).collect();
        let fdim = builder.features[0].len();
        let centroid = (0..fdim)
            .map(|k| builder.features.iter().map(|f| f[k]).sum::<f64>() / samples.len() as f64)
            .collect();
        let all: Vec<usize> = (0..samples.len()).collect();
        let root = builder.node(all, &targets, 0, centroid)?;
        Ok(Self {
            root,
            confidence: cfg.confidence,
            gamma: cfg.gamma,
            mode: cfg.mode,
        })
    }

    pub fn root(&self) -> &SegmentNode {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.count_nodes()
    }

    pub fn confidence_strategy(&self) -> ConfidenceStrategy {
        self.confidence
    }

    pub fn set_confidence_strategy(&mut self, strategy: ConfidenceStrategy, gamma: f64) {
        self.confidence = strategy;
        self.gamma = gamma;
    }

    /// Nodes visited from the root to the leaf `features` routes to.
    pub fn route(&self, features: &[f64]) -> Vec<&SegmentNode> {
        let mut out = vec![&self.root];
        let mut node = &self.root;
        while let Some(i) = node.route(features) {
            node = &node.children[i];
            out.push(node);
        }
        out
    }

    pub fn node_predictions(&self, x: &[f64], features: &[f64]) -> Vec<NodePrediction> {
        self.route(features)
            .iter()
            .map(|n| n.node_prediction(x))
            .collect()
    }

    pub fn hier_predict(&self, x: &[f64], features: &[f64]) -> HierPrediction {
        let mut path = Vec::new();
        let mut node = &self.root;
        while let Some(i) = node.route(features) {
            path.push(i);
            node = &node.children[i];
        }
        let preds = self.node_predictions(x, features);
        let (mean, confidence) = match self.mode {
            BuildMode::ResidualCoupled => (
                preds.iter().map(|p| p.mean).sum(),
                hier_confidence(&preds, self.confidence, self.gamma).unwrap_or(0.0),
            ),
            BuildMode::IndependentSubsets => {
                let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
                let spread = crate::ann::mean_and_variance(&means);
                let within = hier_confidence(&preds, self.confidence, self.gamma).unwrap_or(0.0);
                let confidence = match self.confidence {
                    ConfidenceStrategy::FlatVariance if means.len() > 1 => spread.variance,
                    _ => within,
                };
                (spread.mean, confidence)
            }
        };
        HierPrediction {
            mean,
            confidence,
            path,
        }
    }

    pub fn describe(&self) -> NodeDescription {
        self.root.describe()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.describe())?)
    }
}

impl SurrogateModel for HierarchicalSurrogate {
    fn predict(&self, x: &[f64], features: &[f64]) -> Prediction {
        let p = self.hier_predict(x, features);
        Prediction {
            mean: p.mean,
            variance: p.confidence,
        }
    }
}

impl Builder<'_> {
    fn node(
        &mut self,
        members: Vec<usize>,
        targets: &[f64],
        depth: usize,
        centroid: Vec<f64>,
    ) -> Result<SegmentNode> {
        let id = self.next_id;
        self.next_id += 1;
        let node_seed = derive_seed(self.seed, id);
        let xs: Vec<Vec<f64>> = members.iter().map(|&i| self.inputs[i].clone()).collect();

        let pca = if xs.len() >= 2 {
            pca_fit(&xs, self.cfg.pca_cutoff)?
        } else {
            PcaProjection::identity(xs[0].clone())
        };
        let zs: Vec<Vec<f64>> = xs.iter().map(|x| pca.project(x)).collect();

        let (model, failed): (Box<dyn Regressor>, bool) = if members.len() < 2 {
            (Box::new(ZeroModel), false)
        } else {
            match self.cfg.model.fit(&zs, targets, None, node_seed) {
                Ok(m) => (m, false),
                Err(e) => {
                    log::warn!(
                        "hierarchy node {id} (depth {depth}) fell back to a zero model: {e}"
                    );
                    (Box::new(ZeroModel), true)
                }
            }
        };

        // what this node leaves unexplained, per member
        let residuals: Vec<f64> = zs
            .iter()
            .zip(targets)
            .map(|(z, t)| t - model.predict_mean(z))
            .collect();
        let training_rmse =
            (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();

        let mut node = SegmentNode {
            depth,
            centroid,
            members,
            pca,
            model,
            training_rmse,
            failed,
            children: Vec::new(),
        };

        let cfg = self.cfg;
        if depth < cfg.depth
            && !failed
            && node.members.len() >= cfg.branching * cfg.min_leaf_samples
        {
            let feats: Vec<Vec<f64>> = node
                .members
                .iter()
                .map(|&i| self.features[i].clone())
                .collect();
            let mut rng = rng_from_seed(derive_seed(node_seed, u64::MAX));
            let km = kmeans(&feats, cfg.branching, cfg.kmeans_restarts, &mut rng)?;
            for (c, centre) in km.centroids.iter().enumerate() {
                let local: Vec<usize> = (0..node.members.len())
                    .filter(|&j| km.assignment[j] == c)
                    .collect();
                let child_members: Vec<usize> = local.iter().map(|&j| node.members[j]).collect();
                let child_targets: Vec<f64> = local
                    .iter()
                    .map(|&j| match cfg.mode {
                        BuildMode::ResidualCoupled => residuals[j],
                        BuildMode::IndependentSubsets => targets[j],
                    })
                    .collect();
                let child = if child_members.len() < cfg.min_leaf_samples {
                    self.small_leaf(child_members, &child_targets, depth + 1, centre.clone())
                } else {
                    self.node(child_members, &child_targets, depth + 1, centre.clone())?
                };
                node.children.push(child);
            }
        }
        Ok(node)
    }

    /// A segment too small to model: it routes, but contributes nothing.
    fn small_leaf(
        &mut self,
        members: Vec<usize>,
        targets: &[f64],
        depth: usize,
        centroid: Vec<f64>,
    ) -> SegmentNode {
        self.next_id += 1;
        let xs: Vec<Vec<f64>> = members.iter().map(|&i| self.inputs[i].clone()).collect();
        let pca = match xs.len() {
            0 => PcaProjection::identity(vec![0.0; self.inputs[0].len()]),
            1 => PcaProjection::identity(xs[0].clone()),
            _ => pca_fit(&xs, self.cfg.pca_cutoff)
                .unwrap_or_else(|_| PcaProjection::identity(xs[0].clone())),
        };
        let training_rmse = if targets.is_empty() {
            0.0
        } else {
            (targets.iter().map(|t| t * t).sum::<f64>() / targets.len() as f64).sqrt()
        };
        SegmentNode {
            depth,
            centroid,
            members,
            pca,
            model: Box::new(ZeroModel),
            training_rmse,
            failed: false,
            children: Vec::new(),
        }
    }
}
