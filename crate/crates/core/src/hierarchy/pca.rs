//! Principal component analysis with an explained-variance cutoff.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of total variance below which a component is dropped.
pub const DEFAULT_CUTOFF: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaProjection {
    mean: Vec<f64>,
    /// `d × r`, orthonormal columns, decreasing eigenvalue.
    #[serde(skip)]
    components: DMatrix<f64>,
    /// Eigenvalues of the (1/n) covariance, all `d` of them, descending.
    eigenvalues: Vec<f64>,
    /// Explained-variance fraction of every component, descending.
    explained: Vec<f64>,
    degenerate: bool,
}

impl PcaProjection {
    pub fn retained(&self) -> usize {
        self.components.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    pub fn retained_explained(&self) -> &[f64] {
        &self.explained[..self.retained()]
    }

    /// All samples were identical; the projection is onto the first axis.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Sum of the eigenvalues of dropped components.
    pub fn dropped_variance(&self) -> f64 {
        self.eigenvalues[self.retained()..].iter().sum()
    }

    /// `componentsᵀ · (x − mean)`
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centred = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(v, m)| v - m));
        (self.components.transpose() * centred).as_slice().to_vec()
    }

    /// `mean + components · z`
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let back = &self.components * DVector::from_column_slice(z);
        back.iter().zip(&self.mean).map(|(v, m)| v + m).collect()
    }

    /// Keeps every input dimension: identity projection around `mean`.
    pub fn identity(mean: Vec<f64>) -> Self {
        let d = mean.len();
        Self {
            components: DMatrix::identity(d, d),
            eigenvalues: vec![0.0; d],
            explained: vec![1.0 / d as f64; d],
            degenerate: false,
            mean,
        }
    }
}

/// Fits on `samples` (rows). Components explaining less than `cutoff` of
/// the total variance are dropped, but at least one is always kept.
pub fn pca_fit(samples: &[Vec<f64>], cutoff: f64) -> Result<PcaProjection> {
    if samples.len() < 2 {
        return Err(Error::Argument(format!(
            "PCA needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&cutoff) {
        return Err(Error::Argument(format!(
            "cutoff must lie in [0, 1), got {cutoff}"
        )));
    }
    let n = samples.len();
    let d = samples[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n as f64)
        .collect();
    let centred = DMatrix::from_fn(n, d, |i, k| samples[i][k] - mean[k]);
    let cov = centred.tr_mul(&centred) / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    if total <= 1e-300 {
        let mut axis = DMatrix::zeros(d, 1);
        axis[(0, 0)] = 1.0;
        let mut explained = vec![0.0; d];
        explained[0] = 1.0;
        return Ok(PcaProjection {
            mean,
            components: axis,
            eigenvalues,
            explained,
            degenerate: true,
        });
    }

    let explained: Vec<f64> = eigenvalues.iter().map(|e| e / total).collect();
    let retained = explained
        .iter()
        .take_while(|f| **f >= cutoff)
        .count()
        .max(1);
    let components = DMatrix::from_fn(d, retained, |row, col| eig.eigenvectors[(row, order[col])]);
    Ok(PcaProjection {
        mean,
        components,
        eigenvalues,
        explained,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;
    use rand::Rng;

    #[test]
    fn line_data_keeps_one_component() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let p = pca_fit(&pts, DEFAULT_CUTOFF).unwrap();
        assert_eq!(p.retained(), 1);
        assert!((p.explained()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_square_keeps_both() {
        let pts = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let p = pca_fit(&pts, DEFAULT_CUTOFF).unwrap();
        assert_eq!(p.retained(), 2);
        for f in p.explained() {
            assert!((f - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let pts = vec![vec![0.3, 0.3, 0.3]; 5];
        let p = pca_fit(&pts, DEFAULT_CUTOFF).unwrap();
        assert!(p.is_degenerate());
        assert_eq!(p.retained(), 1);
        assert_eq!(p.project(&[0.3, 0.3, 0.3]), vec![0.0]);
    }

    #[test]
    fn mean_projects_to_zero_and_full_rank_round_trips() {
        let mut rng = rng_from_seed(6);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let p = pca_fit(&pts, 0.0).unwrap();
        assert_eq!(p.retained(), 4);
        assert!(p.project(p.mean()).iter().all(|v| v.abs() < 1e-12));
        for x in &pts {
            let back = p.lift(&p.project(x));
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let gram = p.components().tr_mul(p.components());
        assert!((gram - DMatrix::identity(4, 4)).norm() < 1e-10);
        assert!((p.explained().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_single_sample() {
        assert!(pca_fit(&[vec![1.0, 2.0]], DEFAULT_CUTOFF).is_err());
    }
}
