//! The discretised feature map: bin indexing, the elite insertion rule, and
//! map-level metrics.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{FeatureCoordinates, ParameterVector};
use crate::error::{Error, Result};

/// The best solution known for one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub x: ParameterVector,
    pub features: FeatureCoordinates,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionOutcome {
    InsertedEmpty,
    Replaced,
    Rejected,
}

impl InsertionOutcome {
    pub fn accepted(self) -> bool {
        !matches!(self, InsertionOutcome::Rejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArchiveMetrics {
    pub coverage: f64,
    pub qd_score: f64,
    pub best: Option<f64>,
}

/// Maps unit-cube coordinates to integer bin coordinates.
///
/// Coordinate `1.0` belongs to the last bin of its dimension.
pub fn bin_index(features: &[f64], resolution: &[usize]) -> Result<Vec<usize>> {
    if features.len() != resolution.len() {
        return Err(Error::Argument(format!(
            "{} feature coordinates for a {}-dimensional map",
            features.len(),
            resolution.len()
        )));
    }
    features
        .iter()
        .zip(resolution)
        .map(|(&c, &r)| {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Domain(format!(
                    "feature coordinate {c} outside [0, 1]"
                )));
            }
            Ok(((c * r as f64).floor() as usize).min(r - 1))
        })
        .collect()
}

/// Dense grid of optional elites.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    resolution: Vec<usize>,
    bins: Vec<Option<Elite>>,
    // occupied slots in first-insertion order, for O(1) parent selection
    slots: Vec<usize>,
    qd_score: f64,
}

impl Archive {
    pub fn new(resolution: Vec<usize>) -> Result<Self> {
        if resolution.is_empty() || resolution.contains(&0) {
            return Err(Error::Argument(format!(
                "resolution needs positive bin counts, got {resolution:?}"
            )));
        }
        let total: usize = resolution.iter().product();
        Ok(Self {
            resolution,
            bins: vec![None; total],
            slots: Vec::new(),
            qd_score: 0.0,
        })
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn total_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn occupied(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Row-major flattening; the first feature dimension varies slowest.
    pub fn linear_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.resolution)
            .fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn unflatten(&self, mut linear: usize) -> Vec<usize> {
        let mut out = vec![0; self.resolution.len()];
        for (slot, r) in out.iter_mut().zip(&self.resolution).rev() {
            *slot = linear % r;
            linear /= r;
        }
        out
    }

    pub fn get(&self, index: &[usize]) -> Option<&Elite> {
        self.bins[self.linear_index(index)].as_ref()
    }

    /// Applies the insertion rule: empty bins accept anything, occupied bins
    /// only a strictly fitter candidate.
    pub fn offer(&mut self, candidate: Elite) -> Result<InsertionOutcome> {
        if !candidate.fitness.is_finite() {
            return Err(Error::Argument(format!(
                "non-finite fitness {} offered to archive",
                candidate.fitness
            )));
        }
        let idx = bin_index(&candidate.features, &self.resolution)?;
        let slot = self.linear_index(&idx);
        match &self.bins[slot] {
            None => {
                self.qd_score += candidate.fitness;
                self.slots.push(slot);
                self.bins[slot] = Some(candidate);
                Ok(InsertionOutcome::InsertedEmpty)
            }
            Some(incumbent) if candidate.fitness > incumbent.fitness => {
                self.qd_score += candidate.fitness - incumbent.fitness;
                self.bins[slot] = Some(candidate);
                Ok(InsertionOutcome::Replaced)
            }
            Some(_) => Ok(InsertionOutcome::Rejected),
        }
    }

    /// Uniform draw over occupied bins.
    pub fn random_elite<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Elite> {
        if self.slots.is_empty() {
            return Err(Error::State(
                "cannot select a parent from an empty archive".into(),
            ));
        }
        let k = rng.random_range(0..self.slots.len());
        Ok(self.bins[self.slots[k]]
            .as_ref()
            .expect("slot list only names occupied bins"))
    }

    /// Occupied bins in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &Elite)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.as_ref().map(|e| (self.unflatten(i), e)))
    }

    pub fn elites(&self) -> impl Iterator<Item = &Elite> + '_ {
        self.bins.iter().flatten()
    }

    pub fn metrics(&self) -> ArchiveMetrics {
        ArchiveMetrics {
            coverage: self.slots.len() as f64 / self.bins.len() as f64,
            qd_score: self.qd_score,
            best: self.elites().map(|e| e.fitness).reduce(f64::max),
        }
    }

    /// Copy of this archive with every elite's fitness replaced by
    /// `rescore(elite)`. Bins stay where they are.
    pub fn rescored<F>(&self, mut rescore: F) -> Archive
    where
        F: FnMut(&Elite) -> f64,
    {
        let mut out = self.clone();
        out.qd_score = 0.0;
        for bin in out.bins.iter_mut().flatten() {
            bin.fitness = rescore(bin);
            out.qd_score += bin.fitness;
        }
        out
    }

    /// Writes one CSV row per occupied bin in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let fdim = self.resolution.len();
        let xdim = self.elites().next().map_or(0, |e| e.x.len());
        let mut header: Vec<String> = if fdim == 2 {
            vec!["bin_i".into(), "bin_j".into()]
        } else {
            (0..fdim).map(|k| format!("bin_{k}")).collect()
        };
        header.push("fitness".into());
        header.extend((0..fdim).map(|k| format!("feat_{k}")));
        header.extend((0..xdim).map(|k| format!("x_{k}")));
        writeln!(w, "{}", header.join(","))?;
        for (idx, e) in self.iter() {
            let mut row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            row.push(fmt_f64(e.fitness));
            row.extend(e.features.iter().map(|v| fmt_f64(*v)));
            row.extend(e.x.iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation, so CSV output is exact and stable.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;

    fn elite(f: &[f64], fitness: f64) -> Elite {
        Elite {
            x: ParameterVector(f.to_vec()),
            features: FeatureCoordinates(f.to_vec()),
            fitness,
        }
    }

    #[test]
    fn bin_index_examples() {
        assert_eq!(bin_index(&[0.5, 0.5], &[4, 4]).unwrap(), vec![2, 2]);
        assert_eq!(bin_index(&[1.0, 0.0], &[4, 4]).unwrap(), vec![3, 0]);
        assert_eq!(bin_index(&[0.999, 0.999], &[64, 64]).unwrap(), vec![63, 63]);
        assert!(matches!(
            bin_index(&[1.01, 0.0], &[4, 4]),
            Err(Error::Domain(_))
        ));
        assert!(bin_index(&[-0.0001, 0.0], &[4, 4]).is_err());
    }

    #[test]
    fn sixty_four_squared_bins() {
        assert_eq!(Archive::new(vec![64, 64]).unwrap().total_bins(), 4096);
        assert!(Archive::new(vec![4, 0]).is_err());
    }

    #[test]
    fn insertion_rule() {
        let mut a = Archive::new(vec![4, 4]).unwrap();
        assert_eq!(
            a.offer(elite(&[0.1, 0.1], 0.5)).unwrap(),
            InsertionOutcome::InsertedEmpty
        );
        assert_eq!(
            a.offer(elite(&[0.15, 0.2], 0.7)).unwrap(),
            InsertionOutcome::Replaced
        );
        assert_eq!(
            a.offer(elite(&[0.2, 0.15], 0.7)).unwrap(),
            InsertionOutcome::Rejected
        );
        assert_eq!(
            a.offer(elite(&[0.2, 0.15], 0.1)).unwrap(),
            InsertionOutcome::Rejected
        );
        assert_eq!(a.get(&[0, 0]).unwrap().x.0, vec![0.15, 0.2]);
        assert!(a.offer(elite(&[0.2, 0.2], f64::NAN)).is_err());
        assert!(a.offer(elite(&[0.2, 0.2], f64::INFINITY)).is_err());
    }

    #[test]
    fn metrics_examples() {
        let mut a = Archive::new(vec![2, 2]).unwrap();
        let m = a.metrics();
        assert_eq!((m.coverage, m.qd_score, m.best), (0.0, 0.0, None));
        a.offer(elite(&[0.1, 0.1], 1.0)).unwrap();
        a.offer(elite(&[0.9, 0.9], 3.0)).unwrap();
        let m = a.metrics();
        assert_eq!((m.coverage, m.qd_score, m.best), (0.5, 4.0, Some(3.0)));
    }

    #[test]
    fn random_elite_selection() {
        let mut a = Archive::new(vec![4, 4]).unwrap();
        let mut rng = rng_from_seed(1);
        assert!(matches!(a.random_elite(&mut rng), Err(Error::State(_))));
        a.offer(elite(&[0.3, 0.3], 1.0)).unwrap();
        for _ in 0..50 {
            assert_eq!(a.random_elite(&mut rng).unwrap().fitness, 1.0);
        }
        a.offer(elite(&[0.8, 0.8], 2.0)).unwrap();
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| a.random_elite(&mut rng).unwrap().fitness == 1.0)
            .count();
        let frac = ones as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac {frac}");
    }

    #[test]
    fn unflatten_inverts_linear_index() {
        let a = Archive::new(vec![3, 5, 2]).unwrap();
        for i in 0..a.total_bins() {
            assert_eq!(a.linear_index(&a.unflatten(i)), i);
        }
    }

    #[test]
    fn csv_export_is_row_major() {
        let mut a = Archive::new(vec![2, 2]).unwrap();
        a.offer(elite(&[0.9, 0.1], 2.0)).unwrap();
        a.offer(elite(&[0.1, 0.9], 1.5)).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_i,bin_j,fitness,feat_0,feat_1,x_0,x_1");
        assert_eq!(lines[1], "0,1,1.5,0.1,0.9,0.1,0.9");
        assert_eq!(lines[2], "1,0,2.0,0.9,0.1,0.9,0.1");
    }
}
