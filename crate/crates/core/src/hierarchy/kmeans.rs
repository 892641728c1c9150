//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// `Σ ‖p − centroid(assignment(p))‖²`
pub fn inertia(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

pub fn kmeans<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::Argument(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, seed_plus_plus(points, k, rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let dim = points[0].len();
    let k = centroids.len();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut trace = vec![inertia(points, &centroids, &assignment)];

    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seat an empty cluster on the point worst served by its centroid
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        squared_distance(&points[a], &centroids[assignment[a]])
                            .total_cmp(&squared_distance(&points[b], &centroids[assignment[b]]))
                    })
                    .expect("points non-empty");
                centroids[c] = points[far].clone();
                assignment[far] = c;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != assignment;
        assignment = next;
        trace.push(inertia(points, &centroids, &assignment));
        if !changed {
            break;
        }
    }
    KMeansResult {
        inertia: *trace.last().expect("non-empty trace"),
        centroids,
        assignment,
        inertia_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;

    #[test]
    fn one_cluster_per_point() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, 6, 3, &mut rng_from_seed(1)).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut a = r.assignment.clone();
        a.sort_unstable();
        a.dedup();
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn separates_two_pairs() {
        let pts = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let r = kmeans(&pts, 2, 5, &mut rng_from_seed(3)).unwrap();
        assert_eq!(r.assignment[0], r.assignment[1]);
        assert_eq!(r.assignment[2], r.assignment[3]);
        assert_ne!(r.assignment[0], r.assignment[2]);
        let mut c: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.5, 10.5]);
        assert_eq!(r.inertia, 1.0);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            kmeans(&pts, 3, 1, &mut rng_from_seed(0)),
            Err(Error::Argument(_))
        ));
        assert!(kmeans(&pts, 0, 1, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn final_assignment_is_nearest_and_trace_monotone() {
        let mut rng = rng_from_seed(12);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let r = kmeans(&pts, 7, 4, &mut rng).unwrap();
        for (p, &a) in pts.iter().zip(&r.assignment) {
            assert_eq!(a, nearest(p, &r.centroids));
        }
        for w in r.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!((r.inertia - inertia(&pts, &r.centroids, &r.assignment)).abs() < 1e-12);
    }
}
