//! Property tests for the invariants of each module.

use std::sync::atomic::{AtomicUsize, Ordering};

use hsail::acquisition::ucb;
use hsail::ann::{mean_and_variance, BannEnsemble, MlpNet, Normalization};
use hsail::archive::{bin_index, Archive, Elite};
use hsail::benchmarks::{ackley, foil_latent_map, foil_proxy, rastrigin};
use hsail::domain::{
    latin_or_uniform_init, mutate, random_vector, rng_from_seed, DomainSpec, FeatureCoordinates,
    InitStrategy, ParameterVector,
};
use hsail::gp::{GpHyperparams, GpModel};
use hsail::hierarchy::kmeans::{inertia, kmeans, nearest};
use hsail::hierarchy::pca::pca_fit;
use hsail::illumination::{hill_climb, map_elites, FitnessSource, IlluminationConfig, Problem};
use hsail::surrogate::Regressor;
use hsail::BenchmarkProblem;
use proptest::prelude::*;
use rand::Rng;

fn spec_strategy() -> impl Strategy<Value = DomainSpec> {
    prop::collection::vec((-50.0f64..50.0, 0.01f64..40.0), 1..6).prop_map(|b| {
        let lower: Vec<f64> = b.iter().map(|(l, _)| *l).collect();
        let upper: Vec<f64> = b.iter().map(|(l, w)| l + w).collect();
        DomainSpec::new(lower, upper, 1).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutation_stays_in_bounds(spec in spec_strategy(), sigma in 0.001f64..1.0, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut x = random_vector(&spec, &mut rng);
        for _ in 0..50 {
            x = mutate(&x, sigma, &spec, &mut rng).unwrap();
            prop_assert!(spec.contains(&x));
        }
    }

    #[test]
    fn stratified_design_hits_every_stratum_once(spec in spec_strategy(), n in 1usize..40, seed in any::<u64>()) {
        let pts = latin_or_uniform_init(&spec, n, InitStrategy::Stratified, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(pts.len(), n);
        for d in 0..spec.dim() {
            let mut seen = vec![false; n];
            for p in &pts {
                let s = (((p[d] - spec.lower()[d]) / spec.range(d)) * n as f64).floor() as usize;
                let s = s.min(n - 1);
                prop_assert!(!seen[s], "stratum {} of dimension {} hit twice", s, d);
                seen[s] = true;
            }
        }
    }

    #[test]
    fn seeded_draws_are_reproducible(spec in spec_strategy(), seed in any::<u64>()) {
        let a: Vec<ParameterVector> = {
            let mut r = rng_from_seed(seed);
            (0..5).map(|_| random_vector(&spec, &mut r)).collect()
        };
        let b: Vec<ParameterVector> = {
            let mut r = rng_from_seed(seed);
            (0..5).map(|_| random_vector(&spec, &mut r)).collect()
        };
        prop_assert_eq!(a, b);
    }

    #[test]
    fn archive_keeps_per_bin_maximum(
        res in prop::collection::vec(1usize..9, 1..4),
        offers in prop::collection::vec((prop::collection::vec(0.0f64..=1.0, 3), 0.0f64..10.0), 1..300),
    ) {
        let mut archive = Archive::new(res.clone()).unwrap();
        let mut best = std::collections::HashMap::new();
        let mut last_qd = f64::NEG_INFINITY;
        let mut last_cov = 0.0;
        for (f, fit) in &offers {
            let f = f[..res.len()].to_vec();
            let idx = bin_index(&f, &res).unwrap();
            archive.offer(Elite {
                x: ParameterVector(vec![*fit]),
                features: FeatureCoordinates::new(f).unwrap(),
                fitness: *fit,
            }).unwrap();
            let e = best.entry(idx).or_insert(f64::NEG_INFINITY);
            *e = e.max(*fit);
            let m = archive.metrics();
            prop_assert!(m.coverage >= last_cov);
            prop_assert!(m.qd_score >= last_qd);
            last_cov = m.coverage;
            last_qd = m.qd_score;
        }
        prop_assert_eq!(archive.occupied(), best.len());
        for (idx, elite) in archive.iter() {
            prop_assert_eq!(elite.fitness, best[&idx]);
            prop_assert_eq!(bin_index(&elite.features, &res).unwrap(), idx);
        }
        let rescan: f64 = archive.elites().map(|e| e.fitness).sum();
        prop_assert!((archive.metrics().qd_score - rescan).abs() < 1e-9);
    }

    #[test]
    fn hill_climb_never_descends(a in -5.0f64..5.0, b in -5.0f64..5.0, start in prop::collection::vec(0.0f64..1.0, 2), step in 0.01f64..0.5) {
        let spec = DomainSpec::uniform(2, 0.0, 1.0, 1).unwrap();
        let surface = |x: &[f64]| (a * x[0]).sin() + (b * x[1]).cos() - x[0] * x[1];
        let r = hill_climb(surface, &ParameterVector(start), &spec, step, 200).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!(spec.contains(&r.x_best));
    }

    #[test]
    fn gp_variance_is_bounded_and_order_free(
        pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 2..8),
        probes in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 1..10),
        ls in 0.2f64..3.0, sv in 0.1f64..4.0, noise in 1e-4f64..0.5,
    ) {
        let ys: Vec<f64> = pts.iter().map(|p| p[0].sin() + p[1]).collect();
        let hyper = GpHyperparams::isotropic(2, ls, sv, noise);
        let gp = GpModel::train(&pts, &ys, &hyper).unwrap();
        let mut rev_x = pts.clone();
        rev_x.reverse();
        let mut rev_y = ys.clone();
        rev_y.reverse();
        let gp_rev = GpModel::train(&rev_x, &rev_y, &hyper).unwrap();
        for p in &probes {
            let a = gp.predict(p);
            prop_assert!(a.variance >= 0.0 && a.variance <= sv + noise + 1e-12);
            let b = gp_rev.predict(p);
            prop_assert!((a.mean - b.mean).abs() < 1e-10);
            prop_assert!((a.variance - b.variance).abs() < 1e-10);
        }
    }

    #[test]
    fn ensemble_mean_ignores_member_order(seed in any::<u64>(), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut rng = rng_from_seed(seed);
        let nets: Vec<MlpNet> = (0..5).map(|_| MlpNet::random(3, 4, &mut rng)).collect();
        let norm = Normalization::new(&[-1.0; 3], &[1.0; 3], &[0.0, 1.0]);
        let fwd = BannEnsemble::from_members(nets.clone(), norm.clone()).unwrap().predict(&x);
        let mut rev = nets;
        rev.reverse();
        let bwd = BannEnsemble::from_members(rev, norm).unwrap().predict(&x);
        prop_assert!((fwd.mean - bwd.mean).abs() < 1e-12);
        prop_assert!((fwd.variance - bwd.variance).abs() < 1e-12);
    }

    #[test]
    fn ensemble_variance_zero_iff_members_agree(vals in prop::collection::vec(-5.0f64..5.0, 2..10)) {
        let p = mean_and_variance(&vals);
        let all_equal = vals.iter().all(|v| *v == vals[0]);
        prop_assert_eq!(p.variance == 0.0, all_equal);
        prop_assert_eq!(mean_and_variance(&vec![vals[0]; vals.len()]).variance, 0.0);
    }

    #[test]
    fn normalization_round_trips(
        bounds in prop::collection::vec((-100.0f64..100.0, 0.1f64..50.0), 1..5),
        ys in prop::collection::vec(-1e3f64..1e3, 2..10),
        t in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
        let norm = Normalization::new(&lo, &hi, &ys);
        let x: Vec<f64> = (0..lo.len()).map(|i| lo[i] + t[i] * (hi[i] - lo[i])).collect();
        let back = norm.input_inverse(&norm.input(&x));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
        for y in &ys {
            prop_assert!((norm.target_inverse(norm.target(*y)) - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn kmeans_is_nearest_and_beats_random_assignments(
        pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 10..50),
        k in 1usize..5, seed in any::<u64>(),
    ) {
        let mut rng = rng_from_seed(seed);
        let r = kmeans(&pts, k, 5, &mut rng).unwrap();
        for (p, a) in pts.iter().zip(&r.assignment) {
            prop_assert_eq!(nearest(p, &r.centroids), *a);
        }
        prop_assert!((inertia(&pts, &r.centroids, &r.assignment) - r.inertia).abs() < 1e-9);
        for w in r.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        // any assignment scored against its own cluster means
        for _ in 0..50 {
            let assign: Vec<usize> = (0..pts.len()).map(|_| rng.random_range(0..k)).collect();
            let mut cents = vec![vec![0.0; 2]; k];
            let mut counts = vec![0usize; k];
            for (p, &a) in pts.iter().zip(&assign) {
                counts[a] += 1;
                for d in 0..2 { cents[a][d] += p[d]; }
            }
            for c in 0..k {
                for d in 0..2 { cents[c][d] /= counts[c].max(1) as f64; }
            }
            prop_assert!(r.inertia <= inertia(&pts, &cents, &assign) + 1e-9);
        }
    }

    #[test]
    fn pca_bookkeeping(
        pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 3..30),
        cutoff in 0.0f64..0.3,
    ) {
        let p = pca_fit(&pts, cutoff).unwrap();
        let c = p.components();
        let gram = c.transpose() * c;
        for i in 0..p.retained() {
            for j in 0..p.retained() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
        }
        if !p.is_degenerate() {
            prop_assert!((p.explained().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            if p.retained() > 1 {
                prop_assert!(p.retained_explained().iter().all(|e| *e >= cutoff));
            }
        }
        let recon: f64 = pts.iter().map(|x| {
            let back = p.lift(&p.project(x));
            x.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }).sum::<f64>() / pts.len() as f64;
        prop_assert!((recon - p.dropped_variance()).abs() < 1e-8);
    }

    #[test]
    fn ucb_is_monotone(m in -1e3f64..1e3, dm in 0.0f64..10.0, v in 0.0f64..100.0, dv in 1e-6f64..10.0, kappa in 0.0f64..5.0) {
        prop_assert!(ucb(m + dm, v, kappa).unwrap() >= ucb(m, v, kappa).unwrap());
        if kappa > 0.0 {
            prop_assert!(ucb(m, v + dv, kappa).unwrap() > ucb(m, v, kappa).unwrap());
        }
        prop_assert_eq!(ucb(m, 0.0, kappa).unwrap(), m);
        prop_assert!(ucb(m, -dv, kappa).is_err());
    }

    #[test]
    fn foil_features_stay_in_unit_square(x in prop::collection::vec(0.0f64..=1.0, 15)) {
        let out = foil_proxy(&x).unwrap();
        prop_assert!(out.features.iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert!(out.drag > 0.0);
        prop_assert_eq!(foil_proxy(&x).unwrap().drag.to_bits(), out.drag.to_bits());
    }

    #[test]
    fn foil_drag_ignores_latent_null_space(x in prop::collection::vec(0.2f64..0.8, 15), c in prop::collection::vec(-1.0f64..1.0, 15)) {
        // project c off the latent rows; what remains lies in the null space
        let rows = foil_latent_map();
        let mut v = c.clone();
        for r in &rows {
            let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ri) in v.iter_mut().zip(r.iter()) { *vi -= dot * ri; }
        }
        let scale = 0.15 / v.iter().map(|a| a.abs()).fold(1e-12, f64::max);
        let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + scale * b).collect();
        prop_assert!((foil_proxy(&x).unwrap().drag - foil_proxy(&y).unwrap().drag).abs() < 1e-12);
    }

    #[test]
    fn ackley_positive_away_from_origin(x in prop::collection::vec(-30.0f64..30.0, 1..6)) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        prop_assert!(ackley(&x) > 0.0);
        prop_assert!(rastrigin(&x) >= 0.0);
    }
}

/// Wraps a problem and counts objective calls.
struct Counting<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P: Problem> Problem for Counting<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn spec(&self) -> &DomainSpec {
        self.inner.spec()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
    fn features(&self, x: &[f64]) -> Vec<f64> {
        self.inner.features(x)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn map_elites_spends_exactly_its_budget(init in 1usize..50, extra in 0usize..400, side in 1usize..12, seed in any::<u64>()) {
        let p = Counting { inner: BenchmarkProblem::rastrigin(2).unwrap(), calls: AtomicUsize::new(0) };
        let cfg = IlluminationConfig {
            init_count: init,
            total_evaluations: init + extra,
            resolution: vec![side, side],
            seed,
            ..IlluminationConfig::default()
        };
        let r = map_elites(&p, &cfg, FitnessSource::TrueObjective).unwrap();
        prop_assert_eq!(p.calls.load(Ordering::Relaxed), init + extra);
        prop_assert_eq!(r.evaluations, init + extra);
        for w in r.history.windows(2) {
            prop_assert!(w[1].metrics.qd_score >= w[0].metrics.qd_score);
            prop_assert!(w[1].metrics.coverage >= w[0].metrics.coverage);
        }
        let again = map_elites(&p.inner, &cfg, FitnessSource::TrueObjective).unwrap();
        prop_assert_eq!(again.history, r.history);
    }
}

#[test]
fn known_optima_are_exact() {
    assert_eq!(ackley(&[0.0]), 0.0);
    assert_eq!(ackley(&[0.0; 7]), 0.0);
    assert_eq!(rastrigin(&[0.0, 0.0]), 0.0);
    assert_eq!(rastrigin(&[1.0, 1.0]), 2.0);
}

#[test]
fn foil_golden_value() {
    // frozen at the first implementation
    let out = foil_proxy(&[0.5; 15]).unwrap();
    assert_eq!(out.features, [0.5, 0.5]);
    assert!((out.drag - 0.049_6).abs() < 1e-4, "{}", out.drag);
}

#[test]
fn rastrigin_midpoint_features() {
    let p = BenchmarkProblem::rastrigin(2).unwrap();
    assert_eq!(p.features(&p.spec().midpoint()), vec![0.5, 0.5]);
}
