//! Iterative centroid clustering: label every point by its nearest centroid,
//! re-estimate each centroid from its cluster, repeat until the centroids stop
//! moving.
//!
//! The three supported algorithms differ only in the labeling metric and the
//! centroid estimator:
//!
//! | algorithm        | labeling | estimation            |
//! |------------------|----------|-----------------------|
//! | k-means (Lloyd)  | ℓ2²      | coordinatewise mean   |
//! | k-medians-ℓ1     | ℓ1       | coordinatewise median |
//! | k-medians-hybrid | ℓ2       | coordinatewise median |
//!
//! Conventions shared by all three:
//! - ties in the labeling step go to the lowest cluster index;
//! - a cluster that receives no points keeps its previous centroid;
//! - iteration stops once the mean squared centroid shift is `<= eps`, or
//!   after `max_iter` label/estimate passes;
//! - the returned labels are recomputed from the returned centroids.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::stats::{mean_of_rows, median_of_rows, squared_l2, Metric};

/// Centroid estimator used by the estimation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    CoordMedian,
    CoordMean,
}

/// A (labeling metric, centroid estimator) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub label_metric: Metric,
    pub estimator: Estimator,
}

impl AlgorithmSpec {
    pub const KMEANS: Self = Self {
        label_metric: Metric::L2Squared,
        estimator: Estimator::CoordMean,
    };
    pub const KMEDIANS_L1: Self = Self {
        label_metric: Metric::L1,
        estimator: Estimator::CoordMedian,
    };
    pub const KMEDIANS_HYBRID: Self = Self {
        label_metric: Metric::L2,
        estimator: Estimator::CoordMedian,
    };
}

/// Named presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "kmedians-l1")]
    KMediansL1,
    #[serde(rename = "hybrid")]
    KMediansHybrid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::KMeans,
        Algorithm::KMediansL1,
        Algorithm::KMediansHybrid,
    ];

    pub fn spec(self) -> AlgorithmSpec {
        match self {
            Algorithm::KMeans => AlgorithmSpec::KMEANS,
            Algorithm::KMediansL1 => AlgorithmSpec::KMEDIANS_L1,
            Algorithm::KMediansHybrid => AlgorithmSpec::KMEDIANS_HYBRID,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::KMediansL1 => "kmedians-l1",
            Algorithm::KMediansHybrid => "hybrid",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid("algo", format!("unknown algorithm {s:?} (expected kmeans, kmedians-l1 or hybrid)")))
    }
}

/// How the iteration is started.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// `k` distinct data points chosen uniformly without replacement.
    Random,
    /// The generating centroids of the dataset.
    Omniscient,
    Provided(Vec<Vec<f64>>),
}

/// Stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eps: f64,
    pub max_iter: usize,
}

impl RunConfig {
    pub const DEFAULT_EPS: f64 = 0.001;
    pub const DEFAULT_MAX_ITER: usize = 100;

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("eps", "must be a positive finite number"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: Self::DEFAULT_EPS,
            max_iter: Self::DEFAULT_MAX_ITER,
        }
    }
}

/// State after one label/estimate pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub centroids: Vec<Vec<f64>>,
    /// Mean squared centroid shift relative to the previous pass.
    pub shift: f64,
    /// Clusters that received no points and kept their previous centroid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub empty_clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub centroids: Vec<Vec<f64>>,
    /// One label per input point, outliers included.
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

/// Output of one estimation step.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub centroids: Vec<Vec<f64>>,
    pub empty_clusters: Vec<usize>,
}

fn check_centroids(dim: usize, centroids: &[Vec<f64>]) -> Result<()> {
    if centroids.is_empty() {
        return Err(Error::Empty("centroids"));
    }
    for c in centroids {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("centroids", "coordinates must be finite"));
        }
    }
    Ok(())
}

/// Initial centroids for `k` clusters.
pub fn initialize<R: Rng + ?Sized>(dataset: &Dataset, k: usize, strategy: &InitStrategy, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "k",
            value: k,
            min: 1,
            max: n,
        });
    }
    let centroids = match strategy {
        InitStrategy::Random => rand::seq::index::sample(rng, n, k)
            .into_iter()
            .map(|i| dataset.points.row(i).to_vec())
            .collect(),
        InitStrategy::Omniscient => {
            if dataset.true_centroids.is_empty() {
                return Err(Error::invalid(
                    "init",
                    "omniscient initialization needs the true centroids",
                ));
            }
            dataset.true_centroids.clone()
        }
        InitStrategy::Provided(c) => c.clone(),
    };
    if centroids.len() != k {
        return Err(Error::invalid(
            "init",
            format!("expected {k} initial centroids, got {}", centroids.len()),
        ));
    }
    check_centroids(dataset.dim(), &centroids)?;
    Ok(centroids)
}

#[inline]
fn nearest(point: &[f64], centroids: &[Vec<f64>], metric: Metric) -> usize {
    let mut best = 0;
    let mut best_key = metric.ranking_key(point, &centroids[0]);
    for (h, c) in centroids.iter().enumerate().skip(1) {
        let key = metric.ranking_key(point, c);
        if key < best_key {
            best = h;
            best_key = key;
        }
    }
    best
}

fn assign(points: &PointSet, centroids: &[Vec<f64>], metric: Metric, labels: &mut Vec<usize>) {
    labels.clear();
    labels.extend(points.rows().map(|p| nearest(p, centroids, metric)));
}

/// Labels every point with its nearest centroid under `metric`, lowest index on ties.
pub fn label_step(points: &PointSet, centroids: &[Vec<f64>], metric: Metric) -> Result<Vec<usize>> {
    check_centroids(points.dim(), centroids)?;
    let mut labels = Vec::with_capacity(points.len());
    assign(points, centroids, metric, &mut labels);
    Ok(labels)
}

/// Reusable buffers for the estimation step.
#[derive(Default)]
struct Scratch {
    members: Vec<Vec<usize>>,
    buf: Vec<f64>,
}

fn estimate_into(
    points: &PointSet,
    labels: &[usize],
    estimator: Estimator,
    prev: &[Vec<f64>],
    scratch: &mut Scratch,
) -> Estimate {
    let k = prev.len();
    scratch.members.resize_with(k, Vec::new);
    for m in scratch.members.iter_mut() {
        m.clear();
    }
    for (i, &h) in labels.iter().enumerate() {
        scratch.members[h].push(i);
    }
    let mut centroids = Vec::with_capacity(k);
    let mut empty_clusters = Vec::new();
    for (h, members) in scratch.members.iter().enumerate() {
        if members.is_empty() {
            empty_clusters.push(h);
            centroids.push(prev[h].clone());
            continue;
        }
        let rows: Vec<&[f64]> = members.iter().map(|&i| points.row(i)).collect();
        let mut out = vec![0.0; points.dim()];
        match estimator {
            Estimator::CoordMedian => median_of_rows(&rows, &mut scratch.buf, &mut out),
            Estimator::CoordMean => mean_of_rows(&rows, &mut out),
        }
        centroids.push(out);
    }
    Estimate {
        centroids,
        empty_clusters,
    }
}

/// Recomputes each centroid from its assigned points.
///
/// Points are visited in index order, so the mean's accumulation order is fixed.
pub fn estimate_step(
    points: &PointSet,
    labels: &[usize],
    k: usize,
    estimator: Estimator,
    prev_centroids: &[Vec<f64>],
) -> Result<Estimate> {
    if labels.len() != points.len() {
        return Err(Error::invalid(
            "labels",
            format!("{} labels for {} points", labels.len(), points.len()),
        ));
    }
    if prev_centroids.len() != k {
        return Err(Error::invalid(
            "prev_centroids",
            format!("expected {k} centroids, got {}", prev_centroids.len()),
        ));
    }
    check_centroids(points.dim(), prev_centroids)?;
    if let Some(&bad) = labels.iter().find(|&&h| h >= k) {
        return Err(Error::OutOfRange {
            what: "label",
            value: bad,
            min: 0,
            max: k - 1,
        });
    }
    Ok(estimate_into(
        points,
        labels,
        estimator,
        prev_centroids,
        &mut Scratch::default(),
    ))
}

/// Mean over clusters of the squared Euclidean centroid shift.
pub fn centroid_shift(old: &[Vec<f64>], new: &[Vec<f64>]) -> Result<f64> {
    if old.len() != new.len() || old.is_empty() {
        return Err(Error::invalid(
            "centroids",
            format!("cannot compare {} and {} centroids", old.len(), new.len()),
        ));
    }
    let mut total = 0.0;
    for (a, b) in old.iter().zip(new) {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        total += squared_l2(a, b);
    }
    Ok(total / old.len() as f64)
}

/// Sum over points of the distance to their assigned centroid.
pub fn within_cluster_cost(points: &PointSet, centroids: &[Vec<f64>], labels: &[usize], metric: Metric) -> f64 {
    points
        .rows()
        .zip(labels)
        .map(|(p, &h)| metric.eval(p, &centroids[h]))
        .sum()
}

/// Runs the iteration from explicit starting centroids.
pub fn run_from(points: &PointSet, spec: AlgorithmSpec, initial: Vec<Vec<f64>>, config: &RunConfig) -> Result<ClusteringResult> {
    config.validate()?;
    check_centroids(points.dim(), &initial)?;
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }

    let mut scratch = Scratch::default();
    let mut labels = Vec::with_capacity(points.len());
    let mut current = initial;
    let mut trace = Vec::new();
    let mut converged = false;

    while trace.len() < config.max_iter {
        assign(points, &current, spec.label_metric, &mut labels);
        let est = estimate_into(points, &labels, spec.estimator, &current, &mut scratch);
        let shift = centroid_shift(&current, &est.centroids)?;
        current = est.centroids;
        trace.push(IterationRecord {
            centroids: current.clone(),
            shift,
            empty_clusters: est.empty_clusters,
        });
        if shift <= config.eps {
            converged = true;
            break;
        }
    }

    assign(points, &current, spec.label_metric, &mut labels);
    Ok(ClusteringResult {
        centroids: current,
        labels,
        iterations: trace.len(),
        converged,
        trace,
    })
}

/// Initializes and runs `spec` on `dataset` with `k` clusters.
pub fn run<R: Rng + ?Sized>(
    dataset: &Dataset,
    k: usize,
    spec: AlgorithmSpec,
    init: &InitStrategy,
    config: &RunConfig,
    rng: &mut R,
) -> Result<ClusteringResult> {
    config.validate()?;
    let initial = initialize(dataset, k, init, rng)?;
    run_from(&dataset.points, spec, initial, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{MixtureConfig, OutlierConfig, Truth};
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn pts(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn presets() {
        assert_eq!(Algorithm::KMeans.spec().label_metric, Metric::L2Squared);
        assert_eq!(Algorithm::KMediansL1.spec().estimator, Estimator::CoordMedian);
        assert_eq!(Algorithm::KMediansHybrid.spec().label_metric, Metric::L2);
        assert_eq!("hybrid".parse::<Algorithm>().unwrap(), Algorithm::KMediansHybrid);
        assert!("foo".parse::<Algorithm>().is_err());
    }

    #[test]
    fn label_step_examples() {
        let c = vec![vec![0.0], vec![10.0]];
        assert_eq!(label_step(&pts(&[&[1.0]]), &c, Metric::L2).unwrap(), vec![0]);
        // equidistant -> lowest index
        assert_eq!(label_step(&pts(&[&[5.0]]), &c, Metric::L2).unwrap(), vec![0]);

        let c = vec![vec![0.0, 0.0], vec![4.0, 4.0]];
        let p = pts(&[&[3.0, 0.0], &[3.0, 2.0], &[0.0, 5.0]]);
        // (3,2): l2 sqrt(13) vs sqrt(5), l1 5 vs 3
        assert_eq!(label_step(&p, &c, Metric::L2).unwrap(), vec![0, 1, 1]);
        // (0,5): l1 distances 5 and 5 tie, while l2 gives 5 vs sqrt(17)
        assert_eq!(label_step(&p, &c, Metric::L1).unwrap(), vec![0, 1, 0]);

        assert!(label_step(&p, &[vec![0.0]], Metric::L2).is_err());
        assert!(label_step(&p, &[], Metric::L2).is_err());
    }

    #[test]
    fn estimate_step_examples() {
        let p = pts(&[&[0.0, 0.0], &[1.0, 2.0], &[2.0, 1.0]]);
        let est = estimate_step(&p, &[0, 0, 0], 1, Estimator::CoordMedian, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(est.centroids, vec![vec![1.0, 1.0]]);
        assert!(est.empty_clusters.is_empty());

        let prev = vec![vec![0.0, 0.0], vec![9.0, 9.0]];
        let est = estimate_step(&p, &[0, 0, 0], 2, Estimator::CoordMedian, &prev).unwrap();
        assert_eq!(est.centroids[1], vec![9.0, 9.0]);
        assert_eq!(est.empty_clusters, vec![1]);

        let p = pts(&[&[0.0, 0.0], &[2.0, 2.0]]);
        let est = estimate_step(&p, &[0, 0], 1, Estimator::CoordMean, &[vec![5.0, 5.0]]).unwrap();
        assert_eq!(est.centroids, vec![vec![1.0, 1.0]]);

        assert!(estimate_step(&p, &[0, 2], 2, Estimator::CoordMean, &prev).is_err());
        assert!(estimate_step(&p, &[0], 2, Estimator::CoordMean, &prev).is_err());
    }

    #[test]
    fn centroid_shift_examples() {
        let a = vec![vec![1.0, 2.0]];
        assert_eq!(centroid_shift(&a, &a).unwrap(), 0.0);
        assert_eq!(centroid_shift(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), 25.0);
        assert_eq!(
            centroid_shift(
                &[vec![0.0, 0.0], vec![1.0, 1.0]],
                &[vec![3.0, 4.0], vec![1.0, 1.0]]
            )
            .unwrap(),
            12.5
        );
        assert!(centroid_shift(&a, &[]).is_err());
    }

    #[test]
    fn initialize_strategies() {
        let ds = Dataset::generate(&MixtureConfig::default(), None, 3).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(
            initialize(&ds, 4, &InitStrategy::Omniscient, &mut rng).unwrap(),
            ds.true_centroids
        );
        let a = initialize(&ds, 4, &InitStrategy::Random, &mut rng_from_seed(5)).unwrap();
        let b = initialize(&ds, 4, &InitStrategy::Random, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);

        let small = Dataset::new(
            pts(&[&[1.0], &[2.0], &[3.0]]),
            vec![Truth::Cluster(0); 3],
            vec![],
        )
        .unwrap();
        let mut all = initialize(&small, 3, &InitStrategy::Random, &mut rng).unwrap();
        all.sort_by(|x, y| x[0].total_cmp(&y[0]));
        assert_eq!(all, vec![vec![1.0], vec![2.0], vec![3.0]]);

        assert!(initialize(&small, 4, &InitStrategy::Random, &mut rng).is_err());
        assert!(initialize(&small, 1, &InitStrategy::Omniscient, &mut rng).is_err());
        assert!(initialize(&small, 2, &InitStrategy::Provided(vec![vec![0.0]]), &mut rng).is_err());
        assert!(initialize(&small, 1, &InitStrategy::Provided(vec![vec![0.0, 1.0]]), &mut rng).is_err());
    }

    #[test]
    fn noiseless_runs_recover_truth() {
        let cfg = MixtureConfig {
            sigma: 1e-12,
            ..MixtureConfig::default()
        };
        let ds = Dataset::generate(&cfg, None, 21).unwrap();
        let truth: Vec<usize> = ds.truth.iter().map(|t| t.cluster().unwrap()).collect();
        for algo in Algorithm::ALL {
            let res = run(
                &ds,
                4,
                algo.spec(),
                &InitStrategy::Omniscient,
                &RunConfig::default(),
                &mut rng_from_seed(0),
            )
            .unwrap();
            assert!(res.converged && res.iterations <= 2, "{algo}");
            assert_eq!(res.labels, truth, "{algo}");
        }
    }

    #[test]
    fn iteration_cap() {
        let ds = Dataset::generate(
            &MixtureConfig {
                sigma: 4.0,
                ..MixtureConfig::default()
            },
            Some(&OutlierConfig::centered(60, 10, 20.0)),
            4,
        )
        .unwrap();
        let cfg = RunConfig {
            eps: 1e-12,
            max_iter: 1,
        };
        let res = run(&ds, 4, AlgorithmSpec::KMEANS, &InitStrategy::Random, &cfg, &mut rng_from_seed(3)).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.trace.len(), 1);
        assert!(!res.converged);
        assert_eq!(res.labels.len(), 460);

        assert!(run_from(&ds.points, AlgorithmSpec::KMEANS, ds.true_centroids.clone(), &RunConfig { eps: 0.0, max_iter: 5 }).is_err());
        assert!(run_from(&ds.points, AlgorithmSpec::KMEANS, ds.true_centroids.clone(), &RunConfig { eps: 0.1, max_iter: 0 }).is_err());
    }

    #[test]
    fn output_labels_match_output_centroids() {
        let ds = Dataset::generate(&MixtureConfig::default(), Some(&OutlierConfig::centered(40, 10, 10.0)), 9).unwrap();
        for algo in Algorithm::ALL {
            let spec = algo.spec();
            let res = run(&ds, 4, spec, &InitStrategy::Random, &RunConfig::default(), &mut rng_from_seed(2)).unwrap();
            assert_eq!(res.labels, label_step(&ds.points, &res.centroids, spec.label_metric).unwrap());
            assert_eq!(res.trace.len(), res.iterations);
            assert_eq!(res.trace.last().unwrap().centroids, res.centroids);
        }
    }

    #[test]
    fn runs_are_deterministic_and_permutation_equivariant() {
        use rand::seq::SliceRandom;
        let ds = Dataset::generate(&MixtureConfig::default(), Some(&OutlierConfig::centered(60, 10, 10.0)), 17).unwrap();
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng_from_seed(99));
        let permuted = PointSet::from_rows(&order.iter().map(|&i| ds.points.row(i)).collect::<Vec<_>>()).unwrap();
        for algo in Algorithm::ALL {
            let cfg = RunConfig::default();
            let a = run_from(&ds.points, algo.spec(), ds.true_centroids.clone(), &cfg).unwrap();
            let b = run_from(&ds.points, algo.spec(), ds.true_centroids.clone(), &cfg).unwrap();
            assert_eq!(a, b);
            let p = run_from(&permuted, algo.spec(), ds.true_centroids.clone(), &cfg).unwrap();
            for (pos, &i) in order.iter().enumerate() {
                assert_eq!(p.labels[pos], a.labels[i], "{algo}");
            }
            for (x, y) in a.centroids.iter().flatten().zip(p.centroids.iter().flatten()) {
                if algo.spec().estimator == Estimator::CoordMedian {
                    assert_eq!(x, y);
                } else {
                    assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn labeling_is_locally_optimal(
            seed in any::<u64>(),
            metric in prop_oneof![Just(Metric::L1), Just(Metric::L2), Just(Metric::L2Squared)],
        ) {
            use rand::Rng;
            let mut rng = rng_from_seed(seed);
            let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
            let centroids: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
            let points = PointSet::from_rows(&rows).unwrap();
            let labels = label_step(&points, &centroids, metric).unwrap();
            for (p, &h) in points.rows().zip(&labels) {
                let own = metric.eval(p, &centroids[h]);
                for (g, c) in centroids.iter().enumerate() {
                    let other = metric.eval(p, c);
                    prop_assert!(own <= other);
                    if other == own {
                        // ties resolve to the lowest index (L2 ranks by squared distance)
                        prop_assert!(h <= g || metric.ranking_key(p, c) > metric.ranking_key(p, &centroids[h]));
                    }
                }
            }
        }

        #[test]
        fn lloyd_objective_never_increases(seed in any::<u64>()) {
            let ds = Dataset::generate(
                &MixtureConfig { k: 3, d: 2, sigma: 3.0, points_per_cluster: 30, ..MixtureConfig::default() },
                None,
                seed,
            ).unwrap();
            let res = run(&ds, 3, AlgorithmSpec::KMEANS, &InitStrategy::Random, &RunConfig { eps: 1e-9, max_iter: 50 }, &mut rng_from_seed(seed ^ 1)).unwrap();
            let mut last = f64::INFINITY;
            for rec in &res.trace {
                let labels = label_step(&ds.points, &rec.centroids, Metric::L2Squared).unwrap();
                let obj = within_cluster_cost(&ds.points, &rec.centroids, &labels, Metric::L2Squared);
                prop_assert!(obj <= last * (1.0 + 1e-9));
                last = obj;
            }
        }
    }
}
