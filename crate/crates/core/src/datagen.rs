//! Synthetic spherical Gaussian mixtures with injected outliers.
//!
//! Centroids are drawn uniformly from the surface of a sphere around the
//! origin, each cluster gets `points_per_cluster` draws from
//! `N(centroid, sigma^2 I)`, and outliers from `N(center, sigma_out^2 I)` are
//! appended after the clean points. Gaussian draws use the ziggurat sampler
//! from `rand_distr`, so a (config, seed) pair reproduces the same dataset
//! bit-for-bit on a given build.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::seed::rng_from_seed;
use crate::stats::squared_l2;

/// Parameters of the clean mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub k: usize,
    pub d: usize,
    pub sigma: f64,
    pub points_per_cluster: usize,
    #[serde(default = "default_radius")]
    pub centroid_radius: f64,
    /// Optional unequal cluster sizes; overrides `points_per_cluster`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_sizes: Option<Vec<usize>>,
}

fn default_radius() -> f64 {
    5.0
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            k: 4,
            d: 10,
            sigma: 2.0,
            points_per_cluster: 100,
            centroid_radius: 5.0,
            cluster_sizes: None,
        }
    }
}

impl MixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k", "need at least 2 clusters"));
        }
        if self.d < 1 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be a positive finite number"));
        }
        if self.points_per_cluster < 1 {
            return Err(Error::invalid("points_per_cluster", "must be at least 1"));
        }
        if !(self.centroid_radius > 0.0 && self.centroid_radius.is_finite()) {
            return Err(Error::invalid(
                "centroid_radius",
                "must be a positive finite number",
            ));
        }
        if let Some(sizes) = &self.cluster_sizes {
            if sizes.len() != self.k {
                return Err(Error::invalid(
                    "cluster_sizes",
                    format!("expected {} entries, got {}", self.k, sizes.len()),
                ));
            }
            if sizes.contains(&0) {
                return Err(Error::invalid("cluster_sizes", "every cluster needs a point"));
            }
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.cluster_sizes
            .clone()
            .unwrap_or_else(|| vec![self.points_per_cluster; self.k])
    }
}

/// Parameters of the outlier cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub count: usize,
    pub center: Vec<f64>,
    pub sigma_out: f64,
}

impl OutlierConfig {
    /// `count` outliers from `N(0, sigma_out^2 I_d)`.
    pub fn centered(count: usize, d: usize, sigma_out: f64) -> Self {
        Self {
            count,
            center: vec![0.0; d],
            sigma_out,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.center.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.center.len(),
            });
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("center", "coordinates must be finite"));
        }
        if !(self.sigma_out > 0.0 && self.sigma_out.is_finite()) {
            return Err(Error::invalid(
                "sigma_out",
                "must be a positive finite number",
            ));
        }
        Ok(())
    }
}

/// Ground truth for one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    Cluster(usize),
    Outlier,
}

impl Truth {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Truth::Cluster(h) => Some(h),
            Truth::Outlier => None,
        }
    }

    pub fn is_outlier(self) -> bool {
        matches!(self, Truth::Outlier)
    }

    /// Integer encoding used in CSV files: cluster id, or -1 for outliers.
    pub fn code(self) -> i64 {
        match self {
            Truth::Cluster(h) => h as i64,
            Truth::Outlier => -1,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            -1 => Ok(Truth::Outlier),
            c if c >= 0 => Ok(Truth::Cluster(c as usize)),
            c => Err(Error::Parse(format!("invalid truth code {c}"))),
        }
    }
}

/// Observed points together with everything needed to score a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: PointSet,
    pub truth: Vec<Truth>,
    /// Empty when the generating centroids are unknown.
    pub true_centroids: Vec<Vec<f64>>,
    pub mixture: Option<MixtureConfig>,
    pub outliers: Option<OutlierConfig>,
    pub seed: Option<u64>,
}

impl Dataset {
    /// Assembles a dataset from parts, checking that they agree.
    pub fn new(points: PointSet, truth: Vec<Truth>, true_centroids: Vec<Vec<f64>>) -> Result<Self> {
        if truth.len() != points.len() {
            return Err(Error::invalid(
                "truth",
                format!("{} labels for {} points", truth.len(), points.len()),
            ));
        }
        for c in &true_centroids {
            if c.len() != points.dim() {
                return Err(Error::DimensionMismatch {
                    expected: points.dim(),
                    found: c.len(),
                });
            }
        }
        if !true_centroids.is_empty() {
            let k = true_centroids.len();
            if let Some(h) = truth.iter().filter_map(|t| t.cluster()).find(|&h| h >= k) {
                return Err(Error::OutOfRange {
                    what: "truth label",
                    value: h,
                    min: 0,
                    max: k - 1,
                });
            }
        }
        Ok(Self {
            points,
            truth,
            true_centroids,
            mixture: None,
            outliers: None,
            seed: None,
        })
    }

    /// Generates the clean mixture and then the outliers from one seed.
    pub fn generate(mixture: &MixtureConfig, outliers: Option<&OutlierConfig>, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut ds = generate_mixture(mixture, &mut rng)?;
        if let Some(out) = outliers {
            ds = inject_outliers(ds, out, &mut rng)?;
        }
        ds.seed = Some(seed);
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Number of true clusters: known centroids, else the largest truth label + 1.
    pub fn k(&self) -> usize {
        if !self.true_centroids.is_empty() {
            return self.true_centroids.len();
        }
        self.truth
            .iter()
            .filter_map(|t| t.cluster())
            .max()
            .map_or(0, |h| h + 1)
    }

    pub fn n_outliers(&self) -> usize {
        self.truth.iter().filter(|t| t.is_outlier()).count()
    }

    /// Number of non-outlier points per true cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for h in self.truth.iter().filter_map(|t| t.cluster()) {
            sizes[h] += 1;
        }
        sizes
    }

    /// Smallest true cluster as a fraction of the number of clean points.
    pub fn alpha(&self) -> f64 {
        let sizes = self.cluster_sizes();
        let n: usize = sizes.iter().sum();
        match sizes.iter().min() {
            Some(&m) if n > 0 => m as f64 / n as f64,
            _ => 0.0,
        }
    }

    /// Minimum separation of the true centroids, if known.
    pub fn delta(&self) -> Option<f64> {
        min_separation(&self.true_centroids).ok()
    }

    /// Signal-to-noise ratio, if both the centroids and `sigma` are known.
    pub fn snr(&self) -> Option<f64> {
        let sigma = self.mixture.as_ref()?.sigma;
        snr(self.delta()?, sigma).ok()
    }
}

/// A uniform draw from the sphere of the given radius around the origin.
pub fn sample_sphere_surface<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius", "must be a positive finite number"));
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(v.into_iter().map(|x| radius * (x / norm)).collect());
        }
    }
}

/// `k` independent draws from the sphere surface.
pub fn generate_centroids<R: Rng + ?Sized>(k: usize, d: usize, radius: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k < 2 {
        return Err(Error::invalid("k", "need at least 2 clusters"));
    }
    (0..k).map(|_| sample_sphere_surface(d, radius, rng)).collect()
}

/// Appends `n` draws from `N(center, sigma^2 I)` to `points`.
fn push_gaussian_cloud<R: Rng + ?Sized>(points: &mut PointSet, center: &[f64], sigma: f64, n: usize, rng: &mut R) -> Result<()> {
    let mut row = vec![0.0; center.len()];
    for _ in 0..n {
        for (x, c) in row.iter_mut().zip(center) {
            let z: f64 = rng.sample(StandardNormal);
            *x = c + sigma * z;
        }
        points.push(&row)?;
    }
    Ok(())
}

/// Draws centroids on the sphere and then the clean clustered points.
pub fn generate_mixture<R: Rng + ?Sized>(config: &MixtureConfig, rng: &mut R) -> Result<Dataset> {
    config.validate()?;
    let centroids = generate_centroids(config.k, config.d, config.centroid_radius, rng)?;
    let mut ds = mixture_around(&centroids, &config.sizes(), config.sigma, rng)?;
    ds.mixture = Some(config.clone());
    Ok(ds)
}

/// Clean Gaussian clusters around fixed centroids; `sizes[h]` points for cluster `h`.
pub fn mixture_around<R: Rng + ?Sized>(centroids: &[Vec<f64>], sizes: &[usize], sigma: f64, rng: &mut R) -> Result<Dataset> {
    if centroids.len() != sizes.len() {
        return Err(Error::invalid(
            "cluster_sizes",
            format!("{} sizes for {} centroids", sizes.len(), centroids.len()),
        ));
    }
    let d = centroids.first().ok_or(Error::Empty("centroids"))?.len();
    let total: usize = sizes.iter().sum();
    let mut points = PointSet::with_capacity(d, total)?;
    let mut truth = Vec::with_capacity(total);
    for (h, (c, &n)) in centroids.iter().zip(sizes).enumerate() {
        push_gaussian_cloud(&mut points, c, sigma, n, rng)?;
        truth.extend(std::iter::repeat_n(Truth::Cluster(h), n));
    }
    Dataset::new(points, truth, centroids.to_vec())
}

/// Appends `config.count` outliers; existing points and labels are untouched.
pub fn inject_outliers<R: Rng + ?Sized>(mut dataset: Dataset, config: &OutlierConfig, rng: &mut R) -> Result<Dataset> {
    config.validate(dataset.dim())?;
    if dataset.outliers.is_some() || dataset.n_outliers() > 0 {
        return Err(Error::invalid("outliers", "dataset already contains outliers"));
    }
    push_gaussian_cloud(
        &mut dataset.points,
        &config.center,
        config.sigma_out,
        config.count,
        rng,
    )?;
    dataset
        .truth
        .extend(std::iter::repeat_n(Truth::Outlier, config.count));
    dataset.outliers = Some(config.clone());
    Ok(dataset)
}

/// A point at distance `norm` from the origin in a uniformly random direction.
///
/// A direction is drawn even when `norm == 0`, so the generator advances by
/// the same amount for every norm.
pub fn outlier_center_at_radius<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(norm >= 0.0 && norm.is_finite()) {
        return Err(Error::invalid("norm", "must be a non-negative finite number"));
    }
    let dir = sample_sphere_surface(d, 1.0, rng)?;
    Ok(dir.into_iter().map(|x| x * norm).collect())
}

/// Minimum pairwise Euclidean distance.
pub fn min_separation(centroids: &[Vec<f64>]) -> Result<f64> {
    if centroids.len() < 2 {
        return Err(Error::invalid("centroids", "need at least 2 centroids"));
    }
    let mut best = f64::INFINITY;
    for (i, a) in centroids.iter().enumerate() {
        for b in &centroids[i + 1..] {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    found: b.len(),
                });
            }
            best = best.min(squared_l2(a, b));
        }
    }
    Ok(best.sqrt())
}

/// `delta / (2 sigma)`.
pub fn snr(delta: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::invalid("delta", "must be non-negative"));
    }
    Ok(delta / (2.0 * sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn sphere_in_one_dimension_is_two_points() {
        let mut rng = rng_from_seed(1);
        let mut plus = 0;
        for _ in 0..2000 {
            let v = sample_sphere_surface(1, 5.0, &mut rng).unwrap();
            assert!(v[0] == 5.0 || v[0] == -5.0);
            plus += (v[0] > 0.0) as usize;
        }
        // Binomial(2000, 1/2): sd ~ 22
        assert!((900..=1100).contains(&plus), "{plus}");
    }

    #[test]
    fn sphere_draws_have_the_requested_norm() {
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let v = sample_sphere_surface(10, 5.0, &mut rng).unwrap();
            assert!((norm(&v) - 5.0).abs() <= 5e-9);
        }
        assert!(sample_sphere_surface(0, 5.0, &mut rng).is_err());
    }

    #[test]
    fn sphere_draws_are_centered() {
        let mut rng = rng_from_seed(3);
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let v = sample_sphere_surface(3, 5.0, &mut rng).unwrap();
            for j in 0..3 {
                sum[j] += v[j];
            }
        }
        for s in sum {
            assert!((s / n as f64).abs() < 0.05, "{}", s / n as f64);
        }
    }

    #[test]
    fn centroid_examples() {
        let mut rng = rng_from_seed(4);
        let c = generate_centroids(2, 1, 5.0, &mut rng).unwrap();
        assert!(c.iter().all(|v| v[0].abs() == 5.0));
        let c = generate_centroids(4, 10, 5.0, &mut rng).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|v| (norm(v) - 5.0).abs() < 1e-9));
        assert!(min_separation(&c).unwrap() <= 10.0);
        assert!(generate_centroids(1, 3, 5.0, &mut rng).is_err());
    }

    #[test]
    fn mixture_sizes_and_determinism() {
        let cfg = MixtureConfig::default();
        let a = Dataset::generate(&cfg, None, 11).unwrap();
        assert_eq!(a.len(), 400);
        assert_eq!(a.cluster_sizes(), vec![100; 4]);
        assert_eq!(a.alpha(), 0.25);
        let b = Dataset::generate(&cfg, None, 11).unwrap();
        assert_eq!(a, b);
        let bits = |d: &Dataset| d.points.as_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a, Dataset::generate(&cfg, None, 12).unwrap());
    }

    #[test]
    fn unequal_cluster_sizes() {
        let cfg = MixtureConfig {
            k: 3,
            cluster_sizes: Some(vec![5, 10, 1]),
            ..MixtureConfig::default()
        };
        let ds = Dataset::generate(&cfg, None, 1).unwrap();
        assert_eq!(ds.cluster_sizes(), vec![5, 10, 1]);
        let bad = MixtureConfig {
            cluster_sizes: Some(vec![5]),
            ..MixtureConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn vanishing_noise_collapses_onto_centroids() {
        let cfg = MixtureConfig {
            sigma: 1e-12,
            ..MixtureConfig::default()
        };
        let ds = Dataset::generate(&cfg, None, 5).unwrap();
        for (p, t) in ds.points.rows().zip(&ds.truth) {
            let c = &ds.true_centroids[t.cluster().unwrap()];
            assert!(squared_l2(p, c).sqrt() < 1e-9);
        }
    }

    #[test]
    fn mixture_marginals() {
        let cfg = MixtureConfig {
            k: 2,
            d: 2,
            sigma: 2.0,
            points_per_cluster: 10_000,
            ..MixtureConfig::default()
        };
        let ds = Dataset::generate(&cfg, None, 6).unwrap();
        let n = 10_000.0;
        for h in 0..2 {
            let rows: Vec<&[f64]> = ds
                .points
                .rows()
                .zip(&ds.truth)
                .filter(|(_, t)| t.cluster() == Some(h))
                .map(|(r, _)| r)
                .collect();
            for j in 0..2 {
                let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                assert!((mean - ds.true_centroids[h][j]).abs() < 4.0 * 2.0 / n.sqrt());
                assert!((var / 4.0 - 1.0).abs() < 0.2);
            }
        }
    }

    #[test]
    fn outlier_injection() {
        let cfg = MixtureConfig::default();
        let mut rng = rng_from_seed(8);
        let clean = generate_mixture(&cfg, &mut rng).unwrap();

        let none = inject_outliers(clean.clone(), &OutlierConfig::centered(0, 10, 10.0), &mut rng).unwrap();
        assert_eq!(none.points, clean.points);
        assert_eq!(none.truth, clean.truth);

        let dirty = inject_outliers(clean.clone(), &OutlierConfig::centered(60, 10, 10.0), &mut rng).unwrap();
        assert_eq!(dirty.len(), 460);
        assert_eq!(dirty.n_outliers(), 60);
        assert_eq!(&dirty.points.as_flat()[..4000], clean.points.as_flat());
        assert_eq!(&dirty.truth[..400], &clean.truth[..]);
        assert!(dirty.truth[400..].iter().all(|t| t.is_outlier()));

        // a second injection is refused
        assert!(inject_outliers(dirty, &OutlierConfig::centered(1, 10, 1.0), &mut rng).is_err());

        let center: Vec<f64> = (0..10).map(|j| j as f64).collect();
        let tight = OutlierConfig {
            count: 20,
            center: center.clone(),
            sigma_out: 1e-12,
        };
        let ds = inject_outliers(clean.clone(), &tight, &mut rng).unwrap();
        for r in ds.points.rows().skip(400) {
            assert!(squared_l2(r, &center).sqrt() < 1e-9);
        }

        let wrong_dim = OutlierConfig::centered(3, 2, 1.0);
        assert!(matches!(
            inject_outliers(clean, &wrong_dim, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn outlier_center_examples() {
        let mut rng = rng_from_seed(9);
        assert_eq!(outlier_center_at_radius(10, 0.0, &mut rng).unwrap(), vec![0.0; 10]);
        let v = outlier_center_at_radius(10, 100.0, &mut rng).unwrap();
        assert!((norm(&v) - 100.0).abs() < 1e-9);
        let a = outlier_center_at_radius(10, 3.0, &mut rng_from_seed(1)).unwrap();
        let b = outlier_center_at_radius(10, 3.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separation_and_snr_examples() {
        assert_eq!(min_separation(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap(), 5.0);
        assert_eq!(
            min_separation(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap(),
            1.0
        );
        let demo = min_separation(&[vec![5.0, -6.0], vec![-5.0, 6.0]]).unwrap();
        assert!((demo - 244f64.sqrt()).abs() < 1e-12);
        assert!((demo - 15.6205).abs() < 1e-4);
        assert!(min_separation(&[vec![1.0]]).is_err());

        assert!((snr(244f64.sqrt(), 10.0).unwrap() - 0.78102).abs() < 1e-5);
        assert_eq!(snr(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(snr(4.0, 1.0).unwrap(), 2.0);
        assert!(snr(1.0, 0.0).is_err());
    }

    #[test]
    fn truth_codes() {
        assert_eq!(Truth::from_code(-1).unwrap(), Truth::Outlier);
        assert_eq!(Truth::from_code(3).unwrap(), Truth::Cluster(3));
        assert!(Truth::from_code(-2).is_err());
        assert_eq!(Truth::Cluster(2).code(), 2);
    }
}
