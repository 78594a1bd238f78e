//! Scoring a clustering against ground truth.
//!
//! Outliers never count towards the mislabeling proportion; they only enter
//! the estimated-cluster sizes used by `H` and `G`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Truth};
use crate::error::{Error, Result};
use crate::stats::squared_l2;

/// Largest `k` accepted by the brute-force matchers (`k!` permutations).
pub const MAX_MATCH_K: usize = 10;

/// Confusion counts over the non-outlier points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub k: usize,
    /// `n_gh[g][h]`: points of true cluster `g` labeled `h`.
    pub n_gh: Vec<Vec<usize>>,
    /// True cluster sizes (row sums).
    pub n_g_star: Vec<usize>,
    /// Non-outlier points labeled `h` (column sums).
    pub n_h_hat: Vec<usize>,
    /// Outliers labeled `h`.
    pub n_out_per_cluster: Vec<usize>,
}

impl ConfusionCounts {
    /// All points, outliers included, labeled `h`.
    pub fn estimated_size(&self, h: usize) -> usize {
        self.n_h_hat[h] + self.n_out_per_cluster[h]
    }

    pub fn n_true(&self) -> usize {
        self.n_g_star.iter().sum()
    }
}

/// An exact non-negative ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    /// `num / den`, with `0/0` read as zero.
    pub fn new(num: usize, den: usize) -> Self {
        if den == 0 {
            return Self { num: 0, den: 1 };
        }
        Self {
            num: num as u64,
            den: den as u64,
        }
    }

    /// `num / den`, with `0/0` read as one.
    pub fn new_or_one(num: usize, den: usize) -> Self {
        if den == 0 {
            return Self { num: 1, den: 1 };
        }
        Self::new(num, den)
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `1 - self`, for fractions no greater than one.
    pub fn complement(self) -> Self {
        Self {
            num: self.den - self.num,
            den: self.den,
        }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Cluster-level diagnostics for one labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Cluster-wise correct labeling proportion.
    pub h: f64,
    /// Cluster-wise mislabeling rate.
    pub g: f64,
    pub h_exact: Fraction,
    pub g_exact: Fraction,
    /// Largest centroid error normalized by the minimum separation.
    pub lambda: f64,
    /// Smallest true cluster as a fraction of the clean points.
    pub alpha: f64,
    pub delta_sep: f64,
    pub snr: Option<f64>,
}

/// Result of matching estimated labels to true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub mp: f64,
    /// `permutation[h]` is the true cluster matched to estimated cluster `h`.
    pub permutation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidError {
    pub lambda: f64,
    /// Squared error of the estimate matched to each true centroid.
    pub per_cluster_sq: Vec<f64>,
    /// `permutation[h]` is the true centroid matched to estimated centroid `h`.
    pub permutation: Vec<usize>,
}

/// Mean and normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
}

pub fn confusion(labels_hat: &[usize], truth: &[Truth], k: usize) -> Result<ConfusionCounts> {
    if labels_hat.len() != truth.len() {
        return Err(Error::invalid(
            "labels",
            format!("{} labels for {} points", labels_hat.len(), truth.len()),
        ));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let mut c = ConfusionCounts {
        k,
        n_gh: vec![vec![0; k]; k],
        n_g_star: vec![0; k],
        n_h_hat: vec![0; k],
        n_out_per_cluster: vec![0; k],
    };
    for (&h, &t) in labels_hat.iter().zip(truth) {
        if h >= k {
            return Err(Error::OutOfRange {
                what: "label",
                value: h,
                min: 0,
                max: k - 1,
            });
        }
        match t {
            Truth::Cluster(g) if g >= k => {
                return Err(Error::OutOfRange {
                    what: "truth label",
                    value: g,
                    min: 0,
                    max: k - 1,
                })
            }
            Truth::Cluster(g) => {
                c.n_gh[g][h] += 1;
                c.n_g_star[g] += 1;
                c.n_h_hat[h] += 1;
            }
            Truth::Outlier => c.n_out_per_cluster[h] += 1,
        }
    }
    Ok(c)
}

/// Fraction of non-outlier points whose label differs from the truth.
pub fn mislabeling_raw(labels_hat: &[usize], truth: &[Truth]) -> Result<f64> {
    if labels_hat.len() != truth.len() {
        return Err(Error::invalid(
            "labels",
            format!("{} labels for {} points", labels_hat.len(), truth.len()),
        ));
    }
    let mut n = 0usize;
    let mut wrong = 0usize;
    for (&h, t) in labels_hat.iter().zip(truth) {
        if let Truth::Cluster(g) = t {
            n += 1;
            wrong += (h != *g) as usize;
        }
    }
    if n == 0 {
        return Err(Error::Empty("non-outlier points"));
    }
    Ok(wrong as f64 / n as f64)
}

/// Rearranges `perm` into the next permutation in lexicographic order.
/// Returns false (and leaves `perm` sorted) after the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        perm.reverse();
        return false;
    };
    let j = perm.iter().rposition(|&x| x > perm[i]).expect("pivot has a successor");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

fn check_match_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if k > MAX_MATCH_K {
        return Err(Error::Unsupported(format!(
            "brute-force matching supports k <= {MAX_MATCH_K}, got {k}"
        )));
    }
    Ok(())
}

/// Minimum mislabeling proportion over all relabelings of the estimated clusters.
///
/// Ties go to the lexicographically smallest permutation.
pub fn mislabeling_aligned(labels_hat: &[usize], truth: &[Truth], k: usize) -> Result<Alignment> {
    check_match_k(k)?;
    let c = confusion(labels_hat, truth, k)?;
    let n = c.n_true();
    if n == 0 {
        return Err(Error::Empty("non-outlier points"));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_correct = 0;
    let mut first = true;
    loop {
        let correct: usize = perm.iter().enumerate().map(|(h, &g)| c.n_gh[g][h]).sum();
        if first || correct > best_correct {
            best_correct = correct;
            best.copy_from_slice(&perm);
            first = false;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(Alignment {
        mp: (n - best_correct) as f64 / n as f64,
        permutation: best,
    })
}

/// Applies `permutation` (estimated -> true) to a label vector.
pub fn relabel(labels_hat: &[usize], permutation: &[usize]) -> Vec<usize> {
    labels_hat.iter().map(|&h| permutation[h]).collect()
}

/// Largest centroid error over the best matching, normalized by `delta_sep`.
///
/// The matching minimizes the largest error; ties go to the lexicographically
/// smallest permutation.
pub fn centroid_error(
    centroids_hat: &[Vec<f64>],
    true_centroids: &[Vec<f64>],
    delta_sep: f64,
    k: usize,
) -> Result<CentroidError> {
    check_match_k(k)?;
    if centroids_hat.len() != k || true_centroids.len() != k {
        return Err(Error::invalid(
            "centroids",
            format!(
                "expected {k} centroids, got {} estimated and {} true",
                centroids_hat.len(),
                true_centroids.len()
            ),
        ));
    }
    if delta_sep.is_nan() || delta_sep <= 0.0 {
        return Err(Error::invalid("delta_sep", "must be positive"));
    }
    let dim = true_centroids[0].len();
    for c in centroids_hat.iter().chain(true_centroids) {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
    }
    // sq[h][g] = |hat_h - true_g|^2
    let sq: Vec<Vec<f64>> = centroids_hat
        .iter()
        .map(|a| true_centroids.iter().map(|b| squared_l2(a, b)).collect())
        .collect();

    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_max = f64::INFINITY;
    loop {
        let worst = perm
            .iter()
            .enumerate()
            .map(|(h, &g)| sq[h][g])
            .fold(0.0, f64::max);
        if worst < best_max {
            best_max = worst;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let mut per_cluster_sq = vec![0.0; k];
    for (h, &g) in best.iter().enumerate() {
        per_cluster_sq[g] = sq[h][g];
    }
    Ok(CentroidError {
        lambda: best_max.sqrt() / delta_sep,
        per_cluster_sq,
        permutation: best,
    })
}

/// Cluster-wise correct labeling proportion, exactly.
///
/// An empty denominator makes its ratio vacuously 1 here and 0 in
/// [`mislabeling_rate`], which keeps `G = 1 - H` exact whenever there are no
/// outliers.
pub fn correct_proportion(c: &ConfusionCounts) -> Fraction {
    (0..c.k)
        .map(|g| {
            let diag = c.n_gh[g][g];
            Fraction::new_or_one(diag, c.n_g_star[g]).min(Fraction::new_or_one(diag, c.estimated_size(g)))
        })
        .min()
        .expect("k >= 1")
}

/// Cluster-wise mislabeling rate, exactly.
pub fn mislabeling_rate(c: &ConfusionCounts) -> Fraction {
    (0..c.k)
        .map(|h| {
            let into_h: usize = (0..c.k).filter(|&g| g != h).map(|g| c.n_gh[g][h]).sum();
            let out_of_h: usize = (0..c.k).filter(|&g| g != h).map(|g| c.n_gh[h][g]).sum();
            Fraction::new(into_h, c.estimated_size(h)).max(Fraction::new(out_of_h, c.n_g_star[h]))
        })
        .max()
        .expect("k >= 1")
}

pub fn diagnostics(confusion: &ConfusionCounts, error: &CentroidError, dataset: &Dataset) -> Result<Diagnostics> {
    if error.per_cluster_sq.len() != confusion.k {
        return Err(Error::invalid(
            "k",
            format!(
                "confusion has k = {} but centroid error has {}",
                confusion.k,
                error.per_cluster_sq.len()
            ),
        ));
    }
    let h_exact = correct_proportion(confusion);
    let g_exact = mislabeling_rate(confusion);
    Ok(Diagnostics {
        h: h_exact.value(),
        g: g_exact.value(),
        h_exact,
        g_exact,
        lambda: error.lambda,
        alpha: dataset.alpha(),
        delta_sep: dataset.delta().unwrap_or(f64::NAN),
        snr: dataset.snr(),
    })
}

/// Sample mean with a normal-approximation 95% confidence half-width.
pub fn confidence_interval(samples: &[f64]) -> Result<MeanCi> {
    if samples.len() < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let n = samples.len() as f64;
    // shifted by the first sample so constant inputs give exactly zero spread
    let pivot = samples[0];
    let sum: f64 = samples.iter().map(|x| x - pivot).sum();
    let sum_sq: f64 = samples.iter().map(|x| (x - pivot).powi(2)).sum();
    let mean = pivot + sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    let std_error = var.sqrt() / n.sqrt();
    Ok(MeanCi {
        mean,
        half_width: 1.96 * std_error,
        std_error,
    })
}
