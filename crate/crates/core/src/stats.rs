//! Distances, order statistics and the two centroid estimators.
//!
//! The scalar median follows the "upper middle" convention: for `n` values it
//! is the `ceil(n/2)`-th largest, so for even `n` it returns the larger of the
//! two middle elements instead of their average. The returned value is always
//! one of the inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cost function used by a labeling step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    L2,
    L2Squared,
}

impl Metric {
    /// Distance between two equal-length slices. Lengths are only checked in
    /// debug builds; use [`distance`] at API boundaries.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::L2 => squared_l2(a, b).sqrt(),
            Metric::L2Squared => squared_l2(a, b),
        }
    }

    /// A value whose ordering over candidate centroids matches [`Metric::eval`].
    ///
    /// `L2` ranks by the squared distance so that `L2` and `L2Squared` pick the
    /// same nearest centroid bit-for-bit.
    #[inline]
    pub(crate) fn ranking_key(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::L1 => Metric::L1.eval(a, b),
            Metric::L2 | Metric::L2Squared => squared_l2(a, b),
        }
    }
}

#[inline]
pub(crate) fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Distance between `a` and `b` under `metric`.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(metric.eval(a, b))
}

/// The `t`-th largest element of `values` (1-indexed, duplicates counted).
pub fn order_statistic(values: &[f64], t: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if t == 0 || t > values.len() {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            min: 1,
            max: values.len(),
        });
    }
    let mut buf = values.to_vec();
    Ok(select_largest(&mut buf, t))
}

/// Scalar median: the `ceil(n/2)`-th largest value.
pub fn median_scalar(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    let mut buf = values.to_vec();
    Ok(median_in_place(&mut buf))
}

/// `t`-th largest of `buf`, reordering it. `1 <= t <= buf.len()`.
#[inline]
fn select_largest(buf: &mut [f64], t: usize) -> f64 {
    let idx = buf.len() - t;
    *buf.select_nth_unstable_by(idx, f64::total_cmp).1
}

/// Median of a non-empty buffer, reordering it.
#[inline]
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    select_largest(buf, buf.len().div_ceil(2))
}

fn check_rows<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let dim = points
        .first()
        .ok_or(Error::Empty("point set"))?
        .as_ref()
        .len();
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Coordinatewise median of a non-empty set of points.
pub fn coordinatewise_median<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let dim = check_rows(points)?;
    let rows: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let mut out = vec![0.0; dim];
    let mut buf = Vec::with_capacity(rows.len());
    median_of_rows(&rows, &mut buf, &mut out);
    Ok(out)
}

/// Coordinatewise arithmetic mean of a non-empty set of points.
pub fn coordinatewise_mean<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let dim = check_rows(points)?;
    let rows: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let mut out = vec![0.0; dim];
    mean_of_rows(&rows, &mut out);
    Ok(out)
}

/// Writes the coordinatewise median of `rows` into `out`. `buf` is scratch.
pub(crate) fn median_of_rows(rows: &[&[f64]], buf: &mut Vec<f64>, out: &mut [f64]) {
    debug_assert!(!rows.is_empty());
    for (j, slot) in out.iter_mut().enumerate() {
        buf.clear();
        buf.extend(rows.iter().map(|r| r[j]));
        *slot = median_in_place(buf);
    }
}

/// Writes the coordinatewise mean of `rows` into `out`, accumulating in row order.
pub(crate) fn mean_of_rows(rows: &[&[f64]], out: &mut [f64]) {
    debug_assert!(!rows.is_empty());
    out.fill(0.0);
    for r in rows {
        for (acc, v) in out.iter_mut().zip(r.iter()) {
            *acc += v;
        }
    }
    let n = rows.len() as f64;
    for acc in out.iter_mut() {
        *acc /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::L2).unwrap(), 5.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::L1).unwrap(), 7.0);
        assert_eq!(
            distance(&[1.0, 1.0], &[1.0, 1.0], Metric::L2Squared).unwrap(),
            0.0
        );
        assert!(matches!(
            distance(&[1.0], &[1.0, 2.0], Metric::L1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn order_statistic_examples() {
        assert_eq!(order_statistic(&[5.0, 1.0, 3.0], 1).unwrap(), 5.0);
        assert_eq!(order_statistic(&[5.0, 1.0, 3.0], 3).unwrap(), 1.0);
        assert_eq!(order_statistic(&[1.0, 2.0, 2.0, 9.0], 2).unwrap(), 2.0);
        assert!(order_statistic(&[1.0], 0).is_err());
        assert!(order_statistic(&[1.0], 2).is_err());
        assert!(order_statistic(&[], 1).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_scalar(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        // upper-middle convention, not 2.5
        assert_eq!(median_scalar(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 3.0);
        assert_eq!(median_scalar(&[7.0]).unwrap(), 7.0);
        assert!(matches!(median_scalar(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn coordinatewise_examples() {
        let pts = [[0.0, 0.0], [1.0, 2.0], [2.0, 1.0]];
        assert_eq!(coordinatewise_median(&pts).unwrap(), vec![1.0, 1.0]);
        assert_eq!(coordinatewise_median(&[[0.0, 0.0]]).unwrap(), vec![0.0, 0.0]);
        let even = [[0.0, 10.0], [1.0, 20.0], [2.0, 30.0], [3.0, 40.0]];
        assert_eq!(coordinatewise_median(&even).unwrap(), vec![2.0, 30.0]);

        assert_eq!(
            coordinatewise_mean(&[[0.0, 0.0], [2.0, 2.0]]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(coordinatewise_mean(&[[5.0, -6.0]]).unwrap(), vec![5.0, -6.0]);
        assert_eq!(
            coordinatewise_mean(&[[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]).unwrap(),
            vec![1.0, 1.0]
        );

        let empty: [[f64; 2]; 0] = [];
        assert!(coordinatewise_median(&empty).is_err());
        assert!(coordinatewise_mean(&empty).is_err());
        assert!(coordinatewise_mean(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    fn argmin(point: &[f64], centroids: &[Vec<f64>], metric: Metric) -> usize {
        let mut best = 0;
        for (h, c) in centroids.iter().enumerate() {
            if metric.eval(point, c) < metric.eval(point, &centroids[best]) {
                best = h;
            }
        }
        best
    }

    fn cloud(dim: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, dim), 1..max_n)
    }

    proptest! {
        #[test]
        fn l2_and_l2_squared_agree_on_argmin(
            point in prop::collection::vec(-50.0f64..50.0, 3),
            centroids in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..8),
        ) {
            prop_assert_eq!(
                argmin(&point, &centroids, Metric::L2),
                argmin(&point, &centroids, Metric::L2Squared)
            );
        }

        #[test]
        fn order_statistic_is_permutation_invariant(
            mut values in prop::collection::vec(-1e6f64..1e6, 1..40),
            t_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let t = 1 + ((values.len() - 1) as f64 * t_frac) as usize;
            let before = order_statistic(&values, t).unwrap();
            values.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(before.to_bits(), order_statistic(&values, t).unwrap().to_bits());
        }

        #[test]
        fn median_is_a_bounded_input_value(points in cloud(3, 30)) {
            let m = coordinatewise_median(&points).unwrap();
            for j in 0..3 {
                let col: Vec<f64> = points.iter().map(|p| p[j]).collect();
                prop_assert!(col.contains(&m[j]));
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= m[j] && m[j] <= hi);
            }
        }

        #[test]
        fn median_survives_minority_replacement(
            points in cloud(2, 40),
            frac in 0.0f64..1.0,
            far in prop::collection::vec(-1e9f64..1e9, 2),
        ) {
            let n = points.len();
            let m = ((n.div_ceil(2) - 1) as f64 * frac) as usize;
            let mut corrupted = points.clone();
            for p in corrupted.iter_mut().take(m) {
                p.clone_from(&far);
            }
            let med = coordinatewise_median(&corrupted).unwrap();
            for j in 0..2 {
                let survivors = points[m..].iter().map(|p| p[j]);
                let lo = survivors.clone().fold(f64::INFINITY, f64::min);
                let hi = survivors.fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= med[j] && med[j] <= hi);
            }
        }

        #[test]
        fn mean_moves_by_displacement_over_n(
            points in cloud(2, 30),
            r in 1.0f64..1e4,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let n = points.len() as f64;
            let before = coordinatewise_mean(&points).unwrap();
            let dir = [angle.cos(), angle.sin()];
            let mut moved = points.clone();
            moved[0] = vec![points[0][0] + r * dir[0], points[0][1] + r * dir[1]];
            let after = coordinatewise_mean(&moved).unwrap();
            for j in 0..2 {
                let expected = r * dir[j] / n;
                let tol = 1e-9 * (1.0 + r + before[j].abs() * n);
                prop_assert!(((after[j] - before[j]) - expected).abs() <= tol);
            }
        }

        #[test]
        fn estimators_are_translation_equivariant(
            points in cloud(3, 25),
            shift in prop::collection::vec(-100.0f64..100.0, 3),
        ) {
            let shifted: Vec<Vec<f64>> = points
                .iter()
                .map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect())
                .collect();
            let med = coordinatewise_median(&points).unwrap();
            let med_s = coordinatewise_median(&shifted).unwrap();
            let mean = coordinatewise_mean(&points).unwrap();
            let mean_s = coordinatewise_mean(&shifted).unwrap();
            for j in 0..3 {
                // x + c is monotone in x, so the selected order statistic is the same point
                prop_assert!((med_s[j] - (med[j] + shift[j])).abs() <= 1e-9 * (1.0 + med_s[j].abs()));
                prop_assert!((mean_s[j] - (mean[j] + shift[j])).abs() <= 1e-9 * (1.0 + mean_s[j].abs()));
            }
        }
    }
}
