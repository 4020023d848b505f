//! Jenks natural breaks over a score vector.
//!
//! The optimal partition into `k` contiguous classes of the sorted values is
//! found by dynamic programming. The number of classes is the smallest `k`
//! whose goodness of variance fit `1 - SDCM/SDAM` reaches the target.

use crate::calibration::ScoreVector;
use crate::{Error, Result, Scalar};

use super::verdict::{check_ids, rank, Verdict};

/// Upper bound on the number of classes tried.
pub const MAX_JENKS_CLASSES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct JenksPartition<T> {
    /// Exclusive end index of each class in the input order.
    pub breaks: Vec<usize>,
    /// Sum of squared deviations from the class means.
    pub sdcm: T,
}

impl<T> JenksPartition<T> {
    pub fn n_classes(&self) -> usize {
        self.breaks.len()
    }

    /// Half-open index range of class `c`.
    pub fn class_range(&self, c: usize) -> std::ops::Range<usize> {
        let start = if c == 0 { 0 } else { self.breaks[c - 1] };
        start..self.breaks[c]
    }
}

/// Sum of squared deviations of `values` from their mean, two-pass.
fn squared_deviation<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let n = T::from_usize(values.len()).unwrap_or_else(T::one);
    let mean = values.iter().copied().sum::<T>() / n;
    values.iter().map(|&v| (v - mean) * (v - mean)).sum()
}

/// Optimal partition of `values` (already sorted, either direction) into
/// `k` non-empty contiguous classes.
pub fn jenks_partition<T: Scalar>(values: &[T], k: usize) -> Result<JenksPartition<T>> {
    let n = values.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n} values into {k} classes"
        )));
    }

    // cost[i][j]: squared deviation of values[i..=j], built with Welford
    // updates per start index.
    let mut cost = vec![vec![T::zero(); n]; n];
    for (i, row) in cost.iter_mut().enumerate() {
        let (mut mean, mut m2) = (T::zero(), T::zero());
        for (j, &v) in values.iter().enumerate().skip(i) {
            let count = T::from_usize(j - i + 1).unwrap_or_else(T::one);
            let delta = v - mean;
            mean = mean + delta / count;
            m2 = m2 + delta * (v - mean);
            row[j] = m2;
        }
    }

    // best[c][j]: minimal cost of splitting values[..j] into c + 1 classes.
    let inf = T::infinity();
    let mut best = vec![vec![inf; n + 1]; k];
    let mut split = vec![vec![0usize; n + 1]; k];
    for j in 1..=n {
        best[0][j] = cost[0][j - 1];
    }
    for c in 1..k {
        for j in c + 1..=n {
            for i in c..j {
                let candidate = best[c - 1][i] + cost[i][j - 1];
                if candidate < best[c][j] {
                    best[c][j] = candidate;
                    split[c][j] = i;
                }
            }
        }
    }

    let mut breaks = vec![0; k];
    let mut end = n;
    for c in (0..k).rev() {
        breaks[c] = end;
        if c > 0 {
            end = split[c][end];
        }
    }
    let mut start = 0;
    let mut sdcm = T::zero();
    for &b in &breaks {
        sdcm = sdcm + squared_deviation(&values[start..b]);
        start = b;
    }
    Ok(JenksPartition { breaks, sdcm })
}

/// Jenks detector. The class holding the highest scores is the candidate set.
///
/// Constant inputs have zero total variance and are treated as a perfect fit
/// with a single class.
pub fn detect_jenks<T: Scalar>(scores: &ScoreVector<T>, ids: &[usize], gvf_target: f64) -> Result<Verdict> {
    check_ids(scores.len(), ids)?;
    if !(gvf_target > 0.0 && gvf_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jenks GVF target must lie in (0, 1), got {gvf_target}"
        )));
    }
    if scores.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let order = rank(&scores.values, ids);
    let sorted: Vec<T> = order.iter().map(|&p| scores.values[p]).collect();
    let constant = sorted.first() == sorted.last();
    let sdam = if constant {
        T::zero()
    } else {
        squared_deviation(&sorted)
    };
    let target = T::from_param(gvf_target);

    let max_k = sorted.len().min(MAX_JENKS_CLASSES);
    let mut chosen = None;
    for k in 1..=max_k {
        let partition = jenks_partition(&sorted, k)?;
        let gvf = if sdam > T::zero() {
            T::one() - partition.sdcm / sdam
        } else {
            T::one()
        };
        let done = gvf >= target || k == max_k;
        chosen = Some(partition);
        if done {
            break;
        }
    }
    let partition = chosen.ok_or(Error::Empty("score vector"))?;
    let top = partition.class_range(0);
    Ok(Verdict::from_set(order[top].iter().map(|&p| ids[p]).collect()))
}
