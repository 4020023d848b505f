use crate::calibration::{Calibrated, OutputFn, ScoreVector};
use crate::dataset::ScoreKind;
use crate::{Error, Result, Scalar};

use super::jenks::detect_jenks;
use super::verdict::{check_ids, rank, Verdict};

/// An uncertainty detector and its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    /// Softmax addition.
    Sa,
    /// Centroid agglomerative clustering with merge distance `delta`.
    Cahc { delta: f64 },
    /// Threshold over softmax probabilities.
    SoftTr { eta: f64 },
    /// Threshold over sigmoid scores.
    SigmTr { eta: f64 },
    /// Threshold over raw (logit or cosine) scores.
    Rlt { eta: f64 },
    /// Jenks natural breaks with a goodness-of-variance-fit target.
    Jenks { gvf: f64 },
    /// Ensemble voting.
    Ev,
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::Sa => "SA",
            Detector::Cahc { .. } => "CAHC",
            Detector::SoftTr { .. } => "SoftTr",
            Detector::SigmTr { .. } => "SigmTr",
            Detector::Rlt { .. } => "RLT",
            Detector::Jenks { .. } => "Jenks",
            Detector::Ev => "EV",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Detector::Cahc { delta } => Some(delta),
            Detector::SoftTr { eta } | Detector::SigmTr { eta } | Detector::Rlt { eta } => Some(eta),
            Detector::Jenks { gvf } => Some(gvf),
            Detector::Sa | Detector::Ev => None,
        }
    }

    /// Output function the detector is defined over, if it constrains one.
    pub fn required_output(&self) -> Option<OutputFn> {
        match self {
            Detector::Sa | Detector::Cahc { .. } | Detector::SoftTr { .. } => Some(OutputFn::Softmax),
            Detector::SigmTr { .. } => Some(OutputFn::Sigmoid),
            Detector::Rlt { .. } => Some(OutputFn::Raw),
            Detector::Jenks { .. } | Detector::Ev => None,
        }
    }

    /// Only ensemble voting consumes per-member vectors.
    pub fn needs_members(&self) -> bool {
        matches!(self, Detector::Ev)
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            Detector::Cahc { delta } if !(delta.is_finite() && delta > 0.0) => Err(Error::InvalidParameter(format!(
                "CAHC delta must be positive, got {delta}"
            ))),
            Detector::SoftTr { eta } | Detector::SigmTr { eta } if !(0.0..=1.0).contains(&eta) => Err(
                Error::InvalidParameter(format!("threshold must lie in [0, 1], got {eta}")),
            ),
            Detector::Rlt { eta } if !eta.is_finite() => Err(Error::NonFinite("threshold")),
            Detector::Jenks { gvf } if !(gvf > 0.0 && gvf < 1.0) => Err(Error::InvalidParameter(format!(
                "Jenks GVF target must lie in (0, 1), got {gvf}"
            ))),
            _ => Ok(()),
        }
    }

    /// Runs the detector; `ids[i]` is the candidate id of score position `i`.
    pub fn detect<T: Scalar>(&self, calibrated: &Calibrated<T>, ids: &[usize]) -> Result<Verdict> {
        match (self, calibrated) {
            (Detector::Ev, Calibrated::Members(members)) => detect_ev(members, ids),
            (Detector::Ev, Calibrated::Single(_)) => {
                Err(Error::Config("ensemble voting needs per-member score vectors".into()))
            }
            (_, Calibrated::Members(_)) => Err(Error::Config(format!(
                "{} needs a single calibrated score vector",
                self.name()
            ))),
            (Detector::Sa, Calibrated::Single(v)) => detect_sa(v, ids),
            (Detector::Cahc { delta }, Calibrated::Single(v)) => detect_cahc(v, ids, T::from_param(*delta)),
            (Detector::SoftTr { eta } | Detector::SigmTr { eta } | Detector::Rlt { eta }, Calibrated::Single(v)) => {
                detect_threshold(v, ids, T::from_param(*eta))
            }
            (Detector::Jenks { gvf }, Calibrated::Single(v)) => detect_jenks(v, ids, *gvf),
        }
    }
}

fn require_softmax<T: Scalar>(scores: &ScoreVector<T>, who: &str) -> Result<()> {
    if scores.kind != ScoreKind::Softmax {
        return Err(Error::InvalidParameter(format!(
            "{who} expects softmax probabilities, got {:?}",
            scores.kind
        )));
    }
    Ok(())
}

/// Softmax addition: the smallest top-k whose probability mass exceeds the
/// mass of the remaining candidates. `k = 1` is certain.
pub fn detect_sa<T: Scalar>(scores: &ScoreVector<T>, ids: &[usize]) -> Result<Verdict> {
    check_ids(scores.len(), ids)?;
    require_softmax(scores, "softmax addition")?;
    let values = &scores.values;
    let order = rank(values, ids);
    let mut k = order.len();
    let mut top = T::zero();
    for (i, &pos) in order.iter().enumerate() {
        top = top + values[pos];
        let rest: T = order[i + 1..].iter().map(|&p| values[p]).sum();
        if top > rest {
            k = i + 1;
            break;
        }
    }
    Ok(Verdict::from_set(order[..k].iter().map(|&p| ids[p]).collect()))
}

/// Centroid agglomerative clustering of the probabilities.
///
/// The closest pair of clusters is merged while its centroid distance is
/// below `delta`; a merged centroid is the mean of its members' values. The
/// cluster with the largest centroid forms the candidate set.
pub fn detect_cahc<T: Scalar>(scores: &ScoreVector<T>, ids: &[usize], delta: T) -> Result<Verdict> {
    check_ids(scores.len(), ids)?;
    require_softmax(scores, "CAHC")?;
    if !(delta.is_finite() && delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "CAHC delta must be positive, got {delta}"
        )));
    }
    let values = &scores.values;
    let order = rank(values, ids);

    // Clusters hold rank indices, kept sorted.
    let mut clusters: Vec<Vec<usize>> = (0..order.len()).map(|r| vec![r]).collect();
    let mut centroids: Vec<T> = order.iter().map(|&p| values[p]).collect();
    loop {
        let mut best: Option<(usize, usize, T)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = (centroids[i] - centroids[j]).abs();
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = best.filter(|&(_, _, d)| d < delta) else {
            break;
        };
        let merged = clusters.remove(j);
        centroids.remove(j);
        clusters[i].extend(merged);
        clusters[i].sort_unstable();
        let n = T::from_usize(clusters[i].len()).unwrap_or_else(T::one);
        centroids[i] = clusters[i].iter().map(|&r| values[order[r]]).sum::<T>() / n;
    }

    let mut top = 0;
    for c in 1..clusters.len() {
        if centroids[c] > centroids[top] {
            top = c;
        }
    }
    Ok(Verdict::from_set(
        clusters[top].iter().map(|&r| ids[order[r]]).collect(),
    ))
}

/// Thresholding: every candidate scoring strictly above `eta` is kept.
///
/// An empty set falls back to the argmax as a single uncertain candidate with
/// `below_threshold` set.
pub fn detect_threshold<T: Scalar>(scores: &ScoreVector<T>, ids: &[usize], eta: T) -> Result<Verdict> {
    check_ids(scores.len(), ids)?;
    if !eta.is_finite() {
        return Err(Error::NonFinite("threshold"));
    }
    if let Some((lo, hi)) = scores.kind.range() {
        if eta < T::from_param(lo) || eta > T::from_param(hi) {
            return Err(Error::InvalidParameter(format!(
                "threshold {eta} outside the range of {:?} scores",
                scores.kind
            )));
        }
    }
    let values = &scores.values;
    let order = rank(values, ids);
    let kept: Vec<usize> = order.iter().filter(|&&p| values[p] > eta).map(|&p| ids[p]).collect();
    if kept.is_empty() {
        return Ok(Verdict::below_threshold(ids[order[0]]));
    }
    Ok(Verdict::from_set(kept))
}

/// Ensemble voting: each member votes its argmax (ties to the lowest id).
/// Unanimity is certain; otherwise the distinct votes form the candidate set,
/// ordered by mean member score.
pub fn detect_ev<T: Scalar>(members: &[ScoreVector<T>], ids: &[usize]) -> Result<Verdict> {
    let first = members.first().ok_or(Error::Empty("ensemble member list"))?;
    check_ids(first.len(), ids)?;
    if members.iter().any(|m| m.len() != ids.len()) {
        return Err(Error::InvalidParameter("member vectors differ in length".into()));
    }

    let mut voted = vec![false; ids.len()];
    for m in members {
        let mut best = 0;
        for p in 1..m.len() {
            let (v, bv) = (m.values[p], m.values[best]);
            if v > bv || (v == bv && ids[p] < ids[best]) {
                best = p;
            }
        }
        voted[best] = true;
    }

    let count = T::from_usize(members.len()).unwrap_or_else(T::one);
    let mean: Vec<T> = (0..ids.len())
        .map(|p| members.iter().map(|m| m.values[p]).sum::<T>() / count)
        .collect();
    let set = rank(&mean, ids)
        .into_iter()
        .filter(|&p| voted[p])
        .map(|p| ids[p])
        .collect();
    Ok(Verdict::from_set(set))
}
