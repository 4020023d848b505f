use serde::Serialize;

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Certain,
    Uncertain,
}

/// Outcome of a meta-classifier on one scene.
///
/// `candidate_ids` is ordered by descending calibrated score, ties by
/// ascending id. A certain verdict holds exactly one id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub candidate_ids: Vec<usize>,
    /// Set when thresholding left no candidate above the threshold and the
    /// argmax was kept as a single uncertain candidate.
    pub below_threshold: bool,
}

impl Verdict {
    pub fn certain(id: usize) -> Self {
        Verdict {
            status: VerdictStatus::Certain,
            candidate_ids: vec![id],
            below_threshold: false,
        }
    }

    /// Certain for a single id, uncertain otherwise.
    pub(crate) fn from_set(ids: Vec<usize>) -> Self {
        debug_assert!(!ids.is_empty());
        if ids.len() == 1 {
            Verdict::certain(ids[0])
        } else {
            Verdict {
                status: VerdictStatus::Uncertain,
                candidate_ids: ids,
                below_threshold: false,
            }
        }
    }

    pub(crate) fn below_threshold(id: usize) -> Self {
        Verdict {
            status: VerdictStatus::Uncertain,
            candidate_ids: vec![id],
            below_threshold: true,
        }
    }

    pub fn is_certain(&self) -> bool {
        self.status == VerdictStatus::Certain
    }
}

pub(crate) fn check_ids(n: usize, ids: &[usize]) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("score vector"));
    }
    if ids.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} candidate ids given for {n} scores",
            ids.len()
        )));
    }
    Ok(())
}

/// Positions sorted by descending score, ties by ascending candidate id.
pub(crate) fn rank<T: Scalar>(values: &[T], ids: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ids[a].cmp(&ids[b]))
    });
    order
}
