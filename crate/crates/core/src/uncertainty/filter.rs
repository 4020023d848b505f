use serde::{Deserialize, Serialize};

use crate::dataset::{Candidate, ScoreSet};
use crate::{Error, Result, Scalar};

/// Which label a class filter compares against the predicted referred class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterLevel {
    #[serde(rename = "CF")]
    Class,
    #[serde(rename = "SCF")]
    Superclass,
}

impl FilterLevel {
    pub fn token(self) -> &'static str {
        match self {
            FilterLevel::Class => "CF",
            FilterLevel::Superclass => "SCF",
        }
    }

    pub(crate) fn label<T>(self, c: &Candidate<T>) -> &str {
        match self {
            FilterLevel::Class => &c.class_label,
            FilterLevel::Superclass => &c.superclass_label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered<T> {
    pub candidates: Vec<Candidate<T>>,
    pub scores: ScoreSet<T>,
    /// No candidate matched and the input was returned unchanged.
    pub fail_open: bool,
}

/// Keeps the first `min(k, N)` candidates and their score columns.
/// Candidates are sorted by RPN score, so this is the RPN top-k.
pub fn select_topk<T: Scalar>(
    candidates: &[Candidate<T>],
    scores: &ScoreSet<T>,
    k: usize,
) -> Result<(Vec<Candidate<T>>, ScoreSet<T>)> {
    let positions = topk_positions(candidates.len(), k)?;
    Ok((
        candidates[..positions.len()].to_vec(),
        scores.select_columns(&positions),
    ))
}

pub(crate) fn topk_positions(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("top-k must be at least 1".into()));
    }
    Ok((0..n.min(k)).collect())
}

/// Drops candidates whose (super)class differs from `referred`. Fails open:
/// when nothing matches, the input comes back unchanged with `fail_open` set.
pub fn filter_class<T: Scalar>(
    candidates: &[Candidate<T>],
    scores: &ScoreSet<T>,
    referred: &str,
    level: FilterLevel,
) -> Filtered<T> {
    let all: Vec<usize> = (0..candidates.len()).collect();
    let (kept, fail_open) = class_positions(candidates, &all, referred, level);
    Filtered {
        candidates: kept.iter().map(|&p| candidates[p].clone()).collect(),
        scores: scores.select_columns(&kept),
        fail_open,
    }
}

pub(crate) fn class_positions<T>(
    candidates: &[Candidate<T>],
    positions: &[usize],
    referred: &str,
    level: FilterLevel,
) -> (Vec<usize>, bool) {
    let kept: Vec<usize> = positions
        .iter()
        .copied()
        .filter(|&p| level.label(&candidates[p]) == referred)
        .collect();
    if kept.is_empty() {
        (positions.to_vec(), true)
    } else {
        (kept, false)
    }
}
