//! Score calibration: temperature-scaled softmax, sigmoid, ensemble averaging.
//!
//! Temperature is applied per ensemble member before averaging. The ensemble
//! distribution is the unweighted mean over all members.

use serde::{Deserialize, Serialize};

use crate::dataset::{ScoreKind, ScoreSet};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFn {
    Softmax,
    Sigmoid,
    /// Scores are passed through untouched.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// Use one member's scores.
    Single(usize),
    /// Mean of the per-member outputs.
    Average,
    /// Every member's output separately, for ensemble voting.
    KeepMembers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibSpec {
    pub temperature: f64,
    pub output_fn: OutputFn,
    pub ensemble_mode: EnsembleMode,
    /// Number of leading members forming the ensemble (`Ens_E`); all members when `None`.
    /// Ignored for [`EnsembleMode::Single`].
    pub ensemble_size: Option<usize>,
}

impl Default for CalibSpec {
    fn default() -> Self {
        CalibSpec {
            temperature: 1.0,
            output_fn: OutputFn::Softmax,
            ensemble_mode: EnsembleMode::Single(0),
            ensemble_size: None,
        }
    }
}

impl CalibSpec {
    pub fn ensemble(size: usize, mode: EnsembleMode) -> Self {
        CalibSpec {
            ensemble_mode: mode,
            ensemble_size: Some(size),
            ..CalibSpec::default()
        }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        CalibSpec { temperature, ..self }
    }

    pub fn with_output(self, output_fn: OutputFn) -> Self {
        CalibSpec { output_fn, ..self }
    }

    /// Checks the parts of the spec that do not depend on the data.
    pub fn check(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.output_fn == OutputFn::Raw && self.temperature != 1.0 {
            return Err(Error::InvalidParameter(
                "temperature is only defined for softmax and sigmoid outputs".into(),
            ));
        }
        if self.ensemble_size == Some(0) {
            return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks the spec against a score matrix with `n_members` rows.
    pub fn check_members(&self, n_members: usize) -> Result<()> {
        self.check()?;
        match self.ensemble_mode {
            EnsembleMode::Single(i) if i >= n_members => Err(Error::InvalidParameter(format!(
                "member index {i} out of range for {n_members} members"
            ))),
            EnsembleMode::Average | EnsembleMode::KeepMembers => match self.ensemble_size {
                Some(e) if e > n_members => Err(Error::InvalidParameter(format!(
                    "ensemble of {e} requested but only {n_members} members available"
                ))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Kind of the vectors `calibrate` produces from scores of kind `input`.
    pub fn output_kind(&self, input: ScoreKind) -> ScoreKind {
        match self.output_fn {
            OutputFn::Softmax => ScoreKind::Softmax,
            OutputFn::Sigmoid => ScoreKind::Sigmoid,
            OutputFn::Raw => input,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T> {
    pub values: Vec<T>,
    pub kind: ScoreKind,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn new(values: Vec<T>, kind: ScoreKind) -> Self {
        ScoreVector { values, kind }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of the highest score; ties go to the lowest position.
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.values)
    }
}

pub(crate) fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Result of [`calibrate`]: one vector, or one per member.
#[derive(Debug, Clone, PartialEq)]
pub enum Calibrated<T> {
    Single(ScoreVector<T>),
    Members(Vec<ScoreVector<T>>),
}

impl<T: Scalar> Calibrated<T> {
    pub fn n_candidates(&self) -> usize {
        match self {
            Calibrated::Single(v) => v.len(),
            Calibrated::Members(vs) => vs.first().map_or(0, ScoreVector::len),
        }
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    Ok(())
}

fn check_temperature<T: Scalar>(temperature: T) -> Result<()> {
    if !(temperature.is_finite() && temperature > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok(())
}

/// `exp(z_i / t) / sum_j exp(z_j / t)`, with the maximum subtracted first.
pub fn softmax_with_temperature<T: Scalar>(logits: &[T], temperature: T) -> Result<ScoreVector<T>> {
    check_temperature(temperature)?;
    check_finite(logits)?;
    Ok(ScoreVector::new(
        softmax_unchecked(logits, temperature),
        ScoreKind::Softmax,
    ))
}

fn softmax_unchecked<T: Scalar>(logits: &[T], temperature: T) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| ((z - max) / temperature).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Element-wise logistic function. Saturates without overflow.
pub fn sigmoid_scores<T: Scalar>(logits: &[T]) -> Result<ScoreVector<T>> {
    check_finite(logits)?;
    Ok(ScoreVector::new(
        logits.iter().map(|&z| sigmoid(z)).collect(),
        ScoreKind::Sigmoid,
    ))
}

/// Mean of the temperature-scaled softmax of every member row.
pub fn ensemble_average<T: Scalar>(scores: &ScoreSet<T>, temperature: T) -> Result<ScoreVector<T>> {
    if scores.members.is_empty() || scores.n_candidates() == 0 {
        return Err(Error::Empty("score matrix"));
    }
    if !matches!(scores.kind, ScoreKind::RawLogit | ScoreKind::Cosine) {
        return Err(Error::InvalidParameter(format!(
            "ensemble averaging expects raw logits or cosine scores, got {:?}",
            scores.kind
        )));
    }
    let rows = scores
        .members
        .iter()
        .map(|row| softmax_with_temperature(row, temperature).map(|v| v.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreVector::new(column_mean(&rows), ScoreKind::Softmax))
}

fn column_mean<T: Scalar>(rows: &[Vec<T>]) -> Vec<T> {
    let n = rows[0].len();
    let count = T::from_usize(rows.len()).unwrap_or_else(T::one);
    (0..n).map(|j| rows.iter().map(|r| r[j]).sum::<T>() / count).collect()
}

fn transform_row<T: Scalar>(row: &[T], spec: &CalibSpec, kind: ScoreKind) -> Result<ScoreVector<T>> {
    let temperature = T::from_param(spec.temperature);
    match spec.output_fn {
        OutputFn::Softmax => softmax_with_temperature(row, temperature),
        OutputFn::Sigmoid => {
            check_temperature(temperature)?;
            let scaled: Vec<T> = row.iter().map(|&z| z / temperature).collect();
            sigmoid_scores(&scaled)
        }
        OutputFn::Raw => {
            check_finite(row)?;
            Ok(ScoreVector::new(row.to_vec(), kind))
        }
    }
}

/// Applies a [`CalibSpec`] to an ensemble score matrix.
pub fn calibrate<T: Scalar>(scores: &ScoreSet<T>, spec: &CalibSpec) -> Result<Calibrated<T>> {
    if scores.members.is_empty() || scores.n_candidates() == 0 {
        return Err(Error::Empty("score matrix"));
    }
    spec.check_members(scores.n_members())?;
    let size = spec.ensemble_size.unwrap_or(scores.n_members());
    let members = &scores.members[..size.min(scores.n_members())];
    match spec.ensemble_mode {
        EnsembleMode::Single(i) => transform_row(&scores.members[i], spec, scores.kind).map(Calibrated::Single),
        EnsembleMode::KeepMembers => members
            .iter()
            .map(|row| transform_row(row, spec, scores.kind))
            .collect::<Result<Vec<_>>>()
            .map(Calibrated::Members),
        EnsembleMode::Average => {
            let rows = members
                .iter()
                .map(|row| transform_row(row, spec, scores.kind).map(|v| v.values))
                .collect::<Result<Vec<_>>>()?;
            Ok(Calibrated::Single(ScoreVector::new(
                column_mean(&rows),
                spec.output_kind(scores.kind),
            )))
        }
    }
}
