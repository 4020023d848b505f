//! Canonical scene records.
//!
//! One scene per line of UTF-8 JSON. A scene holds the command, the candidate
//! objects proposed by the region proposal network (sorted by `rpn_score`
//! descending), the ensemble score matrix over those candidates and the
//! ground-truth box. Every invariant is checked at load time so the rest of
//! the crate can assume well-formed input.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Axis-aligned box in pixels, anchored at its top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.check().map_err(Error::InvalidParameter)?;
        Ok(b)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let coords = [self.x, self.y, self.w, self.h];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err("box coordinates must be finite".into());
        }
        if self.w <= T::zero() || self.h <= T::zero() {
            return Err(format!("box size must be positive, got {}x{}", self.w, self.h));
        }
        if self.x < T::zero() || self.y < T::zero() {
            return Err(format!("box corner must be non-negative, got ({}, {})", self.x, self.y));
        }
        Ok(())
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn fits_in(&self, width: T, height: T) -> bool {
        self.right() <= width && self.bottom() <= height
    }
}

/// Normalized box feature `[x/W, y/H, (x+w)/W, (y+h)/H]`.
pub fn normalize_box<T: Scalar>(bbox: &BoundingBox<T>, image_width: T, image_height: T) -> Result<[T; 4]> {
    if !(image_width > T::zero() && image_height > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "image dimensions must be positive, got {image_width}x{image_height}"
        )));
    }
    bbox.check().map_err(Error::InvalidParameter)?;
    if !bbox.fits_in(image_width, image_height) {
        return Err(Error::InvalidParameter(format!(
            "box {bbox:?} exceeds image bounds {image_width}x{image_height}"
        )));
    }
    Ok([
        bbox.x / image_width,
        bbox.y / image_height,
        bbox.right() / image_width,
        bbox.bottom() / image_height,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Left,
    Front,
    Right,
}

impl Location {
    pub fn phrase(self) -> &'static str {
        match self {
            Location::Left => "on the left",
            Location::Front => "in front",
            Location::Right => "on the right",
        }
    }
}

/// Object attributes. Color and action may be missing for objects the
/// annotators left blank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSet {
    pub color: Option<String>,
    pub action: Option<String>,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate<T> {
    pub id: usize,
    #[serde(rename = "box")]
    pub bbox: BoundingBox<T>,
    pub rpn_score: T,
    pub class_label: String,
    pub superclass_label: String,
    pub attributes: Option<AttributeSet>,
    /// Distance in meters to the closest LiDAR point inside the box.
    pub lidar_distance: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    RawLogit,
    Cosine,
    Softmax,
    Sigmoid,
}

impl ScoreKind {
    /// Closed range of valid values, `None` when unbounded.
    pub fn range(self) -> Option<(f64, f64)> {
        match self {
            ScoreKind::RawLogit => None,
            ScoreKind::Cosine => Some((-1.0, 1.0)),
            ScoreKind::Softmax | ScoreKind::Sigmoid => Some((0.0, 1.0)),
        }
    }
}

/// Ensemble score matrix: one row per ensemble member, one column per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet<T> {
    pub kind: ScoreKind,
    pub members: Vec<Vec<T>>,
}

impl<T: Scalar> ScoreSet<T> {
    pub fn new(kind: ScoreKind, members: Vec<Vec<T>>) -> Result<Self> {
        let set = ScoreSet { kind, members };
        set.check().map_err(Error::InvalidParameter)?;
        Ok(set)
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_candidates(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> ScoreSet<T> {
        ScoreSet {
            kind: self.kind,
            members: self
                .members
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect(),
        }
    }

    /// Keep the first `n` members.
    pub fn truncate_members(&self, n: usize) -> ScoreSet<T> {
        ScoreSet {
            kind: self.kind,
            members: self.members.iter().take(n).cloned().collect(),
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.members.is_empty() {
            return Err("score matrix has no members".into());
        }
        let n = self.n_candidates();
        if self.members.iter().any(|row| row.len() != n) {
            return Err("score matrix rows have different lengths".into());
        }
        if self.members.iter().flatten().any(|v| !v.is_finite()) {
            return Err("score matrix contains non-finite entries".into());
        }
        let in_range = |lo: f64, hi: f64| {
            let (lo, hi) = (T::from_param(lo), T::from_param(hi));
            self.members.iter().flatten().all(|&v| v >= lo && v <= hi)
        };
        match self.kind {
            ScoreKind::RawLogit => {}
            ScoreKind::Cosine if !in_range(-1.0, 1.0) => {
                return Err("cosine scores must lie in [-1, 1]".into());
            }
            ScoreKind::Sigmoid if !in_range(0.0, 1.0) => {
                return Err("sigmoid scores must lie in [0, 1]".into());
            }
            ScoreKind::Softmax => {
                if !in_range(0.0, 1.0) {
                    return Err("softmax scores must lie in [0, 1]".into());
                }
                let tol = T::from_param(1e-6);
                if self
                    .members
                    .iter()
                    .any(|row| (row.iter().copied().sum::<T>() - T::one()).abs() > tol)
                {
                    return Err("softmax rows must sum to 1".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub scene_id: String,
    pub command: String,
    pub image_width: u32,
    pub image_height: u32,
    /// Referred class predicted from the command.
    pub predicted_class: String,
    pub predicted_superclass: String,
    #[serde(default)]
    pub subset_tags: BTreeSet<String>,
    pub gt_box: BoundingBox<T>,
    pub candidates: Vec<Candidate<T>>,
    pub scores: ScoreSet<T>,
}

impl<T: Scalar> Scene<T> {
    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidate(&self, id: usize) -> Option<&Candidate<T>> {
        self.candidates.iter().find(|c| c.id == id)
    }

    /// Checks every record invariant, optionally against a closed vocabulary.
    pub fn validate(&self, vocab: Option<&Vocabulary>) -> Result<()> {
        let fail = |what: String| Error::invariant(&self.scene_id, what);
        if self.image_width == 0 || self.image_height == 0 {
            return Err(fail("image dimensions must be positive".into()));
        }
        if self.candidates.is_empty() {
            return Err(fail("scene has no candidates".into()));
        }
        let (width, height) = (
            T::from_param(self.image_width.into()),
            T::from_param(self.image_height.into()),
        );
        self.gt_box.check().map_err(|e| fail(format!("gt_box: {e}")))?;

        let n = self.candidates.len();
        let mut seen = HashSet::with_capacity(n);
        for c in &self.candidates {
            if c.id >= n || !seen.insert(c.id) {
                return Err(fail(format!(
                    "candidate ids must be distinct and contiguous from 0 (id {})",
                    c.id
                )));
            }
            c.bbox.check().map_err(|e| fail(format!("candidate {}: {e}", c.id)))?;
            if !c.bbox.fits_in(width, height) {
                return Err(fail(format!("candidate {}: box exceeds image bounds", c.id)));
            }
            if !(c.rpn_score >= T::zero() && c.rpn_score <= T::one()) {
                return Err(fail(format!("candidate {}: rpn_score must lie in [0, 1]", c.id)));
            }
            if let Some(d) = c.lidar_distance {
                if !(d.is_finite() && d > T::zero()) {
                    return Err(fail(format!("candidate {}: lidar_distance must be positive", c.id)));
                }
            }
            if let (Some(vocab), Some(attrs)) = (vocab, &c.attributes) {
                vocab
                    .check(attrs)
                    .map_err(|e| fail(format!("candidate {}: {e}", c.id)))?;
            }
        }
        if self.candidates.windows(2).any(|w| w[0].rpn_score < w[1].rpn_score) {
            return Err(fail("candidates must be sorted by rpn_score descending".into()));
        }

        if !matches!(self.scores.kind, ScoreKind::RawLogit | ScoreKind::Cosine) {
            return Err(fail("scores must be stored as raw logits or cosine scores".into()));
        }
        if self.scores.members.iter().any(|row| row.len() != n) {
            return Err(fail("score/candidate count mismatch".into()));
        }
        self.scores.check().map_err(fail)?;
        Ok(())
    }
}

/// Closed color and action vocabularies, shipped as a sidecar JSON file
/// `{"colors": [...], "actions": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub colors: Vec<String>,
    pub actions: Vec<String>,
}

impl Vocabulary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    pub fn check(&self, attrs: &AttributeSet) -> std::result::Result<(), String> {
        if let Some(color) = &attrs.color {
            if !self.colors.iter().any(|c| c == color) {
                return Err(format!("color `{color}` not in vocabulary"));
            }
        }
        if let Some(action) = &attrs.action {
            if !self.actions.iter().any(|a| a == action) {
                return Err(format!("action `{action}` not in vocabulary"));
            }
        }
        Ok(())
    }
}

/// Parses and validates one record. `line` is 1-based and only used for errors.
pub fn parse_scene_line<T>(text: &str, line: usize, vocab: Option<&Vocabulary>) -> Result<Scene<T>>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    let scene: Scene<T> = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    scene.validate(vocab)?;
    Ok(scene)
}

pub fn read_scenes<T, R>(reader: R, vocab: Option<&Vocabulary>) -> Result<Vec<Scene<T>>>
where
    T: Scalar + for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut scenes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        scenes.push(parse_scene_line(&line, idx + 1, vocab)?);
    }
    Ok(scenes)
}

pub fn load_scenes<T>(path: impl AsRef<Path>) -> Result<Vec<Scene<T>>>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    load_scenes_with_vocab(path, None)
}

pub fn load_scenes_with_vocab<T>(path: impl AsRef<Path>, vocab: Option<&Vocabulary>) -> Result<Vec<Scene<T>>>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    let file = File::open(path)?;
    read_scenes(BufReader::new(file), vocab)
}

pub fn to_record_line<T: Scalar + Serialize>(scene: &Scene<T>) -> Result<String> {
    Ok(serde_json::to_string(scene)?)
}

pub fn write_scenes<T: Scalar + Serialize>(path: impl AsRef<Path>, scenes: &[Scene<T>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for scene in scenes {
        serde_json::to_writer(&mut out, scene)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
