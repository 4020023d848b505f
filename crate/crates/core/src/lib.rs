//! Post-hoc uncertainty detection for visual grounding.
//!
//! Given the per-candidate scores a grounding model produced for a command,
//! this crate decides whether the model is certain about the referred object.
//! When it is not, it returns the set of candidates causing the uncertainty,
//! scores whole pipelines with IoU-based meta-classifier metrics, and builds a
//! template clarification question from the candidates' attributes.
//!
//! The numeric core is generic over a [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file pin the common instantiations.
//!
//! Module map:
//!
//! * [`dataset`] - scene records, loading and validation, box normalization
//! * [`calibration`] - temperature scaling, ensemble averaging, output functions
//! * [`uncertainty`] - candidate filters, the meta-classifiers, the pipeline
//! * [`metrics`] - IoU, meta-classifier metrics, BLEU-4 and ROUGE-L
//! * [`questiongen`] - distance counts, expressions and the question template
//! * [`harness`] - grid search and report/question emission

pub mod calibration;
pub mod dataset;
mod error;
pub mod harness;
pub mod metrics;
pub mod questiongen;
mod scalar;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use calibration::{CalibSpec, Calibrated, EnsembleMode, OutputFn, ScoreVector};
pub use dataset::{AttributeSet, BoundingBox, Candidate, Location, Scene, ScoreKind, ScoreSet, Vocabulary};
pub use harness::{GridConfig, ReportFormat};
pub use metrics::{EvalReport, Restrictions};
pub use uncertainty::{Detector, FilterLevel, MethodSpec, Verdict, VerdictStatus};

pub type Scene64 = dataset::Scene<f64>;
pub type Scene32 = dataset::Scene<f32>;
pub type BoundingBox64 = dataset::BoundingBox<f64>;
pub type BoundingBox32 = dataset::BoundingBox<f32>;
pub type ScoreSet64 = dataset::ScoreSet<f64>;
pub type ScoreSet32 = dataset::ScoreSet<f32>;
pub type ScoreVector64 = calibration::ScoreVector<f64>;
pub type ScoreVector32 = calibration::ScoreVector<f32>;
