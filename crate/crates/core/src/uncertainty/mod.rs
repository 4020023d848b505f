//! Meta-classifiers that label a grounding prediction certain or uncertain,
//! and the candidate filters and pipeline that feed them.

mod detectors;
mod filter;
mod jenks;
mod method;
mod pipeline;
mod verdict;

pub use detectors::{detect_cahc, detect_ev, detect_sa, detect_threshold, Detector};
pub use filter::{filter_class, select_topk, FilterLevel, Filtered};
pub use jenks::{detect_jenks, jenks_partition, JenksPartition, MAX_JENKS_CLASSES};
pub use method::MethodSpec;
pub use pipeline::{run_pipeline, run_pipeline_traced, PipelineOutcome};
pub use verdict::{Verdict, VerdictStatus};
