use crate::calibration::calibrate;
use crate::dataset::Scene;
use crate::{Result, Scalar};

use super::filter::{class_positions, topk_positions, FilterLevel};
use super::method::MethodSpec;
use super::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineOutcome {
    pub verdict: Verdict,
    /// The class filter matched nothing and was bypassed.
    pub filter_fail_open: bool,
}

/// Top-k, optional class filter, calibration, detector. Candidate ids in the
/// verdict are the scene's own ids.
pub fn run_pipeline<T: Scalar>(scene: &Scene<T>, method: &MethodSpec) -> Result<Verdict> {
    run_pipeline_traced(scene, method).map(|o| o.verdict)
}

pub fn run_pipeline_traced<T: Scalar>(scene: &Scene<T>, method: &MethodSpec) -> Result<PipelineOutcome> {
    method.check()?;
    method.check_scene(scene)?;

    let mut positions = topk_positions(scene.n_candidates(), method.top_k)?;
    let mut filter_fail_open = false;
    if let Some(level) = method.filter {
        let referred = match level {
            FilterLevel::Class => &scene.predicted_class,
            FilterLevel::Superclass => &scene.predicted_superclass,
        };
        let (kept, fail_open) = class_positions(&scene.candidates, &positions, referred, level);
        positions = kept;
        filter_fail_open = fail_open;
    }

    let ids: Vec<usize> = positions.iter().map(|&p| scene.candidates[p].id).collect();
    let scores = scene.scores.select_columns(&positions);
    let calibrated = calibrate(&scores, &method.calibration)?;
    let verdict = method.detector.detect(&calibrated, &ids)?;
    Ok(PipelineOutcome {
        verdict,
        filter_fail_open,
    })
}
