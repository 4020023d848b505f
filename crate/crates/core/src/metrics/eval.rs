use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Scene;
use crate::uncertainty::{run_pipeline_traced, MethodSpec, VerdictStatus};
use crate::{Error, Result, Scalar};

use super::iou::is_correct;

/// Subset key holding every scene.
pub const ALL_SCENES: &str = "all";

/// One row of meta-classifier metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: MethodSpec,
    /// Certain and correct, over all scenes.
    pub cert_iou: f64,
    /// Certain and correct, over certain scenes.
    pub cert_acc: f64,
    /// Uncertain with a correct candidate in the set, over uncertain scenes.
    pub corr_unc: f64,
    /// `cert_iou + (n_uncertain / n_scenes) * corr_unc`.
    pub th_iou: f64,
    pub avg_unc_obj: f64,
    pub max_unc_obj: usize,
    pub n_scenes: usize,
    pub n_certain: usize,
    pub n_uncertain: usize,
    pub n_certain_correct: usize,
    pub n_uncertain_recoverable: usize,
    /// Threshold verdicts that fell back to the argmax; counted as uncertain.
    pub fallback_count: usize,
    /// Scenes where the class filter matched nothing and was bypassed.
    pub fail_open_count: usize,
    /// Remarks such as metrics defined as 0 because of an empty denominator.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    scenes: usize,
    certain: usize,
    certain_correct: usize,
    uncertain: usize,
    recoverable: usize,
    unc_objects: usize,
    max_unc: usize,
    fallback: usize,
    fail_open: usize,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            scenes: self.scenes + o.scenes,
            certain: self.certain + o.certain,
            certain_correct: self.certain_correct + o.certain_correct,
            uncertain: self.uncertain + o.uncertain,
            recoverable: self.recoverable + o.recoverable,
            unc_objects: self.unc_objects + o.unc_objects,
            max_unc: self.max_unc.max(o.max_unc),
            fallback: self.fallback + o.fallback,
            fail_open: self.fail_open + o.fail_open,
        }
    }
}

fn score_scene<T: Scalar>(scene: &Scene<T>, method: &MethodSpec) -> Result<Tally> {
    let outcome = run_pipeline_traced(scene, method)?;
    let verdict = outcome.verdict;
    let correct = |id: usize| scene.candidate(id).is_some_and(|c| is_correct(&c.bbox, &scene.gt_box));
    let mut t = Tally {
        scenes: 1,
        fail_open: usize::from(outcome.filter_fail_open),
        ..Tally::default()
    };
    match verdict.status {
        VerdictStatus::Certain => {
            t.certain = 1;
            t.certain_correct = usize::from(correct(verdict.candidate_ids[0]));
        }
        VerdictStatus::Uncertain => {
            t.uncertain = 1;
            t.recoverable = usize::from(verdict.candidate_ids.iter().any(|&id| correct(id)));
            t.unc_objects = verdict.candidate_ids.len();
            t.max_unc = verdict.candidate_ids.len();
            t.fallback = usize::from(verdict.below_threshold);
        }
    }
    Ok(t)
}

fn ratio(num: usize, den: usize, name: &str, notes: &mut Vec<String>) -> f64 {
    if den == 0 {
        notes.push(format!("{name}: empty denominator, reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Runs `method` over every scene and aggregates the six metrics.
///
/// The method is checked against every scene before any is processed.
pub fn evaluate_method<T: Scalar>(scenes: &[Scene<T>], method: &MethodSpec) -> Result<EvalReport> {
    if scenes.is_empty() {
        return Err(Error::Empty("scene list"));
    }
    method.check()?;
    for scene in scenes {
        method.check_scene(scene)?;
    }
    let tally = scenes
        .par_iter()
        .map(|s| score_scene(s, method))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let mut notes = Vec::new();
    let cert_iou = tally.certain_correct as f64 / tally.scenes as f64;
    let cert_acc = ratio(tally.certain_correct, tally.certain, "CertAcc", &mut notes);
    let corr_unc = ratio(tally.recoverable, tally.uncertain, "CorrUnc", &mut notes);
    let avg_unc_obj = ratio(tally.unc_objects, tally.uncertain, "AvgUncObj", &mut notes);
    // Same quantity as cert_iou + (n_uncertain / n) * corr_unc, but summed
    // over integer counts so a perfect meta-classifier scores exactly 1.
    let th_iou = (tally.certain_correct + tally.recoverable) as f64 / tally.scenes as f64;
    Ok(EvalReport {
        method: *method,
        cert_iou,
        cert_acc,
        corr_unc,
        th_iou,
        avg_unc_obj,
        max_unc_obj: tally.max_unc,
        n_scenes: tally.scenes,
        n_certain: tally.certain,
        n_uncertain: tally.uncertain,
        n_certain_correct: tally.certain_correct,
        n_uncertain_recoverable: tally.recoverable,
        fallback_count: tally.fallback,
        fail_open_count: tally.fail_open,
        notes,
    })
}

/// Selection thresholds a configuration has to meet to be reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Restrictions {
    /// Inclusive upper bound on `max_unc_obj`.
    pub max_unc_obj: usize,
    /// Strict lower bound on `th_iou`.
    pub th_iou_min: f64,
    /// Strict lower bound on `cert_acc`.
    pub cert_acc_min: f64,
}

impl Default for Restrictions {
    fn default() -> Self {
        Restrictions {
            max_unc_obj: 5,
            th_iou_min: 0.75,
            cert_acc_min: 0.8,
        }
    }
}

impl Restrictions {
    pub fn check(&self) -> Result<()> {
        if !(self.th_iou_min.is_finite() && self.cert_acc_min.is_finite()) {
            return Err(Error::Config("restriction bounds must be finite".into()));
        }
        Ok(())
    }

    pub fn admits(&self, r: &EvalReport) -> bool {
        r.max_unc_obj <= self.max_unc_obj && r.th_iou > self.th_iou_min && r.cert_acc > self.cert_acc_min
    }
}

/// Keeps the reports meeting the default restrictions, in order.
pub fn apply_restrictions(reports: &[EvalReport]) -> Vec<EvalReport> {
    apply_restrictions_with(reports, &Restrictions::default())
}

pub fn apply_restrictions_with(reports: &[EvalReport], restrictions: &Restrictions) -> Vec<EvalReport> {
    reports.iter().filter(|r| restrictions.admits(r)).cloned().collect()
}

/// One report per subset tag, plus [`ALL_SCENES`] over every scene.
/// A scene with several tags contributes to each of them.
pub fn evaluate_subsets<T: Scalar>(scenes: &[Scene<T>], method: &MethodSpec) -> Result<BTreeMap<String, EvalReport>> {
    let mut out = BTreeMap::new();
    if scenes.is_empty() {
        return Ok(out);
    }
    let mut groups: BTreeMap<&str, Vec<Scene<T>>> = BTreeMap::new();
    for scene in scenes {
        for tag in &scene.subset_tags {
            groups.entry(tag.as_str()).or_default().push(scene.clone());
        }
    }
    out.insert(ALL_SCENES.to_owned(), evaluate_method(scenes, method)?);
    for (tag, group) in groups {
        if tag == ALL_SCENES {
            continue;
        }
        out.insert(tag.to_owned(), evaluate_method(&group, method)?);
    }
    Ok(out)
}
