mod common;

use ug_core::metrics::{apply_restrictions, evaluate_method, evaluate_subsets, ALL_SCENES};
use ug_core::uncertainty::run_pipeline;
use ug_core::{EvalReport, MethodSpec, Scene64};

fn method(s: &str) -> MethodSpec {
    s.parse().unwrap()
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Top-1 accuracy of member 0, using that only the target box equals the
/// ground truth in the synthetic scenes.
fn top1_accuracy(scenes: &[Scene64]) -> f64 {
    let hits = scenes
        .iter()
        .filter(|s| s.candidates[first_argmax(&s.scores.members[0])].bbox == s.gt_box)
        .count();
    hits as f64 / scenes.len() as f64
}

fn assert_identity(r: &EvalReport) {
    assert_eq!(r.n_certain + r.n_uncertain, r.n_scenes);
    let th = r.cert_iou + (r.n_uncertain as f64 / r.n_scenes as f64) * r.corr_unc;
    assert!((r.th_iou - th).abs() < 1e-9, "{}: {} vs {}", r.method, r.th_iou, th);
    assert!(r.cert_iou <= r.th_iou + 1e-12);
}

#[test]
fn always_certain_collapses_to_top1() {
    let scenes = common::synthetic_scenes(11, 150, 3, 20);
    let r = evaluate_method(&scenes, &method("top32+Ens1+EV")).unwrap();
    assert_eq!(r.n_uncertain, 0);
    assert_eq!(r.th_iou, r.cert_iou);
    assert_eq!(r.cert_iou, top1_accuracy(&scenes));
    assert_eq!(r.corr_unc, 0.0);
    assert!(r.notes.iter().any(|n| n.starts_with("CorrUnc")));
}

#[test]
fn all_uncertain_with_truth_in_set() {
    // Every softmax score is above 0, so the set is every candidate.
    let scenes = common::synthetic_scenes(12, 80, 1, 10);
    let r = evaluate_method(&scenes, &method("top32+SoftTr(0)")).unwrap();
    assert_eq!(r.n_uncertain, r.n_scenes);
    assert_eq!(r.corr_unc, 1.0);
    assert_eq!(r.th_iou, r.cert_iou + r.n_uncertain as f64 / r.n_scenes as f64);
}

#[test]
fn identity_holds_across_detectors() {
    let scenes = common::synthetic_scenes(13, 120, 5, 24);
    for m in [
        "top16+SA",
        "top8+CF+TS(2)+SA",
        "top32+CAHC(0.05)",
        "top16+SCF+Ens3+TS(1.5)+SoftTr(0.3)",
        "top16+SigmTr(0.6)",
        "top64+RLT(1.5)",
        "top16+Ens5+Jenks(0.9)",
        "top16+Ens4+EV",
        "top64+CF+Ens5+EV",
    ] {
        let r = evaluate_method(&scenes, &method(m)).unwrap();
        assert_identity(&r);
        let uncertain = scenes
            .iter()
            .filter(|s| !run_pipeline(s, &r.method).unwrap().is_certain())
            .count();
        assert_eq!(r.n_uncertain, uncertain, "{m}");
    }
}

#[test]
fn threshold_fallbacks_are_counted_as_uncertain() {
    let scenes = common::synthetic_scenes(14, 60, 1, 12);
    let r = evaluate_method(&scenes, &method("top16+SoftTr(0.99)")).unwrap();
    assert!(r.fallback_count > 0);
    assert!(r.n_uncertain >= r.fallback_count);
    assert_identity(&r);
}

#[test]
fn class_filter_keeps_target_class() {
    let scenes = common::synthetic_scenes(15, 60, 4, 16);
    let r = evaluate_method(&scenes, &method("top64+CF+Ens4+EV")).unwrap();
    assert_eq!(r.fail_open_count, 0);
    assert_identity(&r);
}

#[test]
fn empty_scene_list_is_an_error() {
    assert!(evaluate_method::<f64>(&[], &method("top16+SA")).is_err());
}

#[test]
fn method_needing_more_members_is_rejected() {
    let scenes = common::synthetic_scenes(16, 5, 2, 6);
    assert!(evaluate_method(&scenes, &method("top16+Ens4+EV")).is_err());
}

#[test]
fn subsets_group_by_tag() {
    let scenes = common::synthetic_scenes(17, 40, 4, 12);
    let m = method("top16+Ens4+EV");
    let by_tag = evaluate_subsets(&scenes, &m).unwrap();
    assert_eq!(
        by_tag.keys().map(String::as_str).collect::<Vec<_>>(),
        ["all", "ambiguous", "depth"]
    );
    assert_eq!(by_tag[ALL_SCENES], evaluate_method(&scenes, &m).unwrap());
    let ambiguous: Vec<Scene64> = scenes
        .iter()
        .filter(|s| s.subset_tags.contains("ambiguous"))
        .cloned()
        .collect();
    assert_eq!(by_tag["ambiguous"], evaluate_method(&ambiguous, &m).unwrap());

    let untagged: Vec<Scene64> = scenes
        .into_iter()
        .map(|mut s| {
            s.subset_tags.clear();
            s
        })
        .collect();
    let only_all = evaluate_subsets(&untagged, &m).unwrap();
    assert_eq!(only_all.len(), 1);
    assert_eq!(only_all[ALL_SCENES], evaluate_method(&untagged, &m).unwrap());
}

#[test]
fn restrictions_on_evaluated_reports() {
    let (scenes, _) = common::planted_disagreement(18, 50, 4);
    let good = evaluate_method(&scenes, &method("top16+Ens4+EV")).unwrap();
    let all_in = evaluate_method(&scenes, &method("top32+SoftTr(0)")).unwrap();
    let kept = apply_restrictions(&[good.clone(), all_in.clone()]);
    assert_eq!(kept, vec![good]);
    // SoftTr(0) never certifies anything, so CertAcc is 0 and it fails.
    assert_eq!(all_in.cert_acc, 0.0);
    assert!(apply_restrictions(&[]).is_empty());
}

#[test]
fn evaluation_is_deterministic() {
    let scenes = common::synthetic_scenes(19, 100, 5, 32);
    let m = method("top32+Ens5+TS(2)+CAHC(0.04)");
    assert_eq!(
        evaluate_method(&scenes, &m).unwrap(),
        evaluate_method(&scenes, &m).unwrap()
    );
}
