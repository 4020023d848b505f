mod common;

use ug_core::dataset::{load_scenes, AttributeSet, Candidate, Location};
use ug_core::questiongen::{disambiguation_report, expressions_for};
use ug_core::uncertainty::run_pipeline;
use ug_core::{BoundingBox64, MethodSpec, Scene64, Verdict};

fn cand(id: usize, color: &str, loc: Location, dist: f64) -> Candidate<f64> {
    Candidate {
        id,
        bbox: BoundingBox64 {
            x: 10.0 * id as f64,
            y: 0.0,
            w: 5.0,
            h: 5.0,
        },
        rpn_score: 0.9,
        class_label: "car".into(),
        superclass_label: "vehicle".into(),
        attributes: Some(AttributeSet {
            color: Some(color.into()),
            action: None,
            location: loc,
        }),
        lidar_distance: Some(dist),
    }
}

fn scene_with(cands: Vec<Candidate<f64>>) -> Scene64 {
    let mut scene = common::synthetic_scenes(31, 1, 1, 4).remove(0);
    let n = cands.len();
    scene.candidates = cands;
    scene.scores.members = vec![vec![0.0; n]];
    scene
}

/// Uncertain verdict over every candidate, built through a detector that
/// keeps all of them.
fn all_uncertain(scene: &Scene64) -> Verdict {
    let v = run_pipeline(scene, &"top64+SoftTr(0)".parse().unwrap()).unwrap();
    assert!(!v.is_certain());
    v
}

fn report_for(cands: Vec<Candidate<f64>>) -> ug_core::questiongen::DisambiguationReport<f64> {
    let scene = scene_with(cands);
    let verdict = all_uncertain(&scene);
    let exprs = expressions_for(&scene, &verdict).unwrap();
    disambiguation_report(&scene, &verdict, &exprs).unwrap()
}

#[test]
fn distinct_colors_are_unique() {
    let r = report_for(vec![
        cand(0, "red", Location::Left, 5.0),
        cand(1, "blue", Location::Left, 5.0),
    ]);
    assert!(r.unique);
    assert_eq!(
        r.question,
        "Do you mean the first red car on the left or the first blue car on the left?"
    );
}

#[test]
fn same_group_differs_by_ordinal() {
    let r = report_for(vec![
        cand(0, "red", Location::Left, 9.0),
        cand(1, "red", Location::Left, 5.0),
    ]);
    assert!(r.unique);
    assert_eq!(r.candidates[0].expression, "the second red car on the left");
    assert_eq!(r.candidates[1].expression, "the first red car on the left");
}

#[test]
fn identical_descriptions_are_flagged() {
    // Both past the fifth ordinal, so both render as "far".
    let cands: Vec<_> = (0..7)
        .map(|i| cand(i, "red", Location::Front, 1.0 + i as f64))
        .collect();
    let scene = scene_with(cands);
    let verdict = all_uncertain(&scene);
    let exprs = expressions_for(&scene, &verdict).unwrap();
    let report = disambiguation_report(&scene, &verdict, &exprs).unwrap();
    assert!(!report.unique);
    let far = report
        .candidates
        .iter()
        .filter(|c| c.expression == "the far red car in front")
        .count();
    assert_eq!(far, 2);
}

#[test]
fn report_serializes_as_one_line() {
    let r = report_for(vec![
        cand(0, "red", Location::Left, 5.0),
        cand(1, "blue", Location::Right, 5.0),
    ]);
    let line = serde_json::to_string(&r).unwrap();
    assert!(!line.contains('\n'));
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["candidates"][1]["box"]["x"], 10.0);
    assert_eq!(v["attribute_source"], "record");
}

#[test]
fn fixture_questions() {
    let scenes: Vec<Scene64> = load_scenes(common::fixture("scenes.jsonl")).unwrap();
    let m: MethodSpec = "top16+Ens5+EV".parse().unwrap();
    let questions: Vec<String> = scenes
        .iter()
        .filter_map(|s| {
            let v = run_pipeline(s, &m).unwrap();
            (!v.is_certain()).then(|| {
                let e = expressions_for(s, &v).unwrap();
                disambiguation_report(s, &v, &e).unwrap().question
            })
        })
        .collect();
    // Votes are listed by mean ensemble score, which favours candidate 1 in
    // both scenes.
    assert_eq!(
        questions,
        [
            "Do you mean the second orange traffic cone on the left or the first orange traffic cone on the left?",
            "Do you mean the first truck on the right or the first truck on the left?",
        ]
    );
}
