//! Seeded synthetic scenes shared by the integration tests.
//!
//! Candidate boxes sit in disjoint cells of a grid so the planted target is
//! the only candidate overlapping the ground truth.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ug_core::dataset::{AttributeSet, Candidate, Location, ScoreKind, ScoreSet};
use ug_core::{BoundingBox64, Scene64};

pub const COLORS: [&str; 12] = [
    "white", "black", "silver", "gray", "red", "blue", "green", "yellow", "orange", "brown", "purple", "pink",
];

pub const CLASSES: [(&str, &str); 5] = [
    ("car", "vehicle"),
    ("truck", "vehicle"),
    ("pedestrian", "person"),
    ("cyclist", "person"),
    ("traffic cone", "object"),
];

const IMAGE_W: u32 = 1600;
const IMAGE_H: u32 = 900;
const COLS: usize = 8;
const ROWS: usize = 4;
pub const MAX_CANDIDATES: usize = COLS * ROWS;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Boxes in distinct grid cells, one per candidate.
fn disjoint_boxes(rng: &mut ChaCha8Rng, n: usize) -> Vec<BoundingBox64> {
    let (cw, ch) = (f64::from(IMAGE_W) / COLS as f64, f64::from(IMAGE_H) / ROWS as f64);
    let mut cells: Vec<usize> = (0..MAX_CANDIDATES).collect();
    cells.shuffle(rng);
    cells[..n]
        .iter()
        .map(|&cell| {
            let (col, row) = ((cell % COLS) as f64, (cell / COLS) as f64);
            let w = rng.gen_range(40.0..cw * 0.7);
            let h = rng.gen_range(40.0..ch * 0.7);
            let x = col * cw + rng.gen_range(0.0..cw - w - 1.0);
            let y = row * ch + rng.gen_range(0.0..ch - h - 1.0);
            BoundingBox64 { x, y, w, h }
        })
        .collect()
}

fn candidates(rng: &mut ChaCha8Rng, n: usize) -> Vec<Candidate<f64>> {
    let boxes = disjoint_boxes(rng, n);
    let mut rpn: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    rpn.sort_by(|a, b| b.total_cmp(a));
    boxes
        .into_iter()
        .zip(rpn)
        .enumerate()
        .map(|(id, (bbox, rpn_score))| {
            let (class, superclass) = CLASSES[rng.gen_range(0..CLASSES.len())];
            let attributes = rng.gen_bool(0.85).then(|| AttributeSet {
                color: rng
                    .gen_bool(0.8)
                    .then(|| COLORS[rng.gen_range(0..COLORS.len())].to_owned()),
                action: None,
                location: [Location::Left, Location::Front, Location::Right][rng.gen_range(0..3)],
            });
            Candidate {
                id,
                bbox,
                rpn_score,
                class_label: class.into(),
                superclass_label: superclass.into(),
                attributes,
                lidar_distance: rng.gen_bool(0.9).then(|| rng.gen_range(1.0..80.0)),
            }
        })
        .collect()
}

fn scene(id: usize, cands: Vec<Candidate<f64>>, target: usize, members: Vec<Vec<f64>>) -> Scene64 {
    let t = &cands[target];
    let mut subset_tags = BTreeSet::new();
    if id.is_multiple_of(3) {
        subset_tags.insert("ambiguous".to_owned());
    }
    if id % 4 == 1 {
        subset_tags.insert("depth".to_owned());
    }
    Scene64 {
        scene_id: format!("syn-{id:04}"),
        command: format!("follow that {}", t.class_label),
        image_width: IMAGE_W,
        image_height: IMAGE_H,
        predicted_class: t.class_label.clone(),
        predicted_superclass: t.superclass_label.clone(),
        subset_tags,
        gt_box: t.bbox,
        candidates: cands,
        scores: ScoreSet::new(ScoreKind::RawLogit, members).expect("valid scores"),
    }
}

/// Scenes with 2..=`max_n` candidates and `n_members` raw-logit rows. The
/// target usually, but not always, receives the highest logits.
pub fn synthetic_scenes(seed: u64, n_scenes: usize, n_members: usize, max_n: usize) -> Vec<Scene64> {
    let mut rng = rng(seed);
    (0..n_scenes)
        .map(|i| {
            let n = rng.gen_range(2..=max_n.min(MAX_CANDIDATES));
            let cands = candidates(&mut rng, n);
            let target = rng.gen_range(0..n);
            let strength = rng.gen_range(-1.0..4.0);
            let members = (0..n_members)
                .map(|_| {
                    (0..n)
                        .map(|c| {
                            let noise = rng.gen_range(-2.0..2.0);
                            if c == target {
                                strength + noise
                            } else {
                                noise
                            }
                        })
                        .collect()
                })
                .collect();
            scene(i, cands, target, members)
        })
        .collect()
}

/// Copies member 0 into every row.
pub fn with_identical_members(scenes: &[Scene64], n_members: usize) -> Vec<Scene64> {
    scenes
        .iter()
        .map(|s| {
            let mut s = s.clone();
            let row = s.scores.members[0].clone();
            s.scores = ScoreSet::new(ScoreKind::RawLogit, vec![row; n_members]).expect("valid scores");
            s
        })
        .collect()
}

/// Scenes where every member votes for the target, except on the returned
/// number of scenes where member 0 votes for a distractor and the others
/// for the target.
pub fn planted_disagreement(seed: u64, n_scenes: usize, n_members: usize) -> (Vec<Scene64>, usize) {
    assert!(n_members >= 2);
    let mut rng = rng(seed);
    let mut n_wrong = 0;
    let scenes = (0..n_scenes)
        .map(|i| {
            let n = rng.gen_range(2..=12);
            let cands = candidates(&mut rng, n);
            let target = rng.gen_range(0..n);
            let distractor = (target + rng.gen_range(1..n)) % n;
            let wrong = rng.gen_bool(0.4);
            n_wrong += usize::from(wrong);
            let members = (0..n_members)
                .map(|m| {
                    let winner = if wrong && m == 0 { distractor } else { target };
                    (0..n)
                        .map(|c| {
                            if c == winner {
                                6.0 + rng.gen_range(0.0..1.0)
                            } else {
                                rng.gen_range(-1.0..1.0)
                            }
                        })
                        .collect()
                })
                .collect();
            scene(i, cands, target, members)
        })
        .collect();
    (scenes, n_wrong)
}

/// Random probability vector of length `n`, occasionally peaked.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let peak = rng.gen_range(0.0..6.0);
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let base: f64 = rng.gen_range(0.0..1.0);
            if i == 0 {
                base * (1.0 + peak)
            } else {
                base
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let mut v: Vec<f64> = raw.iter().map(|x| x / total).collect();
    v.shuffle(rng);
    v
}

/// Path of a checked-in fixture.
pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
