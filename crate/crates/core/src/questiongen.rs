//! Clarification questions for uncertain scenes.
//!
//! Every candidate gets a template referring expression built from its
//! attributes and a distance ordinal, and the expressions of the uncertain
//! candidates are joined into `Do you mean <e1> or <e2>, ..., or <en>?`.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::dataset::{BoundingBox, Candidate, Location, Scene};
use crate::uncertainty::Verdict;
use crate::{Error, Result, Scalar};

/// Ordinals above this share the last bucket.
pub const MAX_ORDINAL: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistanceCount {
    pub candidate_id: usize,
    /// 1-based rank by distance within the (class, location, color) group;
    /// 6 stands for anything past the fifth.
    pub ordinal: u8,
    pub distance_missing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expression {
    pub text: String,
    pub candidate_id: usize,
}

type GroupKey<'a> = (&'a str, Option<Location>, Option<&'a str>);

fn group_key<T>(c: &Candidate<T>) -> GroupKey<'_> {
    let attrs = c.attributes.as_ref();
    (
        c.class_label.as_str(),
        attrs.map(|a| a.location),
        attrs.and_then(|a| a.color.as_deref()),
    )
}

/// Distance ordinals of every candidate, in input order.
///
/// Candidates are grouped by class, location and color and ranked by LiDAR
/// distance (ties by id). A candidate without a distance is placed alone
/// with ordinal 1 and flagged.
pub fn compute_distance_counts<T: Scalar>(candidates: &[Candidate<T>]) -> Vec<DistanceCount> {
    let mut groups: BTreeMap<GroupKey<'_>, Vec<(T, usize, usize)>> = BTreeMap::new();
    let mut out: Vec<DistanceCount> = candidates
        .iter()
        .map(|c| DistanceCount {
            candidate_id: c.id,
            ordinal: 1,
            distance_missing: c.lidar_distance.is_none(),
        })
        .collect();
    for (pos, c) in candidates.iter().enumerate() {
        if let Some(d) = c.lidar_distance {
            groups.entry(group_key(c)).or_default().push((d, c.id, pos));
        }
    }
    for members in groups.values_mut() {
        members.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        for (rank, &(_, _, pos)) in members.iter().enumerate() {
            out[pos].ordinal = u8::try_from(rank + 1).unwrap_or(MAX_ORDINAL).min(MAX_ORDINAL);
        }
    }
    out
}

fn ordinal_word(ordinal: u8) -> &'static str {
    match ordinal {
        0 | 1 => "first",
        2 => "second",
        3 => "third",
        4 => "fourth",
        5 => "fifth",
        _ => "far",
    }
}

/// `the <ordinal> <color> <class> <location>`, leaving out what is unknown.
pub fn generate_expression<T>(candidate: &Candidate<T>, count: &DistanceCount) -> Expression {
    let mut words = vec!["the", ordinal_word(count.ordinal)];
    let attrs = candidate.attributes.as_ref();
    if let Some(color) = attrs.and_then(|a| a.color.as_deref()) {
        words.push(color);
    }
    words.push(&candidate.class_label);
    if let Some(a) = attrs {
        words.push(a.location.phrase());
    }
    Expression {
        text: words.join(" "),
        candidate_id: candidate.id,
    }
}

/// `Do you mean <e1>?` or `Do you mean <e1> or <e2>, ..., or <en>?`.
pub fn generate_question(expressions: &[Expression]) -> Result<String> {
    let (first, rest) = expressions.split_first().ok_or(Error::Empty("expression list"))?;
    let mut q = format!("Do you mean {}", first.text);
    for (i, e) in rest.iter().enumerate() {
        let sep = match (i, i + 1 == rest.len()) {
            (0, _) => " or ",
            (_, true) => ", or ",
            _ => ", ",
        };
        q.push_str(sep);
        q.push_str(&e.text);
    }
    q.push('?');
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportedCandidate<T> {
    pub id: usize,
    #[serde(rename = "box")]
    pub bbox: BoundingBox<T>,
    pub expression: String,
    pub ordinal: u8,
    pub distance_missing: bool,
}

/// Record handed to whatever displays the question and highlights the boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisambiguationReport<T> {
    pub scene_id: String,
    pub command: String,
    pub candidates: Vec<ReportedCandidate<T>>,
    pub question: String,
    /// All expression texts differ from each other.
    pub unique: bool,
    /// Where attributes and distances came from.
    pub attribute_source: &'static str,
}

/// Expressions for the verdict's candidates, in verdict order.
pub fn expressions_for<T: Scalar>(scene: &Scene<T>, verdict: &Verdict) -> Result<Vec<(Expression, DistanceCount)>> {
    let counts = compute_distance_counts(&scene.candidates);
    verdict
        .candidate_ids
        .iter()
        .map(|&id| {
            let pos =
                scene.candidates.iter().position(|c| c.id == id).ok_or_else(|| {
                    Error::invariant(&scene.scene_id, format!("verdict names unknown candidate {id}"))
                })?;
            Ok((generate_expression(&scene.candidates[pos], &counts[pos]), counts[pos]))
        })
        .collect()
}

pub fn disambiguation_report<T: Scalar>(
    scene: &Scene<T>,
    verdict: &Verdict,
    expressions: &[(Expression, DistanceCount)],
) -> Result<DisambiguationReport<T>> {
    let texts: Vec<Expression> = expressions.iter().map(|(e, _)| e.clone()).collect();
    let question = generate_question(&texts)?;
    let mut seen = HashSet::new();
    let unique = texts.iter().all(|e| seen.insert(e.text.as_str()));
    let candidates = expressions
        .iter()
        .map(|(e, count)| {
            let c = scene
                .candidate(e.candidate_id)
                .ok_or_else(|| Error::invariant(&scene.scene_id, format!("unknown candidate {}", e.candidate_id)))?;
            Ok(ReportedCandidate {
                id: c.id,
                bbox: c.bbox,
                expression: e.text.clone(),
                ordinal: count.ordinal,
                distance_missing: count.distance_missing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(candidates.len(), verdict.candidate_ids.len());
    Ok(DisambiguationReport {
        scene_id: scene.scene_id.clone(),
        command: scene.command.clone(),
        candidates,
        question,
        unique,
        attribute_source: "record",
    })
}
