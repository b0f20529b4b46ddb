//! Candidate matching by root-mean-square answer distance.
//!
//! Type I recommendations compare a voter with candidates on the answered
//! questions only. Type II first completes the voter's vector with model
//! predictions and compares on every question.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of a recommendation, as in a 32-seat constituency.
pub const DEFAULT_RECOMMENDATION_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecType {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II")]
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    AnsweredOnly,
    Completed,
}

/// RMS difference between a voter and a complete candidate row.
///
/// `AnsweredOnly` averages over the voter's present coordinates;
/// `Completed` expects every coordinate to be present.
pub fn match_distance(voter: &[Option<f64>], candidate: &[f64], mode: DistanceMode) -> Result<f64> {
    if voter.len() != candidate.len() {
        return Err(Error::input("voter and candidate vectors differ in length"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (v, c) in voter.iter().zip(candidate) {
        match (v, mode) {
            (Some(v), _) => {
                sum += (v - c) * (v - c);
                n += 1;
            }
            (None, DistanceMode::AnsweredOnly) => {}
            (None, DistanceMode::Completed) => {
                return Err(Error::input("completed distance needs a full voter vector"));
            }
        }
    }
    if n == 0 {
        return Err(Error::input("no answered questions to compare"));
    }
    Ok((sum / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedCandidate {
    /// Row of the candidate matrix.
    pub candidate: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub kind: RecType,
    pub items: Vec<RecommendedCandidate>,
}

impl Recommendation {
    pub fn candidates(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.candidate).collect()
    }
}

/// The `m` closest candidates to `voter`, ties broken by candidate row.
/// The voter vector must be complete for `Completed` mode.
pub fn rank_candidates(
    voter: &[Option<f64>],
    candidates: &[Vec<f64>],
    m: usize,
    mode: DistanceMode,
    kind: RecType,
) -> Result<Recommendation> {
    if m > candidates.len() {
        return Err(Error::input(format!(
            "cannot recommend {m} of {} candidates",
            candidates.len()
        )));
    }
    let mut scored = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| match_distance(voter, c, mode).map(|d| (i, d)))
        .collect::<Result<Vec<_>>>()?;
    let by_distance = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if m < scored.len() && m > 0 {
        scored.select_nth_unstable_by(m - 1, by_distance);
        scored.truncate(m);
    }
    scored.sort_by(by_distance);
    scored.truncate(m);
    Ok(Recommendation {
        kind,
        items: scored
            .into_iter()
            .map(|(candidate, distance)| RecommendedCandidate { candidate, distance })
            .collect(),
    })
}

/// Type I: answered questions only. Fails without any answer.
pub fn recommend_type1(answers: &[Option<f64>], candidates: &[Vec<f64>], m: usize) -> Result<Recommendation> {
    rank_candidates(answers, candidates, m, DistanceMode::AnsweredOnly, RecType::TypeI)
}

/// Type II: `answers` with every gap filled from `predictions`.
pub fn recommend_type2(
    answers: &[Option<f64>],
    predictions: &[f64],
    candidates: &[Vec<f64>],
    m: usize,
    round: bool,
) -> Result<Recommendation> {
    let completed = complete(answers, predictions, round);
    rank_candidates(&completed, candidates, m, DistanceMode::Completed, RecType::TypeII)
}

pub fn complete(answers: &[Option<f64>], predictions: &[f64], round: bool) -> Vec<Option<f64>> {
    answers
        .iter()
        .zip(predictions)
        .map(|(a, &p)| Some(a.unwrap_or(if round { p.round() } else { p })))
        .collect()
}

/// `|A ∩ B| / |A|` for equally sized id sets.
pub fn overlap_accuracy(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::input(format!("set sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::input("overlap of empty sets"));
    }
    let set: HashSet<usize> = a.iter().copied().collect();
    Ok(b.iter().filter(|x| set.contains(x)).count() as f64 / a.len() as f64)
}
