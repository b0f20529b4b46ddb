//! Next-question selection strategies.
//!
//! Every selector looks at a [`Respondent`] and returns the next open
//! question, or `None` once its questionnaire is exhausted. Ties between
//! equally scored questions (within [`TIE_TOLERANCE`]) go to the lowest
//! question index.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{dot, moments_variance};
use crate::engine::{Engine, Respondent};
use crate::error::{Error, Result};
use crate::recommender::{rank_candidates, DistanceMode, RecType};

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Gini impurity of a binary outcome, `2p(1 − p)`.
pub fn gini(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

pub fn checked_gini(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input(format!("probability {p} outside [0, 1]")));
    }
    Ok(gini(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    DefaultOrder,
    RapidVersion,
    Random,
    FixedGini,
    BaseKnn,
    FullKnn,
    Uncertainty,
    PosteriorVariance,
    PosteriorRmse,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 9] = [
        SelectorKind::DefaultOrder,
        SelectorKind::RapidVersion,
        SelectorKind::Random,
        SelectorKind::FixedGini,
        SelectorKind::BaseKnn,
        SelectorKind::FullKnn,
        SelectorKind::Uncertainty,
        SelectorKind::PosteriorVariance,
        SelectorKind::PosteriorRmse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::DefaultOrder => "default_order",
            SelectorKind::RapidVersion => "rapid_version",
            SelectorKind::Random => "random",
            SelectorKind::FixedGini => "fixed_gini",
            SelectorKind::BaseKnn => "base_knn",
            SelectorKind::FullKnn => "full_knn",
            SelectorKind::Uncertainty => "uncertainty",
            SelectorKind::PosteriorVariance => "posterior_variance",
            SelectorKind::PosteriorRmse => "posterior_rmse",
        }
    }

    pub fn registry() -> String {
        Self::ALL.map(Self::name).join("|")
    }

    /// Whether the selector ranks (user, question) pairs by a comparable
    /// priority; the rest follow a per-user order.
    pub fn has_priority(self) -> bool {
        matches!(
            self,
            SelectorKind::BaseKnn
                | SelectorKind::FullKnn
                | SelectorKind::Uncertainty
                | SelectorKind::PosteriorVariance
                | SelectorKind::PosteriorRmse
        )
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownSelector {
                name: s.to_owned(),
                available: Self::registry(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub question: usize,
    /// The method's objective for the chosen question.
    pub score: f64,
    /// Objective per question; `None` for questions that were not scored.
    pub scores: Vec<Option<f64>>,
    /// Expected information gain (probabilistic methods) or neighbour
    /// disagreement (kNN methods); larger is more valuable.
    pub priority: Option<f64>,
}

/// Picks the next question for `respondent`.
pub fn select(kind: SelectorKind, engine: &Engine, respondent: &Respondent) -> Result<Option<SelectionResult>> {
    let open = respondent.open_questions();
    if open.is_empty() {
        return Ok(None);
    }
    Ok(match kind {
        SelectorKind::DefaultOrder => select_fixed(engine.default_order(), engine, respondent),
        SelectorKind::RapidVersion => {
            let order = engine
                .rapid_version()
                .ok_or_else(|| Error::input("no condensed questionnaire configured"))?;
            select_fixed(order, engine, respondent)
        }
        SelectorKind::Random => Some(select_random(engine, respondent, &open)),
        SelectorKind::FixedGini => select_fixed_gini(engine, respondent),
        SelectorKind::BaseKnn => select_knn_or_fallback(engine, respondent, &open, KnnVariant::Base),
        SelectorKind::FullKnn => select_knn_or_fallback(engine, respondent, &open, KnnVariant::Full),
        SelectorKind::Uncertainty => Some(select_uncertainty(engine, respondent, &open)),
        SelectorKind::PosteriorVariance => Some(select_posterior_variance(engine, respondent, &open)),
        SelectorKind::PosteriorRmse => Some(select_posterior_rmse(engine, respondent, &open)),
    })
}

/// First question of `order` that is still open; `None` once exhausted.
pub fn select_fixed(order: &[usize], engine: &Engine, respondent: &Respondent) -> Option<SelectionResult> {
    let mut scores = vec![None; engine.n_questions()];
    for (rank, &q) in order.iter().enumerate() {
        if !respondent.is_answered(q) && !respondent.is_skipped(q) {
            scores[q] = Some(-(rank as f64));
        }
    }
    let (rank, &question) = order.iter().enumerate().find(|(_, &q)| scores[q].is_some())?;
    Some(SelectionResult {
        question,
        score: -(rank as f64),
        scores,
        priority: None,
    })
}

/// Static ranking by the Gini impurity of each question's prior evidence.
pub fn select_fixed_gini(engine: &Engine, respondent: &Respondent) -> Option<SelectionResult> {
    let mut result = select_fixed(&engine.fixed_gini_order, engine, respondent)?;
    for (q, s) in result.scores.iter_mut().enumerate() {
        if s.is_some() {
            *s = Some(gini(engine.prior_evidence[q]));
        }
    }
    result.score = gini(engine.prior_evidence[result.question]);
    Some(result)
}

/// Uniform over open questions, seeded by (engine seed, respondent key,
/// step).
pub fn select_random(engine: &Engine, respondent: &Respondent, open: &[usize]) -> SelectionResult {
    let step = (engine.n_questions() - open.len()) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[engine.config.seed, respondent.key, step]));
    let question = open[rng.gen_range(0..open.len())];
    SelectionResult {
        question,
        score: 0.0,
        scores: vec![None; engine.n_questions()],
        priority: None,
    }
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 over the parts
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        state ^= p;
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnVariant {
    /// Neighbours by the answered questions only.
    Base,
    /// Neighbours by the answers completed with predictions.
    Full,
}

/// Maximizes the disagreement (Gini impurity of the agreement share)
/// among the `k` nearest candidates. The base variant falls back to the
/// fixed-Gini pick while nothing has been answered.
pub fn select_knn(
    engine: &Engine,
    respondent: &Respondent,
    open: &[usize],
    variant: KnnVariant,
) -> Option<SelectionResult> {
    let neighbours = knn(engine, respondent, variant)?;
    let mut scores = vec![None; engine.n_questions()];
    for &q in open {
        let yes = neighbours.iter().filter(|&&c| engine.candidates[c][q] >= 0.5).count();
        scores[q] = Some(gini(yes as f64 / neighbours.len() as f64));
    }
    let (question, score) = argbest(&scores, Goal::Maximize)?;
    Some(SelectionResult {
        question,
        score,
        scores,
        priority: Some(score),
    })
}

/// Indices of the `k` nearest candidates; `None` falls through to the
/// fixed-Gini choice for the base variant with no answers.
pub fn knn(engine: &Engine, respondent: &Respondent, variant: KnnVariant) -> Option<Vec<usize>> {
    let k = engine.config.knn.min(engine.candidates.len());
    let rec = match variant {
        KnnVariant::Base if respondent.n_answered() == 0 => return None,
        KnnVariant::Base => engine.recommend(respondent, RecType::TypeI, k),
        KnnVariant::Full => {
            let completed =
                crate::recommender::complete(&respondent.answer_values(), &respondent.predictions(engine), false);
            rank_candidates(
                &completed,
                &engine.candidates,
                k,
                DistanceMode::Completed,
                RecType::TypeII,
            )
        }
    };
    Some(rec.expect("voter vector is valid").candidates())
}

fn select_knn_or_fallback(
    engine: &Engine,
    respondent: &Respondent,
    open: &[usize],
    variant: KnnVariant,
) -> Option<SelectionResult> {
    select_knn(engine, respondent, open, variant).or_else(|| {
        let mut r = select_fixed_gini(engine, respondent)?;
        r.priority = Some(r.score);
        Some(r)
    })
}

/// The open question whose predictive probability is most uncertain.
pub fn select_uncertainty(engine: &Engine, respondent: &Respondent, open: &[usize]) -> SelectionResult {
    let belief = respondent.belief();
    let mut scores = vec![None; engine.n_questions()];
    for &q in open {
        scores[q] = Some(gini(belief.predictive(&engine.table, q)));
    }
    let (question, score) = argbest(&scores, Goal::Maximize).expect("open is non-empty");
    SelectionResult {
        question,
        score,
        scores,
        // Answering removes the question's own Bernoulli variance p(1 − p).
        priority: Some(score / 2.0),
    }
}

/// Minimizes the expected trace of the posterior covariance after one
/// more answer.
pub fn select_posterior_variance(engine: &Engine, respondent: &Respondent, open: &[usize]) -> SelectionResult {
    let mass = respondent.belief().mass();
    let points = engine.grid.points();
    let (mut m0, mut m1, mut q2) = (0.0, 0.0, 0.0);
    for (w, p) in mass.iter().zip(points) {
        m0 += w * p[0];
        m1 += w * p[1];
        q2 += w * (p[0] * p[0] + p[1] * p[1]);
    }
    let current = moments_variance(mass, points);
    let mut scores = vec![None; engine.n_questions()];
    for &q in open {
        let lik = engine.table.p_yes(q);
        let (mut s, mut a0, mut a1, mut aq) = (0.0, 0.0, 0.0, 0.0);
        for ((w, l), p) in mass.iter().zip(lik).zip(points) {
            let wl = w * l;
            s += wl;
            a0 += wl * p[0];
            a1 += wl * p[1];
            aq += wl * (p[0] * p[0] + p[1] * p[1]);
        }
        let var_of = |s: f64, a0: f64, a1: f64, aq: f64| {
            if s <= 0.0 {
                0.0
            } else {
                (aq / s - (a0 / s).powi(2) - (a1 / s).powi(2)).max(0.0)
            }
        };
        let yes = var_of(s, a0, a1, aq);
        let no = var_of(1.0 - s, m0 - a0, m1 - a1, q2 - aq);
        let s = s.clamp(0.0, 1.0);
        scores[q] = Some(s * yes + (1.0 - s) * no);
    }
    let (question, score) = argbest(&scores, Goal::Minimize).expect("open is non-empty");
    SelectionResult {
        question,
        score,
        scores,
        priority: Some(current - score),
    }
}

/// Minimizes the expected summed Bernoulli variance of the remaining
/// open questions' predictions after one more answer.
///
/// With `A[k][j] = Σ_cells mass · p_k · p_j`, the predictive for `j` after
/// answering `k` with yes is `A[k][j] / P_k` and with no is
/// `(P_j − A[k][j]) / (1 − P_k)`, so one weighted Gram matrix over the open
/// questions yields every hypothetical posterior prediction.
pub fn select_posterior_rmse(engine: &Engine, respondent: &Respondent, open: &[usize]) -> SelectionResult {
    let mass = respondent.belief().mass();
    let n = open.len();
    let weighted: Vec<Vec<f64>> = open
        .iter()
        .map(|&q| engine.table.p_yes(q).iter().zip(mass).map(|(p, w)| p * w).collect())
        .collect();
    let pred: Vec<f64> = weighted.iter().map(|w| w.iter().sum()).collect();
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = dot(&weighted[a], engine.table.p_yes(open[b]));
            gram[a * n + b] = v;
            gram[b * n + a] = v;
        }
    }
    let current: f64 = pred.iter().map(|p| p * (1.0 - p)).sum();
    let mut scores = vec![None; engine.n_questions()];
    for a in 0..n {
        let p_yes = pred[a].clamp(0.0, 1.0);
        let mut expected = 0.0;
        for b in (0..n).filter(|&b| b != a) {
            let joint = gram[a * n + b];
            if p_yes > 0.0 {
                let p = (joint / p_yes).clamp(0.0, 1.0);
                expected += p_yes * p * (1.0 - p);
            }
            if p_yes < 1.0 {
                let p = ((pred[b] - joint) / (1.0 - p_yes)).clamp(0.0, 1.0);
                expected += (1.0 - p_yes) * p * (1.0 - p);
            }
        }
        scores[open[a]] = Some(expected);
    }
    let (question, score) = argbest(&scores, Goal::Minimize).expect("open is non-empty");
    SelectionResult {
        question,
        score,
        scores,
        priority: Some(current - score),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

/// Best scored entry; earlier indices win ties within [`TIE_TOLERANCE`].
pub fn argbest(scores: &[Option<f64>], goal: Goal) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (q, s) in scores.iter().enumerate() {
        let Some(s) = *s else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => {
                let margin = TIE_TOLERANCE * b.abs().max(s.abs()).max(1.0);
                match goal {
                    Goal::Maximize => s > b + margin,
                    Goal::Minimize => s < b - margin,
                }
            }
        };
        if better {
            best = Some((q, s));
        }
    }
    best
}
