//! How much question orders differ between users and between selectors.
//!
//! An order is turned into a rank vector over the full question set;
//! questions a trace never asked share the average of the trailing ranks.
//! Spearman's correlation between two orders is the Pearson correlation
//! of their rank vectors.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::metrics::pearson;
use super::simulate::QuestionnaireTrace;
use crate::error::{Error, Result};
use crate::selectors::SelectorKind;

/// Rank vector (1-based) of `order` over `questions`.
pub fn rank_vector(order: &[&str], questions: &[String]) -> Result<Vec<f64>> {
    let n = questions.len();
    let k = order.len();
    let tied = (k + 1 + n) as f64 / 2.0;
    let mut ranks = vec![tied; n];
    let index: HashMap<&str, usize> = questions.iter().enumerate().map(|(i, q)| (q.as_str(), i)).collect();
    let mut seen = HashSet::new();
    for (pos, q) in order.iter().enumerate() {
        let &i = index.get(q).ok_or_else(|| Error::UnknownQuestion(q.to_string()))?;
        if !seen.insert(i) {
            return Err(Error::input(format!("question {q} appears twice in one order")));
        }
        ranks[i] = (pos + 1) as f64;
    }
    Ok(ranks)
}

pub fn spearman(a: &[&str], b: &[&str], questions: &[String]) -> Result<Option<f64>> {
    Ok(pearson(&rank_vector(a, questions)?, &rank_vector(b, questions)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorAdaptivity {
    pub selector: SelectorKind,
    pub n_users: usize,
    /// Distinct questions asked at each step (1-based step = index + 1).
    pub unique_per_step: Vec<usize>,
    /// Mean Spearman correlation over all pairs of distinct users.
    pub mean_src: Option<f64>,
    /// `1 - mean_src`.
    pub adaptivity: Option<f64>,
    /// User × user Spearman matrix, users in trace order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub src_matrix: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityReport {
    pub questions: Vec<String>,
    pub selectors: Vec<SelectorAdaptivity>,
    /// Order of rows and columns of `method_src`.
    pub methods: Vec<SelectorKind>,
    /// Mean over shared users of the Spearman correlation between two
    /// selectors' orders for the same user.
    pub method_src: Vec<Vec<Option<f64>>>,
}

pub fn unique_per_step(traces: &[&QuestionnaireTrace]) -> Vec<usize> {
    let longest = traces.iter().map(|t| t.steps.len()).max().unwrap_or(0);
    (0..longest)
        .map(|s| {
            traces
                .iter()
                .filter_map(|t| t.steps.get(s).map(|x| x.question.as_str()))
                .collect::<HashSet<_>>()
                .len()
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// `traces` may mix selectors; they are grouped by selector in first-seen
/// order. `keep_matrices` retains the user × user matrices in the report.
pub fn adaptivity_analysis(
    traces: &[QuestionnaireTrace],
    questions: &[String],
    keep_matrices: bool,
) -> Result<AdaptivityReport> {
    let mut groups: Vec<(SelectorKind, Vec<&QuestionnaireTrace>)> = Vec::new();
    for t in traces {
        match groups.iter_mut().find(|(k, _)| *k == t.selector) {
            Some((_, g)) => g.push(t),
            None => groups.push((t.selector, vec![t])),
        }
    }

    let mut ranks: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut selectors = Vec::new();
    for (kind, group) in &groups {
        let r = group
            .iter()
            .map(|t| rank_vector(&t.order(), questions))
            .collect::<Result<Vec<_>>>()?;
        let n = r.len();
        let mut matrix = vec![vec![None; n]; n];
        let mut pairs = Vec::new();
        for i in 0..n {
            matrix[i][i] = pearson(&r[i], &r[i]);
            for j in i + 1..n {
                let v = pearson(&r[i], &r[j]);
                matrix[i][j] = v;
                matrix[j][i] = v;
                pairs.extend(v);
            }
        }
        let mean_src = mean(pairs.into_iter());
        selectors.push(SelectorAdaptivity {
            selector: *kind,
            n_users: n,
            unique_per_step: unique_per_step(group),
            mean_src,
            adaptivity: mean_src.map(|m| 1.0 - m),
            src_matrix: keep_matrices.then_some(matrix),
        });
        ranks.push(r);
    }

    let by_user: Vec<BTreeMap<&str, usize>> = groups
        .iter()
        .map(|(_, g)| g.iter().enumerate().map(|(i, t)| (t.user.as_str(), i)).collect())
        .collect();
    let m = groups.len();
    let mut method_src = vec![vec![None; m]; m];
    for a in 0..m {
        for b in 0..m {
            method_src[a][b] = mean(by_user[a].iter().filter_map(|(user, &i)| {
                let &j = by_user[b].get(user)?;
                pearson(&ranks[a][i], &ranks[b][j])
            }));
        }
    }

    Ok(AdaptivityReport {
        questions: questions.to_vec(),
        selectors,
        methods: groups.iter().map(|(k, _)| *k).collect(),
        method_src,
    })
}

/// Question universe of a trace set: ids in order of first appearance.
pub fn questions_of(traces: &[QuestionnaireTrace]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in traces {
        for s in &t.steps {
            if seen.insert(s.question.as_str()) {
                out.push(s.question.clone());
            }
        }
    }
    out
}
