//! Individual-questionnaire simulation.
//!
//! Every test user starts from the prior, is asked the question each
//! selector picks, reveals their true (binarized) answer, and after every
//! answer both recommendation types are compared with the recommendation
//! the user gets once all questions are answered.

use std::io::{Read, Write};
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use super::metrics::{mean_accuracy, mean_sem};
use crate::dataset::ReactionMatrix;
use crate::engine::{Engine, Respondent};
use crate::error::{Error, Result};
use crate::recommender::{overlap_accuracy, recommend_type1, RecType};
use crate::selectors::{select, SelectorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub question: String,
    pub answer: bool,
    pub overlap_t1: f64,
    pub overlap_t2: f64,
    /// Accuracy of the predictions on the questions still unanswered;
    /// absent after the last question.
    pub prediction_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireTrace {
    pub selector: SelectorKind,
    pub user: String,
    pub steps: Vec<TraceStep>,
}

impl QuestionnaireTrace {
    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.question.as_str()).collect()
    }
}

/// Test users' true answers, binarized, one row per user.
#[derive(Debug, Clone)]
pub struct TestUsers {
    pub ids: Vec<String>,
    pub answers: Vec<Vec<bool>>,
}

impl TestUsers {
    /// `test` must be complete and share the engine's question columns.
    pub fn from_matrix(engine: &Engine, test: &ReactionMatrix) -> Result<Self> {
        if test.question_ids() != engine.question_ids() {
            return Err(Error::input("test columns do not match the model's questions"));
        }
        let answers = test
            .dense_rows()?
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| crate::dataset::binarize_value(v) >= 0.5)
                    .collect()
            })
            .collect();
        Ok(Self {
            ids: test.user_ids().to_vec(),
            answers,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn as_values(answers: &[bool]) -> Vec<Option<f64>> {
    answers.iter().map(|&y| Some(if y { 1.0 } else { 0.0 })).collect()
}

/// Recommendation size capped by the number of candidates.
pub(crate) fn effective_m(engine: &Engine) -> usize {
    engine.config().recommendation_size.min(engine.candidates().len())
}

/// Runs one user through the questionnaire.
pub fn simulate_user(
    kind: SelectorKind,
    engine: &Engine,
    user: usize,
    truth: &[bool],
    id: &str,
) -> Result<QuestionnaireTrace> {
    let m = effective_m(engine);
    let reference = recommend_type1(&as_values(truth), engine.candidates(), m)?.candidates();
    let mut respondent: Respondent = engine.respondent(user as u64);
    let mut steps = Vec::new();
    while let Some(choice) = select(kind, engine, &respondent)? {
        let q = choice.question;
        respondent.answer(engine, q, truth[q])?;
        let t1 = engine.recommend(&respondent, RecType::TypeI, m)?.candidates();
        let t2 = engine.recommend(&respondent, RecType::TypeII, m)?.candidates();
        let remaining = respondent.unanswered();
        let preds = respondent.predictions(engine);
        let (p, y): (Vec<f64>, Vec<f64>) = remaining
            .iter()
            .map(|&j| (preds[j], if truth[j] { 1.0 } else { 0.0 }))
            .unzip();
        steps.push(TraceStep {
            question: engine.question_ids()[q].clone(),
            answer: truth[q],
            overlap_t1: overlap_accuracy(&reference, &t1)?,
            overlap_t2: overlap_accuracy(&reference, &t2)?,
            prediction_accuracy: mean_accuracy(&p, &y),
        });
    }
    Ok(QuestionnaireTrace {
        selector: kind,
        user: id.to_string(),
        steps,
    })
}

/// Every test user through the questionnaire; users run in parallel and
/// results keep the input order.
pub fn simulate_questionnaires(
    kind: SelectorKind,
    engine: &Engine,
    users: &TestUsers,
) -> Result<Vec<QuestionnaireTrace>> {
    let n = users.len();
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(n.max(1));
    let chunk = n.div_ceil(workers.max(1)).max(1);
    let indices: Vec<usize> = (0..n).collect();
    let parts: Vec<Result<Vec<QuestionnaireTrace>>> = thread::scope(|s| {
        let handles: Vec<_> = indices
            .chunks(chunk)
            .map(|block| {
                s.spawn(move || {
                    block
                        .iter()
                        .map(|&u| simulate_user(kind, engine, u, &users.answers[u], &users.ids[u]))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    log::info!("{kind}: simulated {n} users");
    Ok(out)
}

/// Mean curves over users, one row per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub selector: SelectorKind,
    pub mean_overlap_t1: f64,
    pub sem_t1: f64,
    pub mean_overlap_t2: f64,
    pub sem_t2: f64,
    pub mean_prediction_accuracy: Option<f64>,
    pub n_users: usize,
}

/// Steps are 1-based; users whose questionnaire ended earlier drop out of
/// later steps.
pub fn mean_curves(traces: &[QuestionnaireTrace]) -> Vec<CurvePoint> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let longest = traces.iter().map(|t| t.steps.len()).max().unwrap_or(0);
    (0..longest)
        .map(|s| {
            let at: Vec<&TraceStep> = traces.iter().filter_map(|t| t.steps.get(s)).collect();
            let t1: Vec<f64> = at.iter().map(|x| x.overlap_t1).collect();
            let t2: Vec<f64> = at.iter().map(|x| x.overlap_t2).collect();
            let acc: Vec<f64> = at.iter().filter_map(|x| x.prediction_accuracy).collect();
            let (m1, e1) = mean_sem(&t1);
            let (m2, e2) = mean_sem(&t2);
            CurvePoint {
                step: s + 1,
                selector: first.selector,
                mean_overlap_t1: m1,
                sem_t1: e1,
                mean_overlap_t2: m2,
                sem_t2: e2,
                mean_prediction_accuracy: (!acc.is_empty()).then(|| mean_sem(&acc).0),
                n_users: at.len(),
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    selector: SelectorKind,
    user: String,
    step: usize,
    question: String,
    answer: u8,
    overlap_t1: f64,
    overlap_t2: f64,
    prediction_accuracy: Option<f64>,
}

/// Long format: `selector,user,step,question,answer,overlap_t1,overlap_t2,prediction_accuracy`.
pub fn write_traces(writer: impl Write, traces: &[QuestionnaireTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in traces {
        for (i, s) in t.steps.iter().enumerate() {
            w.serialize(TraceRow {
                selector: t.selector,
                user: t.user.clone(),
                step: i + 1,
                question: s.question.clone(),
                answer: s.answer as u8,
                overlap_t1: s.overlap_t1,
                overlap_t2: s.overlap_t2,
                prediction_accuracy: s.prediction_accuracy,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<traces>", e))?;
    Ok(())
}

/// Inverse of [`write_traces`]; traces are grouped by consecutive
/// (selector, user) rows and steps must be numbered 1, 2, ...
pub fn read_traces(reader: impl Read) -> Result<Vec<QuestionnaireTrace>> {
    let mut out: Vec<QuestionnaireTrace> = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<TraceRow>() {
        let row = row?;
        let step = TraceStep {
            question: row.question,
            answer: row.answer != 0,
            overlap_t1: row.overlap_t1,
            overlap_t2: row.overlap_t2,
            prediction_accuracy: row.prediction_accuracy,
        };
        match out.last_mut() {
            Some(t) if t.selector == row.selector && t.user == row.user && row.step == t.steps.len() + 1 => {
                t.steps.push(step)
            }
            _ if row.step == 1 => out.push(QuestionnaireTrace {
                selector: row.selector,
                user: row.user,
                steps: vec![step],
            }),
            _ => return Err(Error::input(format!("trace for user {} is out of order", row.user))),
        }
    }
    Ok(out)
}

pub fn write_curves(writer: impl Write, curves: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in curves {
        w.serialize(c)?;
    }
    w.flush().map_err(|e| Error::io("<curves>", e))?;
    Ok(())
}

pub fn read_traces_file(path: impl AsRef<Path>) -> Result<Vec<QuestionnaireTrace>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_traces(file)
}
