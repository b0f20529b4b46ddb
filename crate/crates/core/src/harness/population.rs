//! Matrix population: a global loop that repeatedly queries the single
//! (user, question) cell judged most valuable across all test users.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::simulate::TestUsers;
use crate::engine::{Engine, Respondent};
use crate::error::{Error, Result};
use crate::harness::metrics::accuracy_metric;
use crate::selectors::{select, SelectionResult, SelectorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    /// 1-based query number.
    pub query: usize,
    pub user: String,
    pub question: String,
    pub answer: bool,
    pub priority: Option<f64>,
    /// Accuracy of the predictions over all cells not yet queried; absent
    /// once none remain.
    pub remaining_accuracy: Option<f64>,
}

struct UserState {
    respondent: Respondent,
    pending: Option<SelectionResult>,
    /// Correct predictions among this user's unqueried cells.
    correct: usize,
    remaining: usize,
}

impl UserState {
    fn refresh(&mut self, kind: SelectorKind, engine: &Engine, truth: &[bool]) -> Result<()> {
        let preds = self.respondent.predictions(engine);
        let open = self.respondent.unanswered();
        self.remaining = open.len();
        self.correct = open
            .iter()
            .filter(|&&j| accuracy_metric(preds[j], if truth[j] { 1.0 } else { 0.0 }) == 1.0)
            .count();
        self.pending = select(kind, engine, &self.respondent)?;
        Ok(())
    }
}

/// Greedy population for selectors with a priority (ties to the lower
/// user index); fixed-order and random selectors visit users round-robin.
/// Stops when no user has a question left.
pub fn simulate_matrix_population(kind: SelectorKind, engine: &Engine, users: &TestUsers) -> Result<Vec<Acquisition>> {
    let mut states = Vec::with_capacity(users.len());
    for (u, truth) in users.answers.iter().enumerate() {
        let mut s = UserState {
            respondent: engine.respondent(u as u64),
            pending: None,
            correct: 0,
            remaining: 0,
        };
        s.refresh(kind, engine, truth)?;
        states.push(s);
    }
    let mut correct: usize = states.iter().map(|s| s.correct).sum();
    let mut remaining: usize = states.iter().map(|s| s.remaining).sum();
    let mut log = Vec::new();
    let mut cursor = 0usize;
    loop {
        let next = if kind.has_priority() {
            best_user(&states)?
        } else {
            round_robin(&states, &mut cursor)
        };
        let Some(u) = next else { break };
        let state = &mut states[u];
        let choice = state.pending.take().expect("chosen user has a pending question");
        let truth = &users.answers[u];
        correct -= state.correct;
        remaining -= state.remaining;
        state
            .respondent
            .answer(engine, choice.question, truth[choice.question])?;
        state.refresh(kind, engine, truth)?;
        correct += state.correct;
        remaining += state.remaining;
        log.push(Acquisition {
            query: log.len() + 1,
            user: users.ids[u].clone(),
            question: engine.question_ids()[choice.question].clone(),
            answer: truth[choice.question],
            priority: choice.priority,
            remaining_accuracy: (remaining > 0).then(|| correct as f64 / remaining as f64),
        });
        if log.len() % 1000 == 0 {
            log::debug!("{kind}: {} queries", log.len());
        }
    }
    log::info!("{kind}: population finished after {} queries", log.len());
    Ok(log)
}

fn best_user(states: &[UserState]) -> Result<Option<usize>> {
    let mut best: Option<(usize, f64)> = None;
    for (u, s) in states.iter().enumerate() {
        let Some(sel) = &s.pending else { continue };
        let p = sel
            .priority
            .ok_or_else(|| Error::input("selector reported no priority"))?;
        if best.is_none_or(|(_, b)| p > b) {
            best = Some((u, p));
        }
    }
    Ok(best.map(|(u, _)| u))
}

fn round_robin(states: &[UserState], cursor: &mut usize) -> Option<usize> {
    let n = states.len();
    for k in 0..n {
        let u = (*cursor + k) % n;
        if states[u].pending.is_some() {
            *cursor = (u + 1) % n;
            return Some(u);
        }
    }
    None
}

/// First query index whose remaining-cell accuracy reaches `level`.
pub fn queries_to_reach(log: &[Acquisition], level: f64) -> Option<usize> {
    log.iter()
        .find(|a| a.remaining_accuracy.is_some_and(|x| x >= level))
        .map(|a| a.query)
}

pub fn write_acquisitions(writer: impl Write, log: &[Acquisition]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for a in log {
        w.serialize(a)?;
    }
    w.flush().map_err(|e| Error::io("<acquisitions>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ReactionMatrix;
    use crate::engine::EngineConfig;
    use crate::latent::IdealModel;

    fn toy(n_users: usize) -> (Engine, TestUsers) {
        let ids: Vec<String> = (0..5).map(|j| format!("q{j}")).collect();
        let model = IdealModel::new(
            ids.clone(),
            vec![0.0, 0.3, -0.2, 0.5, -0.6],
            vec![[1.2, 0.0], [0.0, 1.0], [0.8, 0.8], [-1.0, 0.4], [0.3, -1.1]],
        )
        .unwrap();
        let cands: Vec<Option<f64>> = (0..40).map(|i| Some(((i * 13) % 7 >= 3) as u8 as f64)).collect();
        let users: Vec<String> = (0..8).map(|i| format!("c{i}")).collect();
        let matrix = ReactionMatrix::new(users, ids, cands).unwrap();
        let cfg = EngineConfig {
            resolution: 9,
            recommendation_size: 3,
            knn: 3,
            ..EngineConfig::default()
        };
        let engine = Engine::new(model, &matrix, cfg).unwrap();
        let test = TestUsers {
            ids: (0..n_users).map(|i| format!("t{i}")).collect(),
            answers: (0..n_users)
                .map(|i| (0..5).map(|j| (i + j) % 3 != 0).collect())
                .collect(),
        };
        (engine, test)
    }

    #[test]
    fn every_cell_is_queried_once() {
        let (engine, users) = toy(6);
        for kind in [
            SelectorKind::DefaultOrder,
            SelectorKind::Uncertainty,
            SelectorKind::FullKnn,
        ] {
            let log = simulate_matrix_population(kind, &engine, &users).unwrap();
            assert_eq!(log.len(), 30);
            let mut cells: Vec<(String, String)> = log.iter().map(|a| (a.user.clone(), a.question.clone())).collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 30);
            assert_eq!(log.last().unwrap().remaining_accuracy, None);
        }
    }

    #[test]
    fn fixed_orders_visit_users_in_turn() {
        let (engine, users) = toy(3);
        let log = simulate_matrix_population(SelectorKind::DefaultOrder, &engine, &users).unwrap();
        let first: Vec<&str> = log[..6].iter().map(|a| a.user.as_str()).collect();
        assert_eq!(first, ["t0", "t1", "t2", "t0", "t1", "t2"]);
    }

    #[test]
    fn rapid_version_stops_at_its_length() {
        let (engine, users) = toy(4);
        let engine = engine.with_rapid_indices(vec![4, 1]).unwrap();
        let log = simulate_matrix_population(SelectorKind::RapidVersion, &engine, &users).unwrap();
        assert_eq!(log.len(), 8);
        assert!(log.last().unwrap().remaining_accuracy.is_some());
    }

    #[test]
    fn greedy_ties_go_to_the_first_user() {
        let (engine, users) = toy(5);
        let log = simulate_matrix_population(SelectorKind::PosteriorRmse, &engine, &users).unwrap();
        // All users start from the same prior, so the first query goes to user 0.
        assert_eq!(log[0].user, "t0");
        assert!(log.iter().all(|a| a.priority.is_some()));
        assert_eq!(log.len(), 25);
    }

    #[test]
    fn threshold_search() {
        let mk = |q, a| Acquisition {
            query: q,
            user: "u".into(),
            question: "q".into(),
            answer: true,
            priority: None,
            remaining_accuracy: a,
        };
        let log = vec![mk(1, Some(0.5)), mk(2, Some(0.81)), mk(3, None)];
        assert_eq!(queries_to_reach(&log, 0.8), Some(2));
        assert_eq!(queries_to_reach(&log, 0.9), None);
    }
}
