use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::store::{SessionEvent, SessionRecord, SessionStore};
use crate::belief::BeliefExport;
use crate::engine::{Engine, Respondent};
use crate::error::{Error, Result};
use crate::recommender::{overlap_accuracy, RecType, Recommendation};
use crate::selectors::{select, SelectorKind};

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

fn system_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CreateSession {
    pub selector: Option<String>,
    pub m: Option<usize>,
    /// Seeds the random selector; sessions with equal seeds and answers
    /// see equal questions.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SubmitAnswer {
    pub question_id: String,
    /// 1 agrees, 0 disagrees.
    pub answer: Option<u8>,
    #[serde(default)]
    pub skip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionInfo {
    pub id: String,
    pub index: usize,
    pub text: String,
    /// Prior probability of agreement.
    pub prior_p_yes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextQuestion {
    pub id: String,
    pub index: usize,
    pub text: String,
    pub score: f64,
    pub priority: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub selector: SelectorKind,
    pub m: usize,
    pub n_questions: usize,
    pub answered: usize,
    pub skipped: usize,
    pub events: Vec<SessionEvent>,
    pub done: bool,
    pub next_question: Option<NextQuestion>,
    pub created: u64,
    pub updated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedItem {
    pub candidate_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationView {
    #[serde(rename = "type")]
    pub kind: RecType,
    pub m: usize,
    pub items: Vec<RecommendedItem>,
    /// Overlap with the final recommendation, once the session is done.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truth_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    /// Unavailable until something has been answered.
    pub type_i: Option<RecommendationView>,
    pub type_ii: RecommendationView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub map_estimate: [f64; 2],
    pub mean: [f64; 2],
    pub spatial_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub p_yes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub session: SessionView,
    pub belief: BeliefSummary,
    pub recommendations: Recommendations,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorsView {
    pub selectors: Vec<SelectorKind>,
    pub default: SelectorKind,
}

/// Session logic behind the HTTP routes, usable without a server.
pub struct SessionService {
    engine: Arc<Engine>,
    questions: Vec<QuestionInfo>,
    store: SessionStore,
    default_selector: SelectorKind,
    default_m: usize,
    ttl_secs: u64,
    clock: Clock,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl SessionService {
    /// `texts` maps question ids to display text; missing ids show the id.
    pub fn new(
        engine: Arc<Engine>,
        texts: &HashMap<String, String>,
        store: SessionStore,
        default_selector: SelectorKind,
        default_m: usize,
        ttl_secs: u64,
    ) -> Result<Self> {
        check_m(&engine, default_m)?;
        let questions = engine
            .question_ids()
            .iter()
            .enumerate()
            .map(|(index, id)| QuestionInfo {
                id: id.clone(),
                index,
                text: texts.get(id).cloned().unwrap_or_else(|| id.clone()),
                prior_p_yes: engine.prior_evidence()[index],
            })
            .collect();
        Ok(Self {
            engine,
            questions,
            store,
            default_selector,
            default_m,
            ttl_secs,
            clock: Arc::new(system_clock),
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn questions(&self) -> &[QuestionInfo] {
        &self.questions
    }

    pub fn selectors(&self) -> SelectorsView {
        SelectorsView {
            selectors: SelectorKind::ALL.to_vec(),
            default: self.default_selector,
        }
    }

    pub fn create(&self, req: CreateSession) -> Result<SessionView> {
        let selector = match &req.selector {
            Some(name) => name.parse()?,
            None => self.default_selector,
        };
        let m = req.m.unwrap_or(self.default_m);
        check_m(&self.engine, m)?;
        let now = (self.clock)();
        let evicted = self.store.evict_older_than(now.saturating_sub(self.ttl_secs))?;
        if evicted > 0 {
            log::info!("evicted {evicted} expired sessions");
        }
        let record = SessionRecord {
            id: uuid::Uuid::new_v4().simple().to_string(),
            selector,
            m,
            seed: req.seed.unwrap_or(0),
            events: Vec::new(),
            created: now,
            updated: now,
        };
        let respondent = self.replay(&record)?;
        let view = self.view(&record, &respondent)?;
        self.store.put(&record)?;
        Ok(view)
    }

    pub fn get(&self, id: &str) -> Result<SessionView> {
        let record = self.load(id)?;
        let respondent = self.replay(&record)?;
        self.view(&record, &respondent)
    }

    pub fn submit(&self, id: &str, req: SubmitAnswer) -> Result<StepResult> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut record = self.load(id)?;
        let mut respondent = self.replay(&record)?;
        let q = self
            .engine
            .question_index(&req.question_id)
            .ok_or_else(|| Error::UnknownQuestion(req.question_id.clone()))?;
        let answer = match (req.answer, req.skip) {
            (None, true) => None,
            (Some(0), false) => Some(false),
            (Some(1), false) => Some(true),
            (Some(a), false) => return Err(Error::input(format!("answer must be 0 or 1, got {a}"))),
            (Some(_), true) => return Err(Error::input("give either an answer or skip, not both")),
            (None, false) => return Err(Error::input("missing answer")),
        };
        apply(&self.engine, &mut respondent, q, answer).map_err(|e| match e {
            Error::AlreadyAnswered(_) => Error::AlreadyAnswered(req.question_id.clone()),
            e => e,
        })?;
        record.events.push(SessionEvent {
            question_id: req.question_id,
            answer,
        });
        record.updated = (self.clock)().max(record.updated);
        let session = self.view(&record, &respondent)?;
        self.store.put(&record)?;
        let belief = respondent.belief();
        let grid = self.engine.grid();
        Ok(StepResult {
            recommendations: self.recommendations_for(&record, &respondent, session.done)?,
            belief: BeliefSummary {
                map_estimate: belief.map_point(grid),
                mean: belief.mean(grid),
                spatial_variance: belief.spatial_variance(grid),
            },
            predictions: respondent
                .predictions(&self.engine)
                .into_iter()
                .zip(self.engine.question_ids())
                .map(|(p_yes, id)| Prediction {
                    question_id: id.clone(),
                    p_yes,
                })
                .collect(),
            session,
        })
    }

    pub fn belief(&self, id: &str) -> Result<BeliefExport> {
        let record = self.load(id)?;
        Ok(self.replay(&record)?.belief().export(self.engine.grid()))
    }

    pub fn recommendations(&self, id: &str) -> Result<Recommendations> {
        let record = self.load(id)?;
        let respondent = self.replay(&record)?;
        let done = select(record.selector, &self.engine, &respondent)?.is_none();
        self.recommendations_for(&record, &respondent, done)
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    fn load(&self, id: &str) -> Result<SessionRecord> {
        let not_found = || Error::NotFound(format!("session {id}"));
        let record = self.store.get(id)?.ok_or_else(not_found)?;
        if record.updated + self.ttl_secs < (self.clock)() {
            self.store.remove(id)?;
            return Err(not_found());
        }
        Ok(record)
    }

    /// Rebuilds the respondent from the prior by replaying the event log.
    pub fn replay(&self, record: &SessionRecord) -> Result<Respondent> {
        let mut r = self.engine.respondent(record.seed);
        for e in &record.events {
            let q = self
                .engine
                .question_index(&e.question_id)
                .ok_or_else(|| Error::UnknownQuestion(e.question_id.clone()))?;
            apply(&self.engine, &mut r, q, e.answer)?;
        }
        Ok(r)
    }

    fn view(&self, record: &SessionRecord, r: &Respondent) -> Result<SessionView> {
        let next = select(record.selector, &self.engine, r)?;
        let skipped = record.events.iter().filter(|e| e.answer.is_none()).count();
        Ok(SessionView {
            id: record.id.clone(),
            selector: record.selector,
            m: record.m,
            n_questions: self.engine.n_questions(),
            answered: r.n_answered(),
            skipped,
            events: record.events.clone(),
            done: next.is_none(),
            next_question: next.map(|s| NextQuestion {
                id: self.questions[s.question].id.clone(),
                index: s.question,
                text: self.questions[s.question].text.clone(),
                score: s.score,
                priority: s.priority,
            }),
            created: record.created,
            updated: record.updated,
        })
    }

    fn recommendations_for(&self, record: &SessionRecord, r: &Respondent, done: bool) -> Result<Recommendations> {
        let type_i = if r.n_answered() > 0 {
            Some(self.engine.recommend(r, RecType::TypeI, record.m)?)
        } else {
            None
        };
        let type_ii = self.engine.recommend(r, RecType::TypeII, record.m)?;
        let truth = match (&type_i, done) {
            (Some(t), true) => Some(t.candidates()),
            _ => None,
        };
        let view = |rec: &Recommendation| -> Result<RecommendationView> {
            Ok(RecommendationView {
                kind: rec.kind,
                m: record.m,
                items: rec
                    .items
                    .iter()
                    .map(|i| RecommendedItem {
                        candidate_id: self.engine.candidate_ids()[i.candidate].clone(),
                        distance: i.distance,
                    })
                    .collect(),
                truth_overlap: truth
                    .as_ref()
                    .map(|t| overlap_accuracy(t, &rec.candidates()))
                    .transpose()?,
            })
        };
        Ok(Recommendations {
            type_i: type_i.as_ref().map(view).transpose()?,
            type_ii: view(&type_ii)?,
        })
    }
}

fn apply(engine: &Engine, r: &mut Respondent, q: usize, answer: Option<bool>) -> Result<()> {
    match answer {
        Some(yes) => r.answer(engine, q, yes),
        None => r.skip(q),
    }
}

fn check_m(engine: &Engine, m: usize) -> Result<()> {
    if m == 0 || m > engine.candidates().len() {
        return Err(Error::input(format!(
            "recommendation size must be between 1 and {}",
            engine.candidates().len()
        )));
    }
    Ok(())
}
