//! Shared, read-only state of an adaptive questionnaire (fitted model,
//! grid, likelihood table, candidates) and the per-respondent state that
//! evolves as answers arrive.

use serde::{Deserialize, Serialize};

use crate::belief::{LatentGrid, LikelihoodTable, PosteriorBelief, DEFAULT_RESOLUTION};
use crate::dataset::{binarize_value, DataDir, ReactionMatrix};
use crate::error::{Error, Result};
use crate::latent::IdealModel;
use crate::recommender::{self, RecType, Recommendation, DEFAULT_RECOMMENDATION_SIZE};
use crate::selectors::gini;

/// Nearest neighbours consulted by the kNN selectors.
pub const DEFAULT_KNN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub resolution: usize,
    pub knn: usize,
    pub recommendation_size: usize,
    pub seed: u64,
    /// Round Type II predictions to {0, 1} before matching.
    pub round_predictions: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            knn: DEFAULT_KNN,
            recommendation_size: DEFAULT_RECOMMENDATION_SIZE,
            seed: 0,
            round_predictions: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub(crate) model: IdealModel,
    pub(crate) grid: LatentGrid,
    pub(crate) table: LikelihoodTable,
    pub(crate) candidate_ids: Vec<String>,
    pub(crate) candidates: Vec<Vec<f64>>,
    pub(crate) prior_evidence: Vec<f64>,
    pub(crate) fixed_gini_order: Vec<usize>,
    pub(crate) default_order: Vec<usize>,
    pub(crate) rapid_version: Option<Vec<usize>>,
    pub(crate) config: EngineConfig,
}

impl Engine {
    /// `candidates` must be complete; its cells are binarized. Its columns
    /// must be exactly the model's questions, in order.
    pub fn new(model: IdealModel, candidates: &ReactionMatrix, config: EngineConfig) -> Result<Self> {
        if candidates.question_ids() != model.question_ids.as_slice() {
            return Err(Error::input("candidate columns do not match the model's questions"));
        }
        if candidates.n_users() == 0 {
            return Err(Error::input("no candidates"));
        }
        let rows = candidates
            .dense_rows()?
            .into_iter()
            .map(|r| r.into_iter().map(binarize_value).collect())
            .collect();
        let grid = LatentGrid::new(config.resolution)?;
        Ok(Self::assemble(
            model,
            grid,
            candidates.user_ids().to_vec(),
            rows,
            config,
        ))
    }

    /// Engine over an explicit grid and likelihood table; used for small
    /// hand-built instances. `model` only supplies question ids.
    pub fn from_parts(
        model: IdealModel,
        grid: LatentGrid,
        table: LikelihoodTable,
        candidates: Vec<Vec<f64>>,
        config: EngineConfig,
    ) -> Result<Self> {
        if table.n_cells() != grid.n_cells() || table.n_questions() != model.n_questions() {
            return Err(Error::input("likelihood table does not match grid or model"));
        }
        if candidates.iter().any(|c| c.len() != model.n_questions()) {
            return Err(Error::input("candidate rows must cover every question"));
        }
        let ids = (0..candidates.len()).map(|i| i.to_string()).collect();
        let mut engine = Self::assemble(model, grid.clone(), ids, candidates, config);
        engine.table = table;
        engine.grid = grid;
        engine.refresh_prior_evidence();
        Ok(engine)
    }

    fn assemble(
        model: IdealModel,
        grid: LatentGrid,
        candidate_ids: Vec<String>,
        candidates: Vec<Vec<f64>>,
        config: EngineConfig,
    ) -> Self {
        let table = LikelihoodTable::from_model(&model, &grid);
        let n = model.n_questions();
        let mut engine = Self {
            model,
            grid,
            table,
            candidate_ids,
            candidates,
            prior_evidence: Vec::new(),
            fixed_gini_order: Vec::new(),
            default_order: (0..n).collect(),
            rapid_version: None,
            config,
        };
        engine.refresh_prior_evidence();
        engine
    }

    fn refresh_prior_evidence(&mut self) {
        self.prior_evidence = PosteriorBelief::prior(&self.grid).predictive_all(&self.table);
        let mut order: Vec<usize> = (0..self.prior_evidence.len()).collect();
        order.sort_by(|&a, &b| {
            gini(self.prior_evidence[b])
                .total_cmp(&gini(self.prior_evidence[a]))
                .then(a.cmp(&b))
        });
        self.fixed_gini_order = order;
    }

    /// Loads candidates and question orders from a data directory.
    pub fn from_data_dir(model: IdealModel, dir: &DataDir, config: EngineConfig) -> Result<Self> {
        let candidates = match &dir.presplit {
            Some((train, _)) => train.clone(),
            None => dir.all_reactions(),
        };
        let mut engine = Self::new(model, &candidates, config)?;
        if let Some(ids) = &dir.default_order {
            engine = engine.with_default_order(ids)?;
        }
        if let Some(ids) = &dir.rapid_version {
            engine = engine.with_rapid_version(ids)?;
        }
        Ok(engine)
    }

    pub fn with_default_order(mut self, ids: &[String]) -> Result<Self> {
        let order = self.resolve(ids)?;
        if order.len() != self.n_questions() {
            return Err(Error::input("the default order must list every question once"));
        }
        self.default_order = order;
        Ok(self)
    }

    pub fn with_rapid_version(mut self, ids: &[String]) -> Result<Self> {
        self.rapid_version = Some(self.resolve(ids)?);
        Ok(self)
    }

    pub fn with_rapid_indices(mut self, order: Vec<usize>) -> Result<Self> {
        check_order(&order, self.n_questions())?;
        self.rapid_version = Some(order);
        Ok(self)
    }

    fn resolve(&self, ids: &[String]) -> Result<Vec<usize>> {
        let order = ids
            .iter()
            .map(|id| {
                self.question_index(id)
                    .ok_or_else(|| Error::UnknownQuestion(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        check_order(&order, self.n_questions())?;
        Ok(order)
    }

    pub fn model(&self) -> &IdealModel {
        &self.model
    }

    pub fn grid(&self) -> &LatentGrid {
        &self.grid
    }

    pub fn table(&self) -> &LikelihoodTable {
        &self.table
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn n_questions(&self) -> usize {
        self.model.n_questions()
    }

    pub fn question_ids(&self) -> &[String] {
        &self.model.question_ids
    }

    pub fn question_index(&self, id: &str) -> Option<usize> {
        self.model.question_index(id)
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    /// `P(Y_j = 1)` under the prior.
    pub fn prior_evidence(&self) -> &[f64] {
        &self.prior_evidence
    }

    pub fn default_order(&self) -> &[usize] {
        &self.default_order
    }

    pub fn rapid_version(&self) -> Option<&[usize]> {
        self.rapid_version.as_deref()
    }

    pub fn respondent(&self, key: u64) -> Respondent {
        Respondent {
            key,
            answers: vec![None; self.n_questions()],
            skipped: vec![false; self.n_questions()],
            asked: Vec::new(),
            belief: PosteriorBelief::prior(&self.grid),
        }
    }

    /// Type I (answered questions only) or Type II (answers completed with
    /// predictive probabilities) recommendation of size `m`.
    pub fn recommend(&self, r: &Respondent, kind: RecType, m: usize) -> Result<Recommendation> {
        let answers = r.answer_values();
        match kind {
            RecType::TypeI => recommender::recommend_type1(&answers, &self.candidates, m),
            RecType::TypeII => {
                let predictions = r.predictions(self);
                recommender::recommend_type2(
                    &answers,
                    &predictions,
                    &self.candidates,
                    m,
                    self.config.round_predictions,
                )
            }
        }
    }
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &q in order {
        if q >= n || std::mem::replace(&mut seen[q], true) {
            return Err(Error::input("question order has duplicate or unknown entries"));
        }
    }
    if order.is_empty() {
        return Err(Error::input("question order is empty"));
    }
    Ok(())
}

/// One person working through the questionnaire.
#[derive(Debug, Clone, PartialEq)]
pub struct Respondent {
    /// Seeds per-user randomness (random order).
    pub key: u64,
    answers: Vec<Option<bool>>,
    skipped: Vec<bool>,
    asked: Vec<usize>,
    belief: PosteriorBelief,
}

impl Respondent {
    pub fn answer(&mut self, engine: &Engine, question: usize, yes: bool) -> Result<()> {
        self.check_open(question)?;
        self.belief = self.belief.update(&engine.table, question, yes)?;
        self.answers[question] = Some(yes);
        self.asked.push(question);
        Ok(())
    }

    /// Marks a question as skipped: never offered again and carrying no
    /// information.
    pub fn skip(&mut self, question: usize) -> Result<()> {
        self.check_open(question)?;
        self.skipped[question] = true;
        Ok(())
    }

    fn check_open(&self, question: usize) -> Result<()> {
        if question >= self.answers.len() {
            return Err(Error::UnknownQuestion(question.to_string()));
        }
        if self.answers[question].is_some() || self.skipped[question] {
            return Err(Error::AlreadyAnswered(question.to_string()));
        }
        Ok(())
    }

    pub fn belief(&self) -> &PosteriorBelief {
        &self.belief
    }

    pub fn answers(&self) -> &[Option<bool>] {
        &self.answers
    }

    pub fn answer_values(&self) -> Vec<Option<f64>> {
        self.answers
            .iter()
            .map(|a| a.map(|y| if y { 1.0 } else { 0.0 }))
            .collect()
    }

    pub fn is_answered(&self, question: usize) -> bool {
        self.answers[question].is_some()
    }

    pub fn is_skipped(&self, question: usize) -> bool {
        self.skipped[question]
    }

    /// Answered questions in the order they were answered.
    pub fn asked(&self) -> &[usize] {
        &self.asked
    }

    pub fn n_answered(&self) -> usize {
        self.asked.len()
    }

    /// Questions neither answered nor skipped, ascending.
    pub fn open_questions(&self) -> Vec<usize> {
        (0..self.answers.len())
            .filter(|&q| self.answers[q].is_none() && !self.skipped[q])
            .collect()
    }

    /// Questions without an answer (open or skipped), ascending.
    pub fn unanswered(&self) -> Vec<usize> {
        (0..self.answers.len()).filter(|&q| self.answers[q].is_none()).collect()
    }

    /// Predictive agreement probability for every question; answered
    /// questions report their posterior predictive too.
    pub fn predictions(&self, engine: &Engine) -> Vec<f64> {
        self.belief.predictive_all(&engine.table)
    }
}
