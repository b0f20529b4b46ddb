//! Adaptive questionnaires for voting advice applications.
//!
//! Candidates' complete answers train a two-dimensional probit ideal-point
//! model. A new respondent's position is tracked as a posterior over a
//! grid on the latent plane; after every answer a selector picks the most
//! informative next question, and the closest candidates are recommended
//! either from the answers given so far (Type I) or from the answers
//! completed with model predictions (Type II).

pub mod belief;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod harness;
pub mod latent;
pub mod recommender;
pub mod selectors;
pub mod service;
pub mod synth;

pub use belief::{LatentGrid, LikelihoodTable, PosteriorBelief};
pub use dataset::ReactionMatrix;
pub use engine::{Engine, EngineConfig, Respondent};
pub use error::{Error, Result};
pub use latent::IdealModel;
pub use recommender::{RecType, Recommendation};
pub use selectors::{select, SelectionResult, SelectorKind};
