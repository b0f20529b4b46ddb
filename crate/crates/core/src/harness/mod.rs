//! Batch experiments: fit and imputation scenarios, individual
//! questionnaire simulation, matrix population and adaptivity analysis.

pub mod adaptivity;
pub mod metrics;
pub mod population;
pub mod scenario;
pub mod simulate;

pub use adaptivity::{adaptivity_analysis, AdaptivityReport};
pub use metrics::{accuracy_metric, mean_accuracy, mean_sem, pearson, rmse_metric};
pub use population::{simulate_matrix_population, Acquisition};
pub use scenario::{run_all, run_scenario, Metric, ModelName, Scenario, ScenarioData, ScenarioOptions, ScenarioReport};
pub use simulate::{mean_curves, simulate_questionnaires, CurvePoint, QuestionnaireTrace, TestUsers, TraceStep};
