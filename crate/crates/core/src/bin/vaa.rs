use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vaa_core::dataset::{self, DataDir, ReactionMatrix, SplitMaskConfig, TestSize};
use vaa_core::engine::{Engine, EngineConfig};
use vaa_core::harness::adaptivity::{adaptivity_analysis, questions_of};
use vaa_core::harness::population::{queries_to_reach, write_acquisitions};
use vaa_core::harness::scenario::{run_all, run_scenario, ScenarioData, ScenarioOptions};
use vaa_core::harness::simulate::{read_traces_file, write_traces};
use vaa_core::harness::{
    mean_curves, simulate_matrix_population, simulate_questionnaires, CurvePoint, ModelName, Scenario, TestUsers,
};
use vaa_core::latent::{fit_ideal, fit_pca, FitSettings, IdealModel};
use vaa_core::selectors::SelectorKind;
use vaa_core::service::{self, ServiceConfig};
use vaa_core::synth::{self, SyntheticConfig};
use vaa_core::{Error, Result};

#[derive(Parser)]
#[command(name = "vaa", version, about = "Adaptive voting-advice questionnaires")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or prepare answer matrices.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Write a synthetic data directory drawn from a random ideal-point model.
    Synth {
        #[arg(long, default_value_t = 600)]
        users: usize,
        #[arg(long, default_value_t = 50)]
        questions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a latent model on an answer matrix.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit and imputation benchmarks over the sparsity grid.
    Evaluate {
        /// A scenario name or `all`.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// A model name or `all`.
        #[arg(long, default_value = "all")]
        model: String,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every test user through the questionnaire.
    Simulate {
        /// A selector name or `all`.
        #[arg(long)]
        selector: String,
        #[arg(long, value_enum, default_value_t = RecTypeArg::Both)]
        rec_type: RecTypeArg,
        #[command(flatten)]
        engine: EngineArgs,
        /// Per-step traces (long CSV).
        #[arg(long)]
        out: PathBuf,
        /// Mean curves over users (CSV).
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Greedy matrix population over all test users.
    Populate {
        #[arg(long)]
        selector: SelectorKind,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unique questions per step and rank correlations of question orders.
    Adaptivity {
        /// A trace CSV or a directory of them.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include the user × user correlation matrices.
        #[arg(long)]
        matrices: bool,
    },
    /// Serve the session API.
    Serve {
        /// TOML configuration; `VAA_*` variables and flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Check a reactions CSV and print its shape.
    Validate { path: PathBuf },
    /// Split a complete matrix into train.csv and test.csv.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.15)]
        test_fraction: f64,
        /// Exact number of test users; overrides the fraction.
        #[arg(long)]
        test_count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove a fraction of the present cells.
    Mask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sparsity: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Ideal,
    Pca,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RecTypeArg {
    #[value(name = "I")]
    One,
    #[value(name = "II")]
    Two,
    Both,
}

#[derive(Args)]
struct DataArgs {
    /// Data directory (reactions.csv or train.csv + test.csv).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    test_fraction: f64,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<(DataDir, ReactionMatrix, ReactionMatrix)> {
        let dir = DataDir::load(&self.data)?;
        let cfg = SplitMaskConfig {
            test_size: match self.test_count {
                Some(n) => TestSize::Count(n),
                None => TestSize::Fraction(self.test_fraction),
            },
            seed: self.seed,
            ..SplitMaskConfig::default()
        };
        let (train, test) = dir.train_test(&cfg)?;
        Ok((dir, train, test))
    }
}

#[derive(Args)]
struct EngineArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fitted ideal-point model; fitted on the train split when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = vaa_core::belief::DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value_t = vaa_core::recommender::DEFAULT_RECOMMENDATION_SIZE)]
    m: usize,
    /// Fill Type II gaps with rounded predictions.
    #[arg(long)]
    round_predictions: bool,
}

impl EngineArgs {
    fn load(&self) -> Result<(Engine, TestUsers)> {
        let (dir, train, test) = self.data.load()?;
        let model = match &self.model {
            Some(p) => IdealModel::load(p)?,
            None => {
                let settings = FitSettings {
                    seed: self.data.seed,
                    ..FitSettings::default()
                };
                fit_ideal(&train.binarize(), &settings)?.model
            }
        };
        let cfg = EngineConfig {
            resolution: self.resolution,
            recommendation_size: self.m,
            seed: self.data.seed,
            round_predictions: self.round_predictions,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(model, &train, cfg)?;
        if let Some(ids) = &dir.default_order {
            engine = engine.with_default_order(ids)?;
        }
        if let Some(ids) = &dir.rapid_version {
            engine = engine.with_rapid_version(ids)?;
        }
        let users = TestUsers::from_matrix(&engine, &test)?;
        Ok((engine, users))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.into(),
            source: e,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.flush().map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn parse_all<T: std::str::FromStr<Err = Error> + Copy>(name: &str, all: &[T]) -> Result<Vec<T>> {
    if name == "all" {
        Ok(all.to_vec())
    } else {
        Ok(vec![name.parse()?])
    }
}

fn write_curves(path: &Path, curves: &[CurvePoint], rec: RecTypeArg) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["step", "selector"];
    if rec != RecTypeArg::Two {
        header.extend(["mean_overlap_t1", "sem_t1"]);
    }
    if rec != RecTypeArg::One {
        header.extend(["mean_overlap_t2", "sem_t2"]);
    }
    header.extend(["mean_prediction_accuracy", "n_users"]);
    w.write_record(&header).map_err(Error::from)?;
    for c in curves {
        let mut row = vec![c.step.to_string(), c.selector.to_string()];
        if rec != RecTypeArg::Two {
            row.extend([c.mean_overlap_t1.to_string(), c.sem_t1.to_string()]);
        }
        if rec != RecTypeArg::One {
            row.extend([c.mean_overlap_t2.to_string(), c.sem_t2.to_string()]);
        }
        row.push(c.mean_prediction_accuracy.map(|v| v.to_string()).unwrap_or_default());
        row.push(c.n_users.to_string());
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dataset { command } => match command {
            DatasetCommand::Validate { path } => {
                let m = ReactionMatrix::read_csv(&path)?;
                println!(
                    "{}: {} users x {} questions, {} of {} cells present{}",
                    path.display(),
                    m.n_users(),
                    m.n_questions(),
                    m.present_count(),
                    m.n_cells(),
                    if m.is_complete() { " (complete)" } else { "" }
                );
            }
            DatasetCommand::Split {
                input,
                test_fraction,
                test_count,
                seed,
                out,
            } => {
                let m = ReactionMatrix::read_csv(&input)?;
                let cfg = SplitMaskConfig {
                    test_size: test_count.map_or(TestSize::Fraction(test_fraction), TestSize::Count),
                    seed,
                    ..SplitMaskConfig::default()
                };
                let (train, test) = dataset::split(&m, &cfg)?;
                fs::create_dir_all(&out).map_err(|e| Error::Io {
                    path: out.clone(),
                    source: e,
                })?;
                train.write_csv(out.join("train.csv"))?;
                test.write_csv(out.join("test.csv"))?;
                println!("train {} users, test {} users", train.n_users(), test.n_users());
            }
            DatasetCommand::Mask {
                input,
                sparsity,
                seed,
                out,
            } => {
                let m = ReactionMatrix::read_csv(&input)?;
                dataset::mask(&m, sparsity, seed)?.write_csv(&out)?;
            }
        },
        Command::Synth {
            users,
            questions,
            seed,
            out,
        } => {
            let s = synth::generate(&SyntheticConfig {
                n_users: users,
                n_questions: questions,
                seed,
                ..SyntheticConfig::default()
            });
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            s.likert.write_csv(out.join("reactions.csv"))?;
            s.model.save(out.join("generator.json"))?;
            println!("wrote {users} x {questions} answers to {}", out.display());
        }
        Command::Fit {
            model,
            input,
            out,
            seed,
        } => {
            let m = ReactionMatrix::read_csv(&input)?;
            match model {
                FitModel::Ideal => {
                    let fit = fit_ideal(
                        &m.binarize(),
                        &FitSettings {
                            seed,
                            ..FitSettings::default()
                        },
                    )?;
                    println!(
                        "{} sweeps, converged: {}",
                        fit.model.meta.iterations, fit.model.meta.converged
                    );
                    fit.model.save(&out)?;
                }
                FitModel::Pca => write_json(&out, &fit_pca(&m)?)?,
            }
        }
        Command::Evaluate {
            scenario,
            model,
            data,
            out,
        } => {
            let (_, train, test) = data.load()?;
            let models = parse_all(&model, &ModelName::ALL)?;
            let scenarios = parse_all(&scenario, &Scenario::ALL)?;
            let input = ScenarioData { train, test };
            let opts = ScenarioOptions {
                seed: data.seed,
                fit: FitSettings {
                    seed: data.seed,
                    ..FitSettings::default()
                },
                ..ScenarioOptions::default()
            };
            let reports = if scenarios.len() == Scenario::ALL.len() {
                run_all(&models, &input, &opts)?
            } else {
                let mut r = Vec::new();
                for &m in &models {
                    for &s in &scenarios {
                        r.push(run_scenario(s, m, &input, &opts)?);
                    }
                }
                r
            };
            for r in &reports {
                println!("{:<13} {:<7} average {}", r.scenario, r.model, fmt_opt(r.average));
            }
            write_json(&out, &reports)?;
        }
        Command::Simulate {
            selector,
            rec_type,
            engine,
            out,
            curves,
        } => {
            let (engine, users) = engine.load()?;
            let kinds = if selector == "all" {
                SelectorKind::ALL
                    .into_iter()
                    .filter(|k| *k != SelectorKind::RapidVersion || engine.rapid_version().is_some())
                    .collect()
            } else {
                vec![selector.parse::<SelectorKind>()?]
            };
            let mut traces = Vec::new();
            let mut all_curves = Vec::new();
            for kind in kinds {
                let t = simulate_questionnaires(kind, &engine, &users)?;
                all_curves.extend(mean_curves(&t));
                traces.extend(t);
            }
            write_traces(create(&out)?, &traces)?;
            if let Some(path) = curves {
                write_curves(&path, &all_curves, rec_type)?;
            }
        }
        Command::Populate { selector, engine, out } => {
            let (engine, users) = engine.load()?;
            let log = simulate_matrix_population(selector, &engine, &users)?;
            match queries_to_reach(&log, 0.8) {
                Some(n) => println!("{} queries; 0.80 remaining-cell accuracy after {n}", log.len()),
                None => println!("{} queries; 0.80 remaining-cell accuracy never reached", log.len()),
            }
            write_acquisitions(create(&out)?, &log)?;
        }
        Command::Adaptivity { input, out, matrices } => {
            let files: Vec<PathBuf> = if input.is_dir() {
                let mut f: Vec<PathBuf> = fs::read_dir(&input)
                    .map_err(|e| Error::Io {
                        path: input.clone(),
                        source: e,
                    })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                    .collect();
                f.sort();
                f
            } else {
                vec![input]
            };
            let mut traces = Vec::new();
            for f in files {
                traces.extend(read_traces_file(f)?);
            }
            let mut questions = questions_of(&traces);
            questions.sort();
            let report = adaptivity_analysis(&traces, &questions, matrices)?;
            for s in &report.selectors {
                println!("{:<18} adaptivity {}", s.selector.to_string(), fmt_opt(s.adaptivity));
            }
            write_json(&out, &report)?;
        }
        Command::Serve {
            config,
            model,
            data,
            port,
            store,
            static_dir,
        } => {
            let mut cfg = ServiceConfig::load(config.as_deref())?;
            cfg.model = model.or(cfg.model);
            cfg.data_dir = data.or(cfg.data_dir);
            cfg.store = store.or(cfg.store);
            cfg.static_dir = static_dir.or(cfg.static_dir);
            if let Some(p) = port {
                let host = cfg.bind.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h).to_string();
                cfg.bind = format!("{host}:{p}");
            }
            tokio::runtime::Runtime::new()
                .map_err(|e| Error::Io {
                    path: "tokio".into(),
                    source: e,
                })?
                .block_on(service::serve(cfg))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
