//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use instrlearn_core::bias::{bias_report, me_regression_rows, ME_PREDICTORS};
use instrlearn_core::grammar::{interpret, GrammarConfig, GrammarError, Instruction, Lexicon};
use instrlearn_core::protocol::{aggregate, exp1_item_sets, grade_session, ExperimentKind, ExperimentSpec, ParticipantResult, Summary};
use instrlearn_core::seq2seq::{
    decode_trace, init_model, baseline_architectures, train, ModelConfig, TrainConfig, Vocab,
};
use instrlearn_core::simulator::{BiasProfile, SimulatedPopulation};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{pair, read_json, read_sessions, specs_for, to_json_string, write_file, write_json, write_sessions};
use crate::server::ServerConfig;
use crate::store::SessionStore;
use crate::sweep::{run_sweep, simulate_population_par, summarize, write_results_csv};
use crate::params_file;

#[derive(Debug, Parser)]
#[command(name = "instrlearn", version, about = "Few-shot instruction learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the denotation of an instruction.
    Interpret {
        /// Lexicon JSON; the canonical lexicon when omitted.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        max_output_len: Option<usize>,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Generate an experiment spec.
    GenExp {
        #[arg(long, value_parser = ["1", "2", "3"])]
        exp: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grade sessions and aggregate the results.
    Grade {
        #[arg(long)]
        sessions: PathBuf,
        /// Require every session to belong to this spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bias report over sessions.
    Analyze {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the regression design matrix as CSV.
        #[arg(long)]
        design_csv: Option<PathBuf>,
    },
    /// Simulate participants on a spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Bias profile JSON.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a sequence-to-sequence model on the curriculum's study items.
    Train {
        /// Curriculum spec whose final-stage lexicon defines the items; the
        /// canonical lexicon when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// JSON with `model` and `train` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-presentation losses, one per line.
        #[arg(long)]
        loss_trace: Option<PathBuf>,
    },
    /// Train every baseline architecture over several seeds.
    Sweep {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        presentations: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Per-architecture means as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Decode an instruction with trained parameters.
    Decode {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_len: usize,
        /// Print per-step distributions and attention weights as JSON.
        #[arg(long)]
        trace: bool,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Run the experiment server.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Export sessions from a server data directory.
    Export {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFile {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for TrainFile {
    fn default() -> Self {
        TrainFile {
            model: ModelConfig::new(2, 200, 0.5, false),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Serialize)]
struct GradeOutput {
    participants: Vec<ParticipantResult>,
    summary: Option<Summary>,
}

/// Exit status for a failed command: 2 for instructions the grammar rejects,
/// 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Grammar(
            GrammarError::MalformedInstruction(_)
            | GrammarError::UnknownWord(_)
            | GrammarError::EmptyInstruction
            | GrammarError::InvalidWord(_),
        ) => 2,
        _ => 1,
    }
}

fn instruction(words: &[String]) -> Result<Instruction> {
    Ok(words.join(" ").parse::<Instruction>()?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn load_sessions(sessions: &Path, spec: Option<&Path>) -> Result<(Vec<ExperimentSpec>, Vec<instrlearn_core::protocol::Session>)> {
    let sessions = read_sessions(sessions)?;
    let given: Option<ExperimentSpec> = spec.map(read_json).transpose()?;
    let specs = specs_for(&sessions, given.as_ref())?;
    Ok((specs, sessions))
}

/// Lexicon of the last curriculum stage.
fn final_lexicon(spec: &ExperimentSpec) -> Result<Lexicon> {
    if spec.kind != ExperimentKind::Exp1 {
        return Err(Error::Format(format!("training needs an exp1 spec, got {}", spec.kind)));
    }
    let block = spec.blocks.last().ok_or_else(|| Error::Format("spec has no blocks".into()))?;
    Ok(block.lexicon.clone())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Interpret {
            lexicon,
            max_output_len,
            words,
        } => {
            let lex = match lexicon {
                Some(p) => read_json(&p)?,
                None => Lexicon::canonical(),
            };
            let mut cfg = GrammarConfig::default();
            if let Some(n) = max_output_len {
                cfg.max_output_len = n;
            }
            let out = interpret(&instruction(&words)?, &lex, &cfg)?;
            println!("{out}");
        }
        Command::GenExp { exp, seed, out } => {
            let kind: ExperimentKind = exp.parse()?;
            write_json(&out, &ExperimentSpec::generate(kind, seed))?;
        }
        Command::Grade { sessions, spec, out } => {
            let (specs, sessions) = load_sessions(&sessions, spec.as_deref())?;
            let participants = pair(&specs, &sessions)
                .into_iter()
                .map(|(sp, s)| grade_session(sp, s))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let summary = (!participants.is_empty()).then(|| aggregate(&participants)).transpose()?;
            emit(out.as_deref(), &to_json_string(&GradeOutput { participants, summary }))?;
        }
        Command::Analyze {
            sessions,
            spec,
            out,
            design_csv,
        } => {
            let (specs, sessions) = load_sessions(&sessions, spec.as_deref())?;
            let entries = pair(&specs, &sessions);
            let report = bias_report(&entries, &GrammarConfig::default())?;
            write_json(&out, &report)?;
            if let Some(path) = design_csv {
                let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["participant_id", ME_PREDICTORS[0], ME_PREDICTORS[1], "violated"])?;
                for r in me_regression_rows(&entries)? {
                    w.write_record([
                        r.participant_id.clone(),
                        r.n_contradictory.to_string(),
                        r.pool_size.to_string(),
                        u8::from(r.violated).to_string(),
                    ])?;
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
        }
        Command::Simulate {
            spec,
            profile,
            n,
            seed,
            out,
        } => {
            let spec: ExperimentSpec = read_json(&spec)?;
            let profile: BiasProfile = read_json(&profile)?;
            let pop = SimulatedPopulation::uniform(profile, n, seed);
            let sessions = simulate_population_par(&spec, &pop, &GrammarConfig::default())?;
            write_sessions(&out, &sessions)?;
        }
        Command::Train {
            spec,
            config,
            out,
            loss_trace,
        } => {
            let lex = match spec {
                Some(p) => final_lexicon(&read_json(&p)?)?,
                None => Lexicon::canonical(),
            };
            let file: TrainFile = match config {
                Some(p) => read_json(&p)?,
                None => TrainFile::default(),
            };
            let items = exp1_item_sets(&lex).study;
            let init = init_model(&file.model, &Vocab::from_lexicon(&lex), file.train.seed)?;
            let trained = train(&init, &items, &file.train)?;
            params_file::save(&out, &trained.params)?;
            if let Some(p) = loss_trace {
                let text: String = trained.losses.iter().map(|l| format!("{l}\n")).collect();
                write_file(&p, text.as_bytes())?;
            }
        }
        Command::Sweep {
            out,
            seeds,
            presentations,
            threads,
            summary,
        } => {
            let mut tcfg = TrainConfig::default();
            if let Some(n) = presentations {
                tcfg.presentations = n;
            }
            let archs = baseline_architectures();
            let results = match threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::Format(e.to_string()))?
                    .install(|| run_sweep(&archs, seeds, &tcfg))?,
                None => run_sweep(&archs, seeds, &tcfg)?,
            };
            let f = std::fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            write_results_csv(f, &results)?;
            let means = summarize(&results);
            for m in &means {
                eprintln!(
                    "{:<28} hidden {:>3}  train {:.3}  test {:.3}",
                    m.architecture, m.hidden, m.mean_train_acc, m.mean_test_acc
                );
            }
            if let Some(p) = summary {
                write_json(&p, &means)?;
            }
        }
        Command::Decode {
            params,
            max_len,
            trace,
            words,
        } => {
            let params = params_file::load(&params)?;
            let (out, steps) = decode_trace(&params, &instruction(&words)?, max_len)?;
            if trace {
                let steps: Vec<_> = steps
                    .iter()
                    .map(|s| serde_json::json!({ "probs": s.probs, "attention": s.attention }))
                    .collect();
                print!("{}", to_json_string(&serde_json::json!({ "output": out, "steps": steps })));
            } else {
                println!("{out}");
            }
        }
        Command::Serve { config } => {
            let cfg = match config {
                Some(p) => ServerConfig::load(&p)?,
                None => {
                    let mut c = ServerConfig::default();
                    c.apply_env();
                    c
                }
            };
            tokio::runtime::Runtime::new()
                .map_err(|e| Error::io("<runtime>", e))?
                .block_on(crate::server::serve(cfg))?;
        }
        Command::Export { data_dir, kind, out } => {
            let kind = kind.as_deref().map(str::parse::<ExperimentKind>).transpose()?;
            let store = SessionStore::open(&data_dir)?;
            write_file(&out, store.export(kind).as_bytes())?;
        }
    }
    Ok(())
}
