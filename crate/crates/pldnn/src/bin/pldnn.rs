//! Command-line front end: train networks from event logs, rule files, or
//! CSV datasets; query them; evaluate recall; merge, export, and extract.
//!
//! Exit codes: 0 success, 1 honest negative result (no convergence,
//! incomplete recall), 2 usage or input errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::{json, Value};

use pldnn::error::Error;
use pldnn::ingest::{self, DatasetSchema};
use pldnn::learning::{self, Mode, RecallReport, Transition};
use pldnn::network::Network;
use pldnn::persist;
use pldnn::reasoning::{self, Event};
use pldnn::rules;

#[derive(Parser)]
#[command(name = "pldnn", version, about = "Event-transition networks: train, reason, inspect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModeArgs {
    /// Reasoning mode: det (weights ignored) or prob (threshold on scores).
    #[arg(long, default_value = "det", value_parser = ["det", "prob"])]
    mode: String,

    /// Probabilistic membership threshold; a fraction like 1/2 or a
    /// decimal like 0.5.
    #[arg(long, env = "PLDNN_THETA", default_value = "1/2")]
    theta: String,
}

impl ModeArgs {
    fn mode(&self) -> Result<Mode, Error> {
        match self.mode.as_str() {
            "det" => Ok(Mode::Deterministic),
            "prob" => Ok(Mode::Probabilistic {
                theta: parse_ratio(&self.theta)?,
            }),
            _ => unreachable!("clap validates the value"),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Event-log file: one `pre -> post` transition per line.
    #[arg(long, conflicts_with_all = ["rules", "data"])]
    log: Option<PathBuf>,

    /// Rule file in the `IF a AND NOT b THEN c` syntax.
    #[arg(long, conflicts_with = "data")]
    rules: Option<PathBuf>,

    /// CSV dataset; requires --schema.
    #[arg(long, requires = "schema")]
    data: Option<PathBuf>,

    /// TOML column schema for --data.
    #[arg(long)]
    schema: Option<PathBuf>,

    /// For --rules: do not add closed-world negatives for unmentioned
    /// labels.
    #[arg(long)]
    open_world: bool,

    /// For --data: fail on out-of-domain values instead of widening.
    #[arg(long)]
    strict: bool,
}

struct LoadedInput {
    transitions: Vec<Transition>,
    skipped_rows: usize,
    conflicting_rows: usize,
}

impl InputArgs {
    fn load(&self) -> Result<LoadedInput, Error> {
        if let Some(path) = &self.log {
            let transitions = persist::parse_event_log(&fs::read_to_string(path)?)?;
            return Ok(LoadedInput {
                transitions,
                skipped_rows: 0,
                conflicting_rows: 0,
            });
        }
        if let Some(path) = &self.rules {
            let library = rules::parse_rules(&fs::read_to_string(path)?)?;
            let groups = rules::universe_group(&library);
            let groups = if self.open_world {
                None
            } else {
                Some(groups.as_slice())
            };
            return Ok(LoadedInput {
                transitions: rules::rules_to_transitions(&library, groups)?,
                skipped_rows: 0,
                conflicting_rows: 0,
            });
        }
        if let Some(path) = &self.data {
            let schema_path = self.schema.as_ref().expect("clap enforces --schema");
            let schema = DatasetSchema::from_toml(&fs::read_to_string(schema_path)?)?;
            let loaded = ingest::load_records(path, &schema, self.strict)?;
            let skipped_rows = loaded.skipped.len();
            let dedup = ingest::dedupe_conflicts(loaded.transitions);
            return Ok(LoadedInput {
                transitions: dedup
                    .transitions
                    .into_iter()
                    .map(|r| r.transition)
                    .collect(),
                skipped_rows,
                conflicting_rows: dedup.conflicting_rows.len(),
            });
        }
        Err(Error::invalid(
            "no input given; use --log, --rules, or --data with --schema",
        ))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn a network from transitions until convergence or the epoch cap.
    Train {
        #[command(flatten)]
        input: InputArgs,

        #[command(flatten)]
        mode: ModeArgs,

        /// Continue training this saved network instead of a fresh one.
        #[arg(long)]
        initial: Option<PathBuf>,

        #[arg(long, default_value_t = 10)]
        max_epochs: usize,

        /// Where to write the trained network (JSON).
        #[arg(long, short)]
        output: Option<PathBuf>,

        /// Print a JSON training report to stdout.
        #[arg(long)]
        report: bool,
    },
    /// Predict what happens next after an observed event.
    Reason {
        /// Saved network (JSON).
        #[arg(long, short)]
        network: PathBuf,

        /// Observed event, e.g. "+O2,+FeS2" or "bird,-airborne".
        #[arg(long, short)]
        event: String,

        #[command(flatten)]
        mode: ModeArgs,

        /// Feed inferences back in until a fixpoint.
        #[arg(long)]
        chain: bool,

        /// Iteration cap for --chain.
        #[arg(long, default_value_t = 32)]
        max_depth: usize,

        /// Explain the prediction for one thing instead of predicting.
        #[arg(long)]
        explain: Option<String>,

        /// Print a JSON report to stdout instead of plain labels.
        #[arg(long)]
        report: bool,
    },
    /// Measure one-step recall of a network against transitions.
    Eval {
        #[arg(long, short)]
        network: PathBuf,

        #[command(flatten)]
        input: InputArgs,

        #[arg(long)]
        report: bool,
    },
    /// Union two networks, optionally replay-training the result.
    Merge {
        /// The two saved networks to merge.
        #[arg(required = true, num_args = 2)]
        networks: Vec<PathBuf>,

        /// Event log to replay-train the merged network on.
        #[arg(long)]
        replay: Option<PathBuf>,

        #[arg(long, default_value_t = 10)]
        max_epochs: usize,

        #[command(flatten)]
        mode: ModeArgs,

        #[arg(long, short, required = true)]
        output: PathBuf,

        #[arg(long)]
        report: bool,
    },
    /// Render a saved network as Graphviz dot or canonical JSON.
    Export {
        #[arg(long, short)]
        network: PathBuf,

        #[arg(long, default_value = "dot", value_parser = ["dot", "json"])]
        format: String,

        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Read if-then rules back out of a saved network.
    Extract {
        #[arg(long, short)]
        network: PathBuf,

        /// Only links at least this strong become rules; fraction or
        /// decimal.
        #[arg(long, default_value = "1/2")]
        min_weight: String,
    },
}

/// Accepts `3/4`, `1`, and decimals like `0.75` (kept exact).
fn parse_ratio(text: &str) -> Result<Ratio<u64>, Error> {
    let bad = |t: &str| Error::invalid(format!("'{t}' is not a fraction or decimal"));
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad(text))?;
        let den: u64 = den.trim().parse().map_err(|_| bad(text))?;
        if den == 0 {
            return Err(Error::invalid("denominator must be non-zero"));
        }
        return Ok(Ratio::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad(text))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad(text));
        }
        let scale = 10u64.pow(frac.len() as u32);
        let frac: u64 = frac.parse().map_err(|_| bad(text))?;
        return Ok(Ratio::from_integer(whole) + Ratio::new(frac, scale));
    }
    let whole: u64 = text.parse().map_err(|_| bad(text))?;
    Ok(Ratio::from_integer(whole))
}

fn ratio_str(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn recall_value(recall: &RecallReport) -> Value {
    json!({
        "total": recall.total,
        "recalled": recall.recalled,
        "fraction": ratio_str(recall.fraction()),
        "failures": recall.failures.len(),
    })
}

fn write_or_print(output: Option<&PathBuf>, content: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn members_for(
    network: &Network,
    event: &Event,
    mode: Mode,
) -> Result<BTreeSet<String>, Error> {
    let rs = match mode {
        Mode::Deterministic => reasoning::reason_step_deterministic(network, event).0,
        Mode::Probabilistic { theta } => {
            reasoning::reason_step_probabilistic(network, event, theta)?.0
        }
    };
    Ok(rs.member_labels(network))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Train {
            input,
            mode,
            initial,
            max_epochs,
            output,
            report,
        } => {
            let mode = mode.mode()?;
            let loaded = input.load()?;
            let mut network = match initial {
                Some(path) => persist::load_network(&path)?,
                None => Network::new(),
            };
            let convergence =
                learning::train(&mut network, &loaded.transitions, max_epochs, mode)?;
            if let Some(path) = &output {
                persist::save_network(&network, path)?;
            }
            if report {
                let value = json!({
                    "transitions": loaded.transitions.len(),
                    "skipped_rows": loaded.skipped_rows,
                    "conflicting_rows": loaded.conflicting_rows,
                    "epochs": convergence.epochs,
                    "structural_changes_per_epoch": convergence.structural_changes_per_epoch,
                    "recall": ratio_str(convergence.recall),
                    "converged": convergence.converged,
                    "neurons": network.neuron_count(),
                    "excitatory_links": network.els().count(),
                    "inhibitory_links": network.ils().count(),
                });
                println!("{}", serde_json::to_string_pretty(&value).unwrap());
            } else {
                eprintln!(
                    "{} transitions, {} epochs, recall {}, converged: {}",
                    loaded.transitions.len(),
                    convergence.epochs,
                    convergence.recall,
                    convergence.converged
                );
            }
            Ok(if convergence.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Reason {
            network,
            event,
            mode,
            chain,
            max_depth,
            explain,
            report,
        } => {
            let mode = mode.mode()?;
            let network = persist::load_network(&network)?;
            let event = Event::parse(&event)?;
            if let Some(thing) = explain {
                let traces = reasoning::explain(&network, &event, &thing)?;
                let value: Vec<Value> = traces
                    .iter()
                    .map(|t| {
                        json!({
                            "link": network.el(t.el).signature(),
                            "active": t.active,
                            "weight": ratio_str(t.weight),
                            "active_inhibitors": t
                                .active_inhibitors
                                .iter()
                                .map(|i| json!({
                                    "link": network.il(i.il).signature(),
                                    "weight": ratio_str(i.weight),
                                }))
                                .collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&value).unwrap());
                return Ok(ExitCode::SUCCESS);
            }
            let members = if chain {
                if !matches!(mode, Mode::Deterministic) {
                    return Err(Error::invalid("--chain only supports --mode det"));
                }
                reasoning::reason_chain(&network, &event, max_depth)?
            } else {
                members_for(&network, &event, mode)?
            };
            if report {
                let value = json!({
                    "event": event.labels().cloned().collect::<Vec<_>>(),
                    "members": members.iter().collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&value).unwrap());
            } else {
                for label in &members {
                    println!("{label}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            network,
            input,
            report,
        } => {
            let network = persist::load_network(&network)?;
            let loaded = input.load()?;
            let recall = learning::exact_recall(&network, &loaded.transitions);
            if report {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&recall_value(&recall)).unwrap()
                );
            } else {
                eprintln!(
                    "recall {}/{} ({})",
                    recall.recalled,
                    recall.total,
                    recall.fraction()
                );
            }
            Ok(if recall.complete() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Merge {
            networks,
            replay,
            max_epochs,
            mode,
            output,
            report,
        } => {
            let mode = mode.mode()?;
            let a = persist::load_network(&networks[0])?;
            let b = persist::load_network(&networks[1])?;
            let transitions = match &replay {
                Some(path) => Some(persist::parse_event_log(&fs::read_to_string(path)?)?),
                None => None,
            };
            let (merged, convergence) =
                persist::merge_networks(&a, &b, transitions.as_deref(), max_epochs, mode)?;
            persist::save_network(&merged, &output)?;
            let converged = convergence.as_ref().map(|c| c.converged);
            if report {
                let value = json!({
                    "neurons": merged.neuron_count(),
                    "excitatory_links": merged.els().count(),
                    "inhibitory_links": merged.ils().count(),
                    "replayed": transitions.map(|t| t.len()),
                    "converged": converged,
                });
                println!("{}", serde_json::to_string_pretty(&value).unwrap());
            }
            Ok(if converged == Some(false) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Export {
            network,
            format,
            output,
        } => {
            let network = persist::load_network(&network)?;
            let content = match format.as_str() {
                "dot" => persist::export_dot(&network),
                "json" => persist::to_json(&network),
                _ => unreachable!("clap validates the value"),
            };
            write_or_print(output.as_ref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Extract {
            network,
            min_weight,
        } => {
            let network = persist::load_network(&network)?;
            let min_weight = parse_ratio(&min_weight)?;
            let extracted = rules::extract_rules(&network, min_weight)?;
            print!("{}", rules::render_rules(&extracted.to_library()));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
