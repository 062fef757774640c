use std::collections::HashSet;
use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use modal_nli::dataset::generate::{GenerationFailure, HttpTransport};
use modal_nli::dataset::{
    self, build_inferred, generate_items, load_generated, load_inferred, load_snli, BuildOptions, GeneratedItem,
    GenerationConfig, PromptTemplate,
};
use modal_nli::meta::{self, parse_constraints, parse_pair, possible_labels};
use modal_nli::readings::Reading;
use modal_nli::scorer::{self, load_predictions, published_rows, render_report, ReportFormat};
use modal_nli::{parse, tableau, Formula};

const GRAMMAR: &str = "\
Formula grammar, loosest binding first:
  F ↔ G   (also <->)   right-associative
  F → G   (also ->)    right-associative
  F ∨ G   (also |)
  F ∧ G   (also &)
  ¬F  □F  ◇F   (also ~  []  <>)
  atoms: a lowercase letter followed by letters, digits or _; ⊤/1 and ⊥/0; parentheses.
Example: \"[](a -> b) & [](b -> c) -> [](a -> c)\"";

const SNLI_SCHEMA: &str = "\
SNLI file: JSON lines with sentence1, sentence2, gold_label, annotator_labels,
pairID and captionID. gold_label \"-\" marks an unlabelled item.";

const GENERATED_SCHEMA: &str = "\
Generated file: JSON lines {\"id\",\"premise\",\"hypothesis\",\"label\",\"source_item_id\",\"generator\"}.";

const INFERRED_SCHEMA: &str = "\
Inferred file: JSON lines {\"id\",\"pattern\",\"premise\",\"hypothesis\",
\"input_items\":[{\"id\",\"label\",\"role\"}],\"c_origin\"}. pattern is ba, bc, ac or ca;
role is ab, ac or bc; c_origin is h, g or none.";

const PREDICTIONS_SCHEMA: &str = "\
Predictions file: JSON lines {\"item_id\",\"label\"} or two tab-separated columns
item_id and label. Labels: entailment/contradiction/neutral or E/C/N.";

const EXIT_CODES: &str = "\
Exit codes: 0 success, 1 logical negative (invalid, not equivalent, unsatisfiable,
mismatch), 2 usage error, 3 I/O or endpoint failure.";

#[derive(Parser)]
#[command(name = "modal-nli", version, about = "NLI labels read as formulas of the modal logic K")]
#[command(after_long_help = help_text(&[GRAMMAR, EXIT_CODES]))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn help_text(parts: &[&str]) -> String {
    parts.join("\n\n")
}

#[derive(Subcommand)]
enum Command {
    /// Decide validity or satisfiability of a formula.
    #[command(after_long_help = help_text(&[GRAMMAR, EXIT_CODES]))]
    Prove {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value_t = Mode::Valid)]
        mode: Mode,
        /// Also print the satisfying model in sat mode.
        #[arg(long)]
        countermodel: bool,
    },
    /// Decide K-equivalence of two formulas.
    #[command(after_long_help = help_text(&[GRAMMAR, EXIT_CODES]))]
    Equiv {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Recompute the meta-inference catalog and compare with the published cells.
    #[command(after_long_help = EXIT_CODES)]
    Table2 {
        #[arg(long, value_enum, default_value_t = ReadingArg::All)]
        reading: ReadingArg,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Labels a target pair may carry given labelled pairs.
    #[command(after_long_help = "Constraints: L(x,y) separated by ';', L one of E, C, N.\n\
        Example: labels --reading ei --given \"C(a,b)\" --target \"b,a\" prints {C, N} (¬E).")]
    Labels {
        #[arg(long, value_enum)]
        reading: SingleReading,
        #[arg(long)]
        given: String,
        #[arg(long)]
        target: String,
    },
    /// Build the inferred test set from SNLI and generated items.
    #[command(name = "build-inferred", after_long_help = help_text(&[SNLI_SCHEMA, GENERATED_SCHEMA, INFERRED_SCHEMA, EXIT_CODES]))]
    BuildInferred {
        #[arg(long)]
        snli: PathBuf,
        #[arg(long)]
        generated: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Drop items repeating an earlier item's pattern, premise and hypothesis.
        #[arg(long)]
        dedup: bool,
        /// Write generated items that joined nothing here (JSON lines).
        #[arg(long)]
        skips: Option<PathBuf>,
    },
    /// Generate hypotheses for SNLI hypotheses through a chat endpoint.
    ///
    /// Items already present in --out are skipped, so an interrupted run can
    /// be resumed. Only labelled items are used.
    #[command(after_long_help = help_text(&[SNLI_SCHEMA, GENERATED_SCHEMA, EXIT_CODES]))]
    Generate {
        #[arg(long)]
        snli: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Request timeout in seconds.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        /// Retries after a network error, 429 or 5xx.
        #[arg(long, default_value_t = 3)]
        retries: u32,
        /// First retry delay in milliseconds, doubled per retry.
        #[arg(long, default_value_t = 500)]
        backoff_ms: u64,
        /// Environment variable holding the API key, sent as a bearer token.
        #[arg(long, default_value = "GENERATION_API_KEY")]
        api_key_env: String,
        /// Prompt template JSON; defaults to the shipped few-shot prompt.
        #[arg(long)]
        prompt: Option<PathBuf>,
        /// Failure records; defaults to <out>.failures.jsonl.
        #[arg(long)]
        failures: Option<PathBuf>,
        /// Process at most this many SNLI items.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Consistency report for predictions on inferred items.
    #[command(after_long_help = help_text(&[INFERRED_SCHEMA, PREDICTIONS_SCHEMA, EXIT_CODES]))]
    Score {
        #[arg(long)]
        inferred: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Predictions on the input items, for --filtered.
        #[arg(long)]
        antecedent_predictions: Option<PathBuf>,
        /// Keep only items whose input items were all predicted correctly.
        #[arg(long, requires = "antecedent_predictions")]
        filtered: bool,
        /// Keep only the fifteen published rows.
        #[arg(long)]
        paper_rows: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sat,
    Valid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SingleReading {
    Mc,
    Sc,
    Ei,
}

impl From<SingleReading> for Reading {
    fn from(r: SingleReading) -> Reading {
        match r {
            SingleReading::Mc => Reading::Mc,
            SingleReading::Sc => Reading::Sc,
            SingleReading::Ei => Reading::Ei,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingArg {
    Mc,
    Sc,
    Ei,
    All,
}

enum Failure {
    Negative,
    Usage(String),
    Operational(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn operational(e: impl Display) -> Failure {
    Failure::Operational(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Operational(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn formula(text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| usage(format!("{e} in {text:?}")))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| operational(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(operational),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Prove {
            formula: text,
            mode,
            countermodel,
        } => {
            let f = formula(&text)?;
            match mode {
                Mode::Valid => {
                    let verdict = tableau::is_valid(&f).map_err(operational)?;
                    if verdict.holds {
                        println!("valid");
                        return Ok(());
                    }
                    println!("not valid");
                    if let Some(m) = verdict.countermodel {
                        println!("{}", m.to_json());
                    }
                    Err(Failure::Negative)
                }
                Mode::Sat => {
                    let result = tableau::is_satisfiable(&f).map_err(operational)?;
                    match result.model() {
                        Some(m) => {
                            println!("satisfiable");
                            if countermodel {
                                println!("{}", m.to_json());
                            }
                            Ok(())
                        }
                        None => {
                            println!("unsatisfiable");
                            Err(Failure::Negative)
                        }
                    }
                }
            }
        }
        Command::Equiv { left, right } => {
            let verdict = tableau::are_equivalent(&formula(&left)?, &formula(&right)?).map_err(operational)?;
            if verdict.holds {
                println!("equivalent");
                return Ok(());
            }
            println!("not equivalent");
            if let Some(m) = verdict.countermodel {
                println!("{}", m.to_json());
            }
            Err(Failure::Negative)
        }
        Command::Table2 { reading, format } => {
            let readings: Vec<Reading> = match reading {
                ReadingArg::Mc => vec![Reading::Mc],
                ReadingArg::Sc => vec![Reading::Sc],
                ReadingArg::Ei => vec![Reading::Ei],
                ReadingArg::All => Reading::ALL.to_vec(),
            };
            let report = meta::reproduce_table2_for(&readings).map_err(operational)?;
            emit(
                &match format {
                    Format::Md => report.to_markdown(),
                    Format::Csv => report.to_csv(),
                },
                None,
            )?;
            let mismatches = report.mismatches();
            eprintln!("{}/{} cells match", report.matched(), report.cells.len());
            for cell in &mismatches {
                eprintln!(
                    "mismatch: {} [{}] published {} computed {}",
                    cell.statement,
                    cell.reading,
                    cell.expected.symbol(),
                    cell.computed.symbol()
                );
            }
            if mismatches.is_empty() {
                Ok(())
            } else {
                Err(Failure::Negative)
            }
        }
        Command::Labels { reading, given, target } => {
            let constraints = parse_constraints(&given).map_err(usage)?;
            let (p, h) = parse_pair(&target).map_err(usage)?;
            let result = possible_labels(reading.into(), &constraints, (&p, &h)).map_err(operational)?;
            println!("{} ({})", result.labels, result.labels.constraint_name(None));
            if result.vacuous {
                eprintln!("note: the given constraints are jointly unsatisfiable");
            }
            Ok(())
        }
        Command::BuildInferred {
            snli,
            generated,
            out,
            dedup,
            skips,
        } => {
            let snli = load_snli(&snli).map_err(|e| operational(format!("{}: {e}", snli.display())))?;
            let generated = match generated {
                Some(path) => load_generated(&path).map_err(|e| operational(format!("{}: {e}", path.display())))?,
                None => Vec::new(),
            };
            let built = build_inferred(&snli, &generated, BuildOptions { dedup });
            dataset::save_jsonl(&out, &built.items).map_err(|e| operational(format!("{}: {e}", out.display())))?;
            if let Some(path) = skips {
                dataset::save_jsonl(&path, &built.skipped)
                    .map_err(|e| operational(format!("{}: {e}", path.display())))?;
            }
            eprintln!(
                "wrote {} inferred items; {} generated items joined nothing",
                built.items.len(),
                built.skipped.len()
            );
            Ok(())
        }
        Command::Generate {
            snli,
            endpoint,
            model,
            out,
            concurrency,
            timeout,
            retries,
            backoff_ms,
            api_key_env,
            prompt,
            failures,
            limit,
        } => {
            let template = match prompt {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| operational(format!("{}: {e}", path.display())))?;
                    PromptTemplate::from_json(&text).map_err(usage)?
                }
                None => PromptTemplate::builtin(),
            };
            let mut items = load_snli(&snli).map_err(|e| operational(format!("{}: {e}", snli.display())))?;
            items.retain(|i| i.gold_label.is_some());
            if let Some(n) = limit {
                items.truncate(n);
            }
            let mut existing: Vec<GeneratedItem> = if out.exists() {
                load_generated(&out).map_err(|e| operational(format!("{}: {e}", out.display())))?
            } else {
                Vec::new()
            };
            let completed: HashSet<String> = existing.iter().map(|g| g.source_item_id.clone()).collect();
            let config = GenerationConfig {
                http_retries: retries,
                backoff: Duration::from_millis(backoff_ms),
                concurrency,
                ..GenerationConfig::new(model)
            };
            let transport = HttpTransport::new(endpoint, std::env::var(&api_key_env).ok(), Duration::from_secs(timeout));
            let outcome = generate_items(&items, &transport, &template, &config, &completed);
            existing.extend(outcome.items.iter().cloned());
            dataset::save_jsonl(&out, &existing).map_err(|e| operational(format!("{}: {e}", out.display())))?;
            let failures_path = failures.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".failures.jsonl");
                p.into()
            });
            let failed: &[GenerationFailure] = &outcome.failures;
            if !failed.is_empty() {
                dataset::save_jsonl(&failures_path, failed)
                    .map_err(|e| operational(format!("{}: {e}", failures_path.display())))?;
            }
            eprintln!(
                "generated {} items; {} source items skipped as done; {} failed",
                outcome.items.len(),
                outcome.skipped,
                failed.len()
            );
            if failed.is_empty() {
                Ok(())
            } else {
                Err(operational(format!(
                    "{} items failed, see {}",
                    failed.len(),
                    failures_path.display()
                )))
            }
        }
        Command::Score {
            inferred,
            predictions,
            antecedent_predictions,
            filtered,
            paper_rows: only_published,
            format,
            out,
        } => {
            let items = load_inferred(&inferred).map_err(|e| operational(format!("{}: {e}", inferred.display())))?;
            let preds =
                load_predictions(&predictions).map_err(|e| operational(format!("{}: {e}", predictions.display())))?;
            let antecedent = match (filtered, antecedent_predictions) {
                (true, Some(path)) => {
                    Some(load_predictions(&path).map_err(|e| operational(format!("{}: {e}", path.display())))?)
                }
                _ => None,
            };
            let mut reports = scorer::score(&items, &preds, antecedent.as_ref()).map_err(operational)?;
            if only_published {
                reports = published_rows(reports);
            }
            let format = match format {
                Format::Md => ReportFormat::Markdown,
                Format::Csv => ReportFormat::Csv,
            };
            emit(&render_report(&reports, format), out.as_deref())
        }
    }
}
