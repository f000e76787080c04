//! `t2d`: generate cohorts, run the comparison experiment, train and save a
//! single model, predict for one patient, and redraw figures.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 numerical error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use t2d_core::pipeline::config::PipelineConfig;
use t2d_core::pipeline::experiment::{load_table, reemit_figures, run_experiment, train_one};
use t2d_core::pipeline::generator::{cohort_schema, generate_cohort, GeneratorSettings};
use t2d_core::pipeline::persist::{load_model, save_model};
use t2d_core::pipeline::predict::{parse_assignments, predict_patient, read_single_row};
use t2d_core::tabular::save_csv;
use t2d_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "t2d",
    version,
    about = "Medication classification experiments on tabular cohorts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort CSV with a planted medication rule.
    Generate {
        #[arg(long, default_value_t = t2d_core::pipeline::generator::DEFAULT_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = t2d_core::pipeline::generator::DEFAULT_NOISE_RATE)]
        noise: f64,
        #[arg(long, default_value_t = t2d_core::pipeline::config::DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the column schema JSON here.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Run the full experiment and write report, figures and model files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model from the roster on the training split and save it.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Roster name, e.g. `knn`, `random_forest` or `ann`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the medication for one patient and print JSON.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with a header and one data row.
        #[arg(long, conflicts_with = "set", required_unless_present = "set")]
        row: Option<PathBuf>,
        /// `name=value` feature assignments.
        #[arg(long, num_args = 1..)]
        set: Vec<String>,
    },
    /// Redraw the figures of a finished run from its report files.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the default configuration with every key spelled out.
    Init {
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            rows,
            noise,
            seed,
            out,
            schema_out,
        } => {
            let table = generate_cohort(&GeneratorSettings {
                n_rows: rows,
                noise_rate: noise,
                seed,
            })?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            save_csv(&table, &out)?;
            if let Some(path) = schema_out {
                let text =
                    serde_json::to_string_pretty(&cohort_schema()).expect("schema serializes");
                write_file(&path, &(text + "\n"))?;
            }
            eprintln!("wrote {} rows to {}", table.n_rows(), out.display());
        }
        Command::Run { config, out } => {
            let config = PipelineConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| config.output_dir.clone());
            let report = run_experiment(&config, &dir)?;
            println!(
                "{:<16} {:>9} {:>9} {:>9}",
                "model", "test", "train", "cv_mean"
            );
            for m in &report.models {
                let cv = m
                    .cross_validation
                    .as_ref()
                    .map_or("-".to_string(), |c| format!("{:.4}", c.mean));
                println!(
                    "{:<16} {:>9.4} {:>9.4} {:>9}",
                    m.name, m.holdout.accuracy, m.train_accuracy, cv
                );
            }
            for w in &report.metadata.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("outputs in {}", dir.display());
        }
        Command::Train { config, model, out } => {
            let config = PipelineConfig::load(&config)?;
            let table = load_table(&config)?;
            let file = train_one(&config, &table, &model)?;
            save_model(&file, &out)?;
            eprintln!("saved {} to {}", file.name, out.display());
        }
        Command::Predict { model, row, set } => {
            let file = load_model(&model)?;
            let record = match row {
                Some(path) => read_single_row(path)?,
                None => parse_assignments(&set)?,
            };
            let prediction = predict_patient(&file, &record)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&prediction).expect("prediction serializes")
            );
        }
        Command::Report { dir } => {
            reemit_figures(&dir)?;
            eprintln!("figures rewritten in {}", dir.display());
        }
        Command::Config {
            action: ConfigAction::Init { out },
        } => {
            let text = PipelineConfig::default().to_json();
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
