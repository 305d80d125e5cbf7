//! `rdc`: run one experiment from a JSON config and export its data.
//!
//! Exit status: 0 on success, 1 on I/O failure, 2 on a validation error
//! (nothing written), 3 on a numerical failure (diagnostics JSON written).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod export;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use config::{Experiment, RunConfig};
use experiments::{Output, RunError};
use export::{artifact_path, short_hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "rdc", version, about = "Steady states, waves and boundary controls for bistable reaction-diffusion")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RDC_LOG", "warn")).init();
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let stem = format!("{}-{}", cli.experiment, config_hash(cli.experiment, &config));
    log::info!("running {stem}");
    let outcome = experiments::run(cli.experiment, &config);
    let status = match &outcome {
        Ok(_) => 0,
        Err(RunError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(RunError::Numerical(_)) => 3,
    };
    let written = match outcome {
        Ok(output) => write_outputs(&cli, &config, &stem, &output),
        Err(e) => write_diagnostics(&cli, &config, &stem, &e),
    };
    match written {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::from(status)
        }
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", cli.out.display());
            ExitCode::from(1)
        }
    }
}

fn config_hash(experiment: Experiment, config: &RunConfig) -> String {
    let canonical = json!({ "experiment": experiment, "config": config }).to_string();
    short_hash(&canonical)
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> std::io::Result<()> {
    std::fs::write(path, text)?;
    files.push(path.to_path_buf());
    Ok(())
}

fn write_outputs(cli: &Cli, config: &RunConfig, stem: &str, output: &Output) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cli.out)?;
    let mut files = Vec::new();
    match cli.format {
        Format::Csv => {
            for (suffix, table) in &output.tables {
                write(&artifact_path(&cli.out, stem, suffix, "csv"), &table.to_csv(), &mut files)?;
            }
        }
        Format::Svg => {
            for (suffix, plot) in &output.plots {
                write(&artifact_path(&cli.out, stem, suffix, "svg"), &plot.to_svg(), &mut files)?;
            }
        }
    }
    let names: Vec<String> = files
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let summary = json!({
        "experiment": cli.experiment,
        "status": "ok",
        "config": config,
        "results": output.results,
        "files": names,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n";
    write(&artifact_path(&cli.out, stem, "", "json"), &text, &mut files)?;
    Ok(files)
}

fn write_diagnostics(cli: &Cli, config: &RunConfig, stem: &str, error: &RunError) -> std::io::Result<Vec<PathBuf>> {
    eprintln!("error: {error}");
    std::fs::create_dir_all(&cli.out)?;
    let detail = match error {
        RunError::Numerical(e) => format!("{e:?}"),
        RunError::Invalid(msg) => msg.clone(),
    };
    let diagnostics = json!({
        "experiment": cli.experiment,
        "status": "numerical_failure",
        "config": config,
        "error": error.to_string(),
        "detail": detail,
    });
    let mut files = Vec::new();
    let text = serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialise") + "\n";
    write(&artifact_path(&cli.out, stem, "-error", "json"), &text, &mut files)?;
    Ok(files)
}
