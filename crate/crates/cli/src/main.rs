//! `ug`: grid search, question emission and subset reports over scene dumps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use ug_core::dataset::{load_scenes_with_vocab, Vocabulary};
use ug_core::harness::{emit_questions, emit_report, run_grid};
use ug_core::metrics::{apply_restrictions_with, evaluate_subsets};
use ug_core::{GridConfig, MethodSpec, ReportFormat, Scene64};

/// Exit code when `--require-pass` is set and nothing meets the restrictions.
const NO_SURVIVOR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ug",
    version,
    about = "Uncertainty detection and clarification questions for visual grounding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every consistent method of a grid and print the report table.
    Evaluate {
        /// Scene records, one JSON object per line.
        #[arg(long)]
        data: PathBuf,
        /// Grid config (TOML). The built-in grid is used when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Color/action vocabulary to validate attributes against.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Only print reports meeting the grid's restrictions.
        #[arg(long)]
        restrict: bool,
        /// Exit with status 2 if no report meets the restrictions.
        #[arg(long)]
        require_pass: bool,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one clarification record per uncertain scene.
    Questions {
        #[arg(long)]
        data: PathBuf,
        /// Method string such as `top16+Ens4+EV`.
        #[arg(long)]
        method: MethodSpec,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Report a method on every subset tag and on all scenes.
    Subsets {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: MethodSpec,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
}

fn load(data: &Path, vocab: Option<&Path>) -> Result<Vec<Scene64>> {
    let vocab = vocab
        .map(|p| Vocabulary::load(p).with_context(|| format!("reading vocabulary {}", p.display())))
        .transpose()?;
    let scenes = load_scenes_with_vocab(data, vocab.as_ref()).with_context(|| format!("loading {}", data.display()))?;
    info!("loaded {} scenes from {}", scenes.len(), data.display());
    Ok(scenes)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Caps the worker pool at `UG_THREADS` when set.
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("UG_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("UG_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        bail!("UG_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

/// Prefixes every row of a single-report table with the subset name.
fn subset_table(reports: &[(String, ug_core::EvalReport)], format: ReportFormat) -> String {
    let header_lines = match format {
        ReportFormat::Csv => 1,
        ReportFormat::Markdown => 2,
    };
    let empty = emit_report(&[], format);
    let mut out = String::new();
    for (i, line) in empty.lines().enumerate() {
        let prefixed = match (format, i) {
            (ReportFormat::Csv, _) => format!("Subset, {line}"),
            (ReportFormat::Markdown, 0) => format!("| Subset {line}"),
            (ReportFormat::Markdown, _) => format!("|---{line}"),
        };
        out.push_str(&prefixed);
        out.push('\n');
    }
    for (tag, report) in reports {
        let table = emit_report(std::slice::from_ref(report), format);
        for line in table.lines().skip(header_lines) {
            let prefixed = match format {
                ReportFormat::Csv => format!("{tag}, {line}"),
                ReportFormat::Markdown => format!("| {tag} {line}"),
            };
            out.push_str(&prefixed);
            out.push('\n');
        }
    }
    out
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Evaluate {
            data,
            grid,
            vocab,
            restrict,
            require_pass,
            format,
            out,
        } => {
            let config = match &grid {
                Some(path) => GridConfig::load(path).with_context(|| format!("reading grid {}", path.display()))?,
                None => GridConfig::default(),
            };
            let scenes = load(&data, vocab.as_deref())?;
            let reports = run_grid(&scenes, &config)?;
            let survivors = apply_restrictions_with(&reports, &config.restrictions);
            info!("{} reports, {} meet the restrictions", reports.len(), survivors.len());
            let shown = if restrict { &survivors } else { &reports };
            write_output(out.as_deref(), &emit_report(shown, format))?;
            if require_pass && survivors.is_empty() {
                eprintln!("no configuration meets the restrictions");
                return Ok(ExitCode::from(NO_SURVIVOR));
            }
        }
        Command::Questions {
            data,
            method,
            out,
            vocab,
        } => {
            let scenes = load(&data, vocab.as_deref())?;
            let count = emit_questions(&scenes, &method, &out)?;
            println!("{count} questions written to {}", out.display());
        }
        Command::Subsets {
            data,
            method,
            vocab,
            format,
        } => {
            let scenes = load(&data, vocab.as_deref())?;
            let by_tag: Vec<_> = evaluate_subsets(&scenes, &method)?.into_iter().collect();
            write_output(None, &subset_table(&by_tag, format))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
