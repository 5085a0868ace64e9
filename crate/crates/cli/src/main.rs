//! `svclint`: scan Python projects for ML cloud-service misuses.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use svclint_core::detectors::DEFAULT_MAX_LOOP_DEPTH;
use svclint_core::eval::{self, fit_linear, load_ground_truth, load_manifest, score, time_pipeline};
use svclint_core::kb::load_kb;
use svclint_core::pipeline::{detect, ScanOptions};
use svclint_core::report::{exit_code, EXIT_ERROR};
use svclint_core::{acquire, build_model, render, KnowledgeBase, MisuseId, OutputFormat, Report, Workspace};

#[derive(Parser)]
#[command(name = "svclint", version, about = "Detect ML cloud-service misuses in Python projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a local directory or a git repository URL.
    Scan(ScanArgs),
    /// Score detector output on a labeled corpus.
    Eval(EvalArgs),
    /// Time the full pipeline on every project of a corpus.
    Timing(TimingArgs),
    /// Generate a synthetic project of a given size.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Catalog file to use instead of the built-in one.
    #[arg(long, value_name = "PATH")]
    kb: Option<PathBuf>,
    /// Longest caller chain followed when looking for enclosing loops.
    #[arg(long, default_value_t = DEFAULT_MAX_LOOP_DEPTH, value_name = "N")]
    max_loop_depth: u32,
}

#[derive(Args)]
struct ScanArgs {
    /// Directory or git URL to analyze.
    #[arg(required_unless_present = "dump_kb")]
    source: Option<String>,
    #[arg(long, default_value = "table", value_parser = ["table", "structured", "interchange"])]
    format: String,
    /// Comma-separated misuse codes to check (default: all).
    #[arg(long, value_delimiter = ',', value_name = "CODES")]
    misuses: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print the catalog in effect and exit.
    #[arg(long)]
    dump_kb: bool,
    /// Print the project model as JSON instead of the report.
    #[arg(long)]
    dump_model: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    /// Directory for repository clones (default: a temporary directory).
    #[arg(long, value_name = "DIR")]
    scratch: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Corpus manifest (TOML).
    manifest: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Print metrics as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TimingArgs {
    manifest: PathBuf,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, value_name = "PATH")]
    kb: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    loc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan(args) => scan(args),
        Command::Eval(args) => evaluate(args),
        Command::Timing(args) => timing(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn load_catalog(path: Option<&Path>) -> Result<KnowledgeBase> {
    load_kb(path).context("loading catalog")
}

fn selection(codes: &[String]) -> Result<BTreeSet<MisuseId>> {
    if codes.is_empty() {
        return Ok(MisuseId::ALL.into_iter().collect());
    }
    codes
        .iter()
        .filter(|c| !c.trim().is_empty())
        .map(|c| c.parse::<MisuseId>().map_err(anyhow::Error::msg))
        .collect()
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn scan(args: ScanArgs) -> Result<i32> {
    if args.dump_kb {
        let text = match &args.common.kb {
            Some(path) => {
                load_catalog(Some(path))?;
                std::fs::read_to_string(path)?
            }
            None => KnowledgeBase::default_catalog_text().to_string(),
        };
        emit(&text, args.out.as_deref())?;
        return Ok(0);
    }
    let kb = load_catalog(args.common.kb.as_deref())?;
    let opts = ScanOptions {
        selection: selection(&args.misuses)?,
        max_loop_depth: args.common.max_loop_depth,
    };
    let format: OutputFormat = args.format.parse().map_err(anyhow::Error::msg)?;
    let source = args.source.expect("required by clap");

    let temp;
    let scratch = match &args.scratch {
        Some(dir) => dir.clone(),
        None => {
            temp = tempfile::tempdir().context("creating scratch directory")?;
            temp.path().to_path_buf()
        }
    };
    let ws = acquire(&source, &scratch)?;

    let started = Instant::now();
    let model = build_model(&ws, &kb)?;
    let build_time = started.elapsed().as_secs_f64();
    for d in &model.skipped {
        eprintln!("{}", serde_json::to_string(d)?);
    }
    if args.dump_model {
        let mut text = serde_json::to_string_pretty(&model)?;
        text.push('\n');
        emit(&text, args.out.as_deref())?;
        return Ok(0);
    }

    let mut report = detect(&model, &kb, &opts);
    report.record_model_build(build_time);
    let report = if args.timings { report } else { report.without_timings() };
    for d in report.diagnostics.iter().skip(model.skipped.len()) {
        eprintln!("{}", serde_json::to_string(d)?);
    }
    emit(&render(&report, format), args.out.as_deref())?;
    Ok(exit_code(&report))
}

fn evaluate(args: EvalArgs) -> Result<i32> {
    let kb = load_catalog(args.common.kb.as_deref())?;
    let corpus = load_manifest(&args.manifest)?;
    let gt = load_ground_truth(&args.manifest)?;
    let opts = ScanOptions {
        max_loop_depth: args.common.max_loop_depth,
        ..ScanOptions::default()
    };
    let mut reports: Vec<Report> = Vec::new();
    for p in &corpus.projects {
        let ws = Workspace::local(&p.path)?;
        let model = build_model(&ws, &kb).with_context(|| format!("project {}", p.id))?;
        let mut report = detect(&model, &kb, &opts);
        report.repo_name = p.id.clone();
        reports.push(report);
    }
    let metrics = score(&reports, &gt);
    if args.json {
        emit(&(serde_json::to_string_pretty(&metrics)? + "\n"), None)?;
        return Ok(0);
    }
    let mut text = format!(
        "{:<30} {:>4} {:>4} {:>4} {:>9} {:>7} {:>6}\n",
        "misuse", "tp", "fp", "fn", "precision", "recall", "f1"
    );
    let rows = metrics
        .per_misuse
        .iter()
        .map(|(m, t)| (m.code(), t))
        .chain(std::iter::once(("overall (micro)", &metrics.overall)));
    for (name, t) in rows {
        text.push_str(&format!(
            "{:<30} {:>4} {:>4} {:>4} {:>9.3} {:>7.3} {:>6.3}\n",
            name,
            t.tp,
            t.fp,
            t.fn_,
            t.precision(),
            t.recall(),
            t.f1()
        ));
    }
    emit(&text, None)?;
    Ok(0)
}

fn timing(args: TimingArgs) -> Result<i32> {
    if args.repetitions == 0 {
        bail!("--repetitions must be at least 1");
    }
    let kb = load_catalog(args.kb.as_deref())?;
    let corpus = load_manifest(&args.manifest)?;
    let run = time_pipeline(&corpus, &kb, args.repetitions);
    let points: Vec<(f64, f64)> = run
        .records
        .iter()
        .map(|r| (r.lines_of_code as f64, r.total_seconds))
        .collect();
    let doc = serde_json::json!({
        "records": run.records,
        "failures": run.failures,
        "fit_total_vs_loc": fit_linear(&points),
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), None)?;
    Ok(0)
}

fn synth(args: SynthArgs) -> Result<i32> {
    let n = eval::synth::generate_project(&args.dir, args.loc, args.seed)
        .with_context(|| format!("writing {}", args.dir.display()))?;
    eprintln!("wrote {n} lines to {}", args.dir.display());
    Ok(0)
}
