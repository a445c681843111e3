//! `symdyn` — batch front end for the analysis pipeline.
//!
//! One job per invocation: read a config, run the requested analysis, emit
//! a JSON report (and optional CSV series). Exit codes: 0 on success, 2
//! for config problems, 3 when the analysis itself recorded errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use symdyn::analysis::{csv_series, report_to_json, run_analysis, AnalysisConfig, SCHEMA_VERSION};
use symdyn::graph::TransitionGraph;
use symdyn::matrix::{is_irreducible, is_primitive, spectral_radius, TransitionMatrix};
use symdyn::subshift::count_words;

#[derive(Parser)]
#[command(
    name = "symdyn",
    version,
    about = "Coupled-expansion analysis of one-dimensional piecewise-monotone maps"
)]
struct Cli {
    /// Reserved for randomized property suites; the analysis pipeline is
    /// deterministic and does not consume it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: verify the coupling, bound the entropy, judge chaos.
    Analyze(JobArgs),
    /// Cylinder-count entropy estimates only.
    Entropy(JobArgs),
    /// Spectral and connectivity analysis of a bare 0/1 matrix file.
    Matrix(MatrixArgs),
    /// Built-in Kasner map demonstration (no config needed).
    Kasner(KasnerArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Path to the JSON analysis config.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout (overrides the config's
    /// output_path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV series to write next to the report (overrides the config's
    /// emit_csv).
    #[arg(long = "emit-csv", num_args = 1..)]
    emit_csv: Vec<String>,
    /// Override options.depth.
    #[arg(long)]
    depth: Option<u32>,
    /// Override options.tol.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Path to a JSON file holding the 0/1 rows, e.g. [[1,1],[1,0]].
    #[arg(long)]
    config: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectral tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct KasnerArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV series to write next to the report.
    #[arg(long = "emit-csv", num_args = 1..)]
    emit_csv: Vec<String>,
    /// Depth for singleton evidence and preimage sampling.
    #[arg(long, default_value_t = 10)]
    depth: u32,
    /// Deepest cylinder-count level.
    #[arg(long, default_value_t = 12)]
    n_max: u32,
    /// Geometric and spectral tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("symdyn: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(args) => analyze(args, false),
        Command::Entropy(args) => analyze(args, true),
        Command::Matrix(args) => matrix(args),
        Command::Kasner(args) => kasner(args),
    }
}

fn load_config(args: &JobArgs) -> Result<AnalysisConfig> {
    let raw = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut config: AnalysisConfig = serde_json::from_str(&raw)
        .with_context(|| format!("cannot parse config {}", args.config.display()))?;
    if let Some(out) = &args.out {
        config.options.output_path = Some(out.display().to_string());
    }
    if !args.emit_csv.is_empty() {
        config.options.emit_csv = args.emit_csv.clone();
    }
    if let Some(depth) = args.depth {
        config.options.depth = depth;
    }
    if let Some(tol) = args.tol {
        config.options.tol = tol;
    }
    config.validate().map_err(anyhow::Error::from)?;
    Ok(config)
}

/// Shared driver for `analyze` and `entropy`: the latter strips the report
/// down to the estimate tables.
fn analyze(args: JobArgs, entropy_only: bool) -> Result<ExitCode> {
    let mut config = load_config(&args)?;
    if entropy_only {
        // the full report writer does not run; emit files ourselves below
        config.options.output_path = None;
    }
    let report = run_analysis(&config);
    let failed = !report.errors.is_empty();

    if entropy_only {
        let entropy = report.entropy.as_ref();
        let payload = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "estimates": entropy.map(|e| &e.estimates),
            "cylinder_counts": entropy.map(|e| &e.cylinder_counts),
            "errors": report.errors,
        });
        let text = format!("{}\n", serde_json::to_string_pretty(&payload)?);
        match &args.out {
            Some(path) => {
                std::fs::write(path, &text)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                let base = path.display().to_string();
                let base = base.strip_suffix(".json").unwrap_or(&base).to_string();
                for name in &args.emit_csv {
                    if let Some(content) = csv_series(&report, name) {
                        std::fs::write(format!("{base}.{name}.csv"), content)?;
                    }
                }
            }
            None => print!("{text}"),
        }
    } else if config.options.output_path.is_none() {
        print!("{}", report_to_json(&report));
    }

    if failed {
        for e in &report.errors {
            eprintln!("symdyn: {} failed: {}", e.stage, e.message);
        }
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn matrix(args: MatrixArgs) -> Result<ExitCode> {
    let raw = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read matrix {}", args.config.display()))?;
    let rows: Vec<Vec<u8>> = serde_json::from_str(&raw)
        .with_context(|| format!("cannot parse matrix rows from {}", args.config.display()))?;
    let a = TransitionMatrix::new(&rows).map_err(anyhow::Error::from)?;

    // the spectral computation is the only fallible analysis step here
    let (payload, failed) = match spectral_radius(&a, args.tol) {
        Ok(s) => {
            let graph = TransitionGraph::new(&a);
            let counts: Vec<(u32, String)> =
                (1..=12u32).map(|n| (n, count_words(&a, n).to_string())).collect();
            (
                serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "matrix": a.rows(),
                    "spectral": {
                        "lambda": s.lambda,
                        "log_lambda": s.lambda.ln(),
                        "iterations": s.iterations,
                        "residual": s.residual,
                    },
                    "matrix_flags": {
                        "irreducible": is_irreducible(&a),
                        "primitive": is_primitive(&a).0,
                        "max_row_sum": a.max_row_sum(),
                    },
                    "strongly_connected_components": graph.strongly_connected_components(),
                    "word_counts": counts,
                    "errors": [],
                }),
                false,
            )
        }
        Err(e) => (
            serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "matrix": a.rows(),
                "errors": [{"stage": "spectral", "message": e.to_string()}],
            }),
            true,
        ),
    };
    let text = format!("{}\n", serde_json::to_string_pretty(&payload)?);
    match &args.out {
        Some(path) => std::fs::write(path, &text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn kasner(args: KasnerArgs) -> Result<ExitCode> {
    let config_json = serde_json::json!({
        "map": { "builtin": "kasner" },
        "options": {
            "depth": args.depth,
            "n_max": args.n_max,
            "tol": args.tol,
            "emit_csv": args.emit_csv,
            "output_path": args.out.as_ref().map(|p| p.display().to_string()),
        }
    });
    let config: AnalysisConfig = serde_json::from_value(config_json)?;
    config.validate().map_err(anyhow::Error::from)?;
    let report = run_analysis(&config);
    if config.options.output_path.is_none() {
        print!("{}", report_to_json(&report));
    }
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("symdyn: {} failed: {}", e.stage, e.message);
        }
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
