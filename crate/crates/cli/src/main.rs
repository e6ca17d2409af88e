//! Command line front end: suite verification, convergence studies and
//! decomposition dumps with machine-readable reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or spec errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use freeprod_cli::groupspec::GroupSpecFile;
use freeprod_cli::report::{render_json, rows_to_csv, Report, RowRecord, SuiteResult};
use freeprod_cli::suites::{run_suite, Fault, SuiteConfig, SuiteName};
use freeprod_core::decomp::{build_translation_decomposition, verify_translation_decomposition};
use freeprod_core::recovery::{convergence_sweep, DefectMode, MATRIX_MODE_DIM_LIMIT};
use freeprod_core::spaces::{LengthBound, WindowBasis};
use freeprod_core::words::{FactorFamily, Word};

#[derive(Parser)]
#[command(name = "freeprod", version, about = "Finite-truncation checks for free products of groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and emit a JSON report.
    Verify(VerifyArgs),
    /// Tabulate recovery defects over a range of cutoffs.
    Convergence(ConvergenceArgs),
    /// Decompose one compressed translation into tagged terms.
    Decompose(DecomposeArgs),
}

#[derive(Args)]
struct GroupArg {
    /// Path to a JSON group spec; defaults to the built-in Z2*Z3 example.
    #[arg(long)]
    group: Option<PathBuf>,
}

impl GroupArg {
    fn load(&self) -> Result<(GroupSpecFile, FactorFamily), String> {
        let spec = match &self.group {
            Some(path) => GroupSpecFile::load(path)?,
            None => GroupSpecFile::default_z2z3(),
        };
        let family = spec.family().map_err(|e| format!("invalid group spec: {e}"))?;
        Ok((spec, family))
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Suite to run: isometry, coeff, defect, decomp, rank, jpattern or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Override the cutoff grid with a single n.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Treat skipped cells as failures.
    #[arg(long)]
    strict: bool,
    /// Size of the worker pool (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Entrywise comparison tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol_entry: f64,
    /// Operator norm tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol_norm: f64,
    /// Relative singular value cutoff for numerical ranks.
    #[arg(long, default_value_t = 1e-8)]
    rank_thresh: f64,
    /// Inject a deliberate fault to exercise the failure path.
    #[arg(long, value_enum)]
    inject_fault: Option<FaultArg>,
    /// Record per-suite wall time in the report (breaks byte-identical
    /// reports across runs, so off by default).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Coeff,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Matrix,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Standard,
    Narrow,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Word literal for the translation, e.g. "b" or "0:1 1:2".
    #[arg(long = "h")]
    word: String,
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    jobs: Option<usize>,
    /// Cap on the window dimension a matrix-mode row may build.
    #[arg(long, default_value_t = MATRIX_MODE_DIM_LIMIT)]
    matrix_dim_limit: usize,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Word literal for the translation.
    #[arg(long = "h")]
    word: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Left side-space length bound; "narrow" demonstrates the variant that
    /// cannot reproduce the compression.
    #[arg(long, value_enum, default_value = "standard")]
    length_bound: BoundArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Decompose(args) => cmd_decompose(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn install_pool(jobs: Option<usize>) -> Result<(), String> {
    if let Some(j) = jobs {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| format!("cannot configure {j} jobs: {e}"))?;
        #[cfg(not(feature = "parallel"))]
        let _ = j;
    }
    Ok(())
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_word(spec: &GroupSpecFile, family: &FactorFamily, literal: &str) -> Result<Word, String> {
    family.parse_word(literal, &spec.aliases).map_err(|e| e.to_string())
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    install_pool(args.jobs)?;
    let (spec, family) = args.group.load()?;
    let suites = SuiteName::parse_list(&args.suite)?;
    let mut config = SuiteConfig::new(family, args.seed);
    config.n_override = args.n;
    config.tol_entry = args.tol_entry;
    config.tol_norm = args.tol_norm;
    config.rank_threshold = args.rank_thresh;
    config.fault = args.inject_fault.map(|FaultArg::Coeff| Fault::CoeffOffset);

    let mut results: Vec<SuiteResult> = Vec::new();
    for name in &suites {
        let started = Instant::now();
        let mut result = run_suite(*name, &config);
        if args.timing {
            result.timing_ms = Some(started.elapsed().as_millis() as u64);
        }
        results.push(result);
    }
    let all_ok = results.iter().all(|r| r.ok(args.strict));
    for r in &results {
        let status = match r.status {
            freeprod_cli::report::SuiteStatus::Pass => "pass",
            freeprod_cli::report::SuiteStatus::Fail => "FAIL",
            freeprod_cli::report::SuiteStatus::Skip => "skip",
        };
        eprintln!("suite {:<9} {}", r.suite, status);
    }
    let report = Report {
        tool: "freeprod",
        version: env!("CARGO_PKG_VERSION"),
        config: json!({
            "command": "verify",
            "group": spec,
            "suite": args.suite,
            "n": args.n,
            "seed": args.seed,
            "strict": args.strict,
            "tolerances": {
                "entry": args.tol_entry,
                "norm": args.tol_norm,
                "rank": args.rank_thresh,
            },
            "fault": args.inject_fault.map(|FaultArg::Coeff| "coeff"),
        }),
        suites: results,
        rows: None,
    };
    write_output(&args.out, &render_json(&report))?;
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<ExitCode, String> {
    install_pool(args.jobs)?;
    let (spec, family) = args.group.load()?;
    let h = parse_word(&spec, &family, &args.word)?;
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(format!("need 2 <= n-min <= n-max, got {}..{}", args.n_min, args.n_max));
    }
    let mode = match args.mode {
        ModeArg::Matrix => DefectMode::Matrix,
        ModeArg::Analytic => DefectMode::Analytic,
    };
    let rows = convergence_sweep(&family, &h, args.n_min, args.n_max, mode, args.matrix_dim_limit)
        .map_err(|e| e.to_string())?;
    let records: Vec<RowRecord> = rows.iter().map(RowRecord::from).collect();
    let content = match args.format {
        FormatArg::Csv => rows_to_csv(&records),
        FormatArg::Json => render_json(&Report {
            tool: "freeprod",
            version: env!("CARGO_PKG_VERSION"),
            config: json!({
                "command": "convergence",
                "group": spec,
                "h": args.word,
                "nMin": args.n_min,
                "nMax": args.n_max,
                "mode": mode.as_str(),
            }),
            suites: Vec::new(),
            rows: Some(records.clone()),
        }),
    };
    write_output(&args.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_decompose(args: DecomposeArgs) -> Result<ExitCode, String> {
    let (spec, family) = args.group.load()?;
    let h = parse_word(&spec, &family, &args.word)?;
    if h.is_identity() {
        return Err("the decomposition needs a non-identity word".to_string());
    }
    let bound = match args.length_bound {
        BoundArg::Standard => LengthBound::Standard,
        BoundArg::Narrow => LengthBound::Narrow,
    };
    let basis = WindowBasis::build(&family, args.n);
    let decomposition =
        build_translation_decomposition(&basis, &h, bound).map_err(|e| e.to_string())?;
    let verify = verify_translation_decomposition(&family, &h, args.n, bound)
        .map_err(|e| e.to_string())?;
    let terms: Vec<serde_json::Value> = decomposition
        .terms
        .iter()
        .map(|t| {
            json!({
                "line": t.line.tag(),
                "r": t.r,
                "p": t.p,
                "iota": t.iota,
                "nnz": t.op.nnz(),
                "jMembership": t.j_membership,
            })
        })
        .collect();
    let payload = json!({
        "tool": "freeprod",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "command": "decompose",
            "group": spec,
            "h": args.word,
            "n": args.n,
            "lengthBound": match bound {
                LengthBound::Standard => "standard",
                LengthBound::Narrow => "narrow",
            },
        },
        "terms": terms,
        "maxError": freeprod_cli::report::sig12(verify.max_error),
        "termCount": verify.term_count,
        "skippedByBound": verify.skipped_by_bound,
    });
    write_output(&args.out, &render_json(&payload))?;
    Ok(ExitCode::SUCCESS)
}
