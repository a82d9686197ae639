//! `dualinspect` CLI: estimate defect/detection rates from count files, run
//! seeded simulation studies, reproduce the reference tables, and export the
//! ML-vs-moment efficiency curve.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 estimation
//! pathology (the data admits no estimate: zero means, non-positive
//! covariance, or a boundary likelihood maximum).

mod csv_input;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dualinspect::{
    cr_confidence_intervals, estimate_cr, estimate_moment, fisher_information,
    mle_confidence_intervals, moment_confidence_intervals, reproduce_tables, run_study, solve_mle,
    std_ratio_curve, EstimateReport, MethodSet, ModelParams, RngSeed, SolverOptions, StudyConfig,
    TableId,
};

const FISHER_TAIL_EPS: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "dualinspect", version, about = "Defect and detection rate estimation from dual inspection counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Moment,
    Mle,
    Cr,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableArg {
    T1,
    T2,
    T3,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate (lambda, p1, p2) from a CSV file of per-item counts.
    ///
    /// moment/mle read columns `r1,r2`; cr reads `x1,x2,y`.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Moment)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo study at known parameters.
    Simulate {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of moment,mle,cr.
        #[arg(long, default_value = "moment,mle,cr")]
        methods: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Reproduce one of the reference tables (simulated and closed-form
    /// columns side by side) at (lambda=10, p1=0.4, p2=0.7).
    Tables {
        #[arg(value_enum)]
        which: TableArg,
        /// Override the default replicate count (t1: 100000, t2/t3: 5000).
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Export the asymptotic Std(lambda_ML)/Std(lambda_moment) curve as CSV
    /// (columns p1,p2,lambda,ratio).
    Ratio {
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        /// Comma-separated p1 values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.5, 0.8])]
        p1: Vec<f64>,
        /// Comma-separated p2 values; default grid is 0.05..=0.95 step 0.05.
        #[arg(long, value_delimiter = ',')]
        p2: Option<Vec<f64>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 1 }
    }
}

impl From<dualinspect::Error> for CliError {
    fn from(err: dualinspect::Error) -> Self {
        let code = match err.kind() {
            "undefined_estimator" | "covariance_nonpositive" | "no_interior_maximum"
            | "flagged_estimate" => 2,
            _ => 1,
        };
        let message = if code == 2 {
            format!("estimation pathology: {err}")
        } else {
            err.to_string()
        };
        Self { message, code }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::input(err.to_string())
    }
}

fn emit(text: String, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            file.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                file.write_all(b"\n")?;
            }
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))
}

fn init_thread_pool(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::input(format!("--alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

fn cmd_estimate(
    input: &PathBuf,
    method: MethodArg,
    alpha: f64,
    format: Format,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    validate_alpha(alpha)?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let report: EstimateReport = match method {
        MethodArg::Moment => {
            let sample = csv_input::parse_pairs(&text).map_err(CliError::input)?;
            let est = estimate_moment(&sample)?;
            moment_confidence_intervals(&est, alpha)?
        }
        MethodArg::Mle => {
            let sample = csv_input::parse_pairs(&text).map_err(CliError::input)?;
            let est = solve_mle(&sample, SolverOptions::default())?;
            let params = ModelParams::new(est.lambda_star, est.p1_star, est.p2_star)?;
            let fisher = fisher_information(params, FISHER_TAIL_EPS)?;
            mle_confidence_intervals(&est, &fisher, sample.len(), alpha)?
        }
        MethodArg::Cr => {
            let sample = csv_input::parse_triples(&text).map_err(CliError::input)?;
            let est = estimate_cr(&sample)?;
            cr_confidence_intervals(&est, alpha)?
        }
    };
    let rendered = match format {
        Format::Json => to_json(&report)?,
        Format::Table => render::estimate_table(&report),
        Format::Csv => return Err(CliError::input("estimate does not support --format csv")),
    };
    emit(rendered, output)
}

fn parse_methods(list: &str) -> Result<MethodSet, CliError> {
    let mut set = MethodSet::default();
    for token in list.split(',') {
        match token.trim() {
            "moment" => set.moment = true,
            "mle" => set.mle = true,
            "cr" | "capture_recapture" => set.capture_recapture = true,
            other => {
                return Err(CliError::input(format!(
                    "unknown method '{other}' (expected moment, mle, cr)"
                )))
            }
        }
    }
    Ok(set)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    lambda: f64,
    p1: f64,
    p2: f64,
    m: usize,
    reps: usize,
    seed: u64,
    methods: &str,
    format: Format,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    let config = StudyConfig {
        params: ModelParams::new(lambda, p1, p2)?,
        m,
        replicates: reps,
        seed: RngSeed(seed),
        methods: parse_methods(methods)?,
    };
    let report = run_study(&config)?;
    let rendered = match format {
        Format::Json => to_json(&report)?,
        Format::Table => render::study_table(&report),
        Format::Csv => return Err(CliError::input("simulate does not support --format csv")),
    };
    emit(rendered, output)
}

fn cmd_tables(
    which: TableArg,
    reps: Option<usize>,
    seed: u64,
    format: Format,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    let id = match which {
        TableArg::T1 => TableId::T1,
        TableArg::T2 => TableId::T2,
        TableArg::T3 => TableId::T3,
    };
    let table = reproduce_tables(id, reps, RngSeed(seed))?;
    let rendered = match format {
        Format::Json => to_json(&table)?,
        Format::Table => format!("{table}"),
        Format::Csv => return Err(CliError::input("tables does not support --format csv")),
    };
    emit(rendered, output)
}

fn cmd_ratio(
    lambda: f64,
    p1_values: &[f64],
    p2_values: Option<Vec<f64>>,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    let p2_grid = p2_values.unwrap_or_else(|| (1..=19).map(|i| i as f64 * 0.05).collect());
    let mut csv = String::from("p1,p2,lambda,ratio\n");
    for &p1 in p1_values {
        let curve = std_ratio_curve(lambda, p1, &p2_grid, FISHER_TAIL_EPS)?;
        for (p2, ratio) in curve {
            csv.push_str(&format!("{p1},{p2},{lambda},{ratio:.6}\n"));
        }
    }
    csv.pop();
    emit(csv, output)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate { input, method, alpha, format, output } => {
            cmd_estimate(&input, method, alpha, format, output.as_ref())
        }
        Command::Simulate { lambda, p1, p2, m, reps, seed, methods, format, output, threads } => {
            init_thread_pool(threads)?;
            cmd_simulate(lambda, p1, p2, m, reps, seed, &methods, format, output.as_ref())
        }
        Command::Tables { which, reps, seed, format, output, threads } => {
            init_thread_pool(threads)?;
            cmd_tables(which, reps, seed, format, output.as_ref())
        }
        Command::Ratio { lambda, p1, p2, output } => {
            cmd_ratio(lambda, &p1, p2, output.as_ref())
        }
    }
}

fn main() -> ExitCode {
    // clap's default usage-error exit code is 2, which this tool reserves
    // for estimation pathologies; remap argument errors to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.exit_code() == 0 { 0 } else { 1 };
            let _ = err.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
