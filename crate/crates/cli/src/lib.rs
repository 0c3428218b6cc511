//! Command-line front end: argument parsing and command execution.
//!
//! Exit codes: 0 when every check passes (singular skips allowed), 1 when a
//! check fails, 2 on usage errors, 3 on I/O errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ehs_core::catalog::{catalog_list, evaluate_sides_with, validate_dims, Dims, IdentityId};
use ehs_core::harness::{
    fuzz_campaign, sample_instance, verify_instance, CampaignSummary, SamplerConfig, Status, VerificationReport,
    CSV_HEADER,
};
use ehs_core::{Error, Evaluator, PochPath};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ehs",
    version,
    about = "Verify elliptic hypergeometric series identities numerically"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the identities with their parameter signatures.
    List(ListArgs),
    /// Sample one instance and compare both sides.
    Verify(VerifyArgs),
    /// Run seeded trials over a grid of dimensions and nome values.
    Fuzz(FuzzArgs),
    /// Time the evaluation of one instance on both Pochhammer paths.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub output: Format,
    /// Write to this file instead of stdout.
    #[arg(long = "out", value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Leave `elapsed_ms` empty so reports depend only on their inputs.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Range of |q| as `lo,hi` or a single value.
    #[arg(long = "q-mod", value_parser = parse_range, default_value = "0.5,0.9")]
    pub q_mod: (f64, f64),
    /// Range of |x| for the free parameters, as `lo,hi`.
    #[arg(long = "modulus-range", value_parser = parse_range, default_value = "0.5,2")]
    pub modulus_range: (f64, f64),
    /// Relative floor of the singularity guard.
    #[arg(long = "singularity-floor", default_value_t = 1e-6)]
    pub singularity_floor: f64,
    #[arg(long = "max-resamples", default_value_t = 200)]
    pub max_resamples: usize,
    /// Working precision in bits.
    #[arg(long, env = "EHS_PRECISION_BITS", default_value_t = 256,
          value_parser = clap::value_parser!(u32).range(64..))]
    pub precision: u32,
}

impl SamplingArgs {
    fn config(&self, p: f64) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            modulus_range: self.modulus_range,
            p_modulus: p,
            q_modulus_range: self.q_mod,
            max_resamples: self.max_resamples,
            singularity_floor: self.singularity_floor,
        }
    }
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Series length; defaults to 2 (0 for c3_transform, where it selects b = q^-N).
    #[arg(long = "N", value_name = "N")]
    pub total: Option<usize>,
    /// Box dimensions as a comma-separated list, e.g. `1,2`.
    #[arg(long, value_parser = parse_mvec)]
    pub mvec: Option<MVec>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_parser = parse_identity)]
    pub identity: IdentityId,
    #[command(flatten)]
    pub dims: DimArgs,
    /// Elliptic nome p (real).
    #[arg(long = "p-mod", default_value_t = 0.2)]
    pub p_mod: f64,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Relative perturbation applied to the bound parameter after resolution.
    #[arg(long, hide = true)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(value_parser = parse_identity)]
    pub identity: IdentityId,
    /// Values of n, comma-separated.
    #[arg(long, value_parser = parse_usize_list, default_value = "1")]
    pub n: UsizeList,
    /// Values of m, comma-separated.
    #[arg(long, value_parser = parse_usize_list, default_value = "1")]
    pub m: UsizeList,
    /// Values of N, comma-separated; defaults to 2 (0 for c3_transform).
    #[arg(long = "N", value_name = "N", value_parser = parse_usize_list)]
    pub total: Option<UsizeList>,
    /// One box per occurrence, e.g. `--mvec 1,2 --mvec 0,3`.
    #[arg(long, value_parser = parse_mvec)]
    pub mvec: Vec<MVec>,
    /// Nome values to sweep, comma-separated.
    #[arg(long = "p-mod", value_parser = parse_f64_list, default_value = "0,0.05,0.2,0.5")]
    pub p_mod: F64List,
    /// Trials per grid cell and nome value.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_parser = parse_identity)]
    pub identity: IdentityId,
    #[command(flatten)]
    pub dims: DimArgs,
    #[arg(long = "p-mod", default_value_t = 0.2)]
    pub p_mod: f64,
    /// Timed evaluations per path.
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MVec(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsizeList(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct F64List(pub Vec<f64>);

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    let items: Result<Vec<T>, _> = s.split(',').map(|t| t.trim().parse::<T>()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("expected a comma-separated list of {what}, got {s:?}")),
    }
}

pub fn parse_identity(s: &str) -> Result<IdentityId, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = IdentityId::ALL.iter().map(|id| id.name()).collect();
        format!("unknown identity {s:?}; expected one of: {}", names.join(", "))
    })
}

pub fn parse_mvec(s: &str) -> Result<MVec, String> {
    parse_list(s, "non-negative integers").map(MVec)
}

pub fn parse_usize_list(s: &str) -> Result<UsizeList, String> {
    parse_list(s, "non-negative integers").map(UsizeList)
}

pub fn parse_f64_list(s: &str) -> Result<F64List, String> {
    parse_list(s, "numbers").map(F64List)
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    match parse_list::<f64>(s, "numbers")?.as_slice() {
        [v] => Ok((*v, *v)),
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(format!("expected `lo,hi` or a single value, got {s:?}")),
    }
}

/// Error of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Argument(_) | Error::InvalidFrame(_) | Error::Domain(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn uses_mvec(id: IdentityId) -> bool {
    matches!(id, IdentityId::C3Transform | IdentityId::DeltaLemma)
}

fn default_total(id: IdentityId) -> usize {
    if id == IdentityId::C3Transform {
        0
    } else {
        2
    }
}

fn checked_dims(id: IdentityId, dims: Dims) -> Result<Dims, CliError> {
    validate_dims(id, &dims).map_err(|e| CliError::usage(format!("invalid --n/--m/--N/--mvec: {e}")))?;
    Ok(dims)
}

fn single_dims(id: IdentityId, args: &DimArgs) -> Result<Dims, CliError> {
    let total = args.total.unwrap_or(default_total(id));
    let dims = if uses_mvec(id) {
        let mvec = args
            .mvec
            .as_ref()
            .ok_or_else(|| CliError::usage(format!("--mvec is required for {id}")))?;
        Dims::boxed(mvec.0.clone(), total)
    } else {
        Dims::new(args.n, args.m, total)
    };
    checked_dims(id, dims)
}

fn grid_dims(args: &FuzzArgs) -> Result<Vec<Dims>, CliError> {
    let id = args.identity;
    let totals = args
        .total
        .clone()
        .map(|l| l.0)
        .unwrap_or_else(|| vec![default_total(id)]);
    let mut grid = Vec::new();
    if uses_mvec(id) {
        if args.mvec.is_empty() {
            return Err(CliError::usage(format!("--mvec is required for {id}")));
        }
        for mvec in &args.mvec {
            for &t in &totals {
                grid.push(checked_dims(id, Dims::boxed(mvec.0.clone(), t))?);
            }
        }
    } else {
        for &n in &args.n.0 {
            for &m in &args.m.0 {
                for &t in &totals {
                    grid.push(checked_dims(id, Dims::new(n, m, t))?);
                }
            }
        }
    }
    Ok(grid)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::io(e.to_string()))
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), CliError> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(format!("stdout: {e}")))
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn run_list(args: &ListArgs) -> Result<u8, CliError> {
    let entries = catalog_list();
    let text = match args.output.output {
        Format::Human => {
            let mut out = String::new();
            for e in &entries {
                let _ = writeln!(out, "{}", e.name);
                let _ = writeln!(out, "    {}", e.summary);
                let _ = writeln!(out, "    dims:       {}", e.dims);
                let _ = writeln!(out, "    free:       {}", e.free);
                let _ = writeln!(out, "    bound:      {}", e.bound);
                let _ = writeln!(out, "    constraint: {}", e.constraint);
                if !e.derived.is_empty() {
                    let _ = writeln!(out, "    derived:    {}", e.derived.join("; "));
                }
            }
            out
        }
        Format::Json => pretty(&serde_json::to_value(&entries).expect("catalog serializes")),
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|e| {
                    vec![
                        e.name.to_string(),
                        e.summary.to_string(),
                        e.dims.to_string(),
                        e.free.to_string(),
                        e.bound.to_string(),
                        e.constraint.to_string(),
                        e.derived.join("; "),
                    ]
                })
                .collect();
            csv_text(
                &["name", "summary", "dims", "free", "bound", "constraint", "derived"],
                &rows,
            )?
        }
    };
    emit(&args.output, &text)?;
    Ok(EXIT_OK)
}

fn report_text(report: &VerificationReport, output: &OutputArgs) -> Result<String, CliError> {
    let timing = !output.no_timing;
    Ok(match output.output {
        Format::Human => report.to_human(timing),
        Format::Json => report.to_json(timing),
        Format::Csv => csv_text(&CSV_HEADER, &[report.csv_record(timing)])?,
    })
}

fn run_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let id = args.identity;
    let dims = single_dims(id, &args.dims)?;
    let config = args.sampling.config(args.p_mod);
    let mut instance = sample_instance(id, &dims, &config, args.sampling.precision)?;
    if let Some(eps) = args.perturb {
        instance = instance.perturbed(eps)?;
    }
    let report = verify_instance(&instance)?;
    emit(&args.output, &report_text(&report, &args.output)?)?;
    Ok(if report.status == Status::Fail {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

fn campaign_rows(summary: &CampaignSummary, timing: bool) -> Vec<Vec<String>> {
    summary
        .outcomes
        .iter()
        .map(|o| {
            let mut row = vec![summary.p_modulus.to_string()];
            match &o.report {
                Some(r) => row.extend(r.csv_record(timing)),
                None => {
                    let dims = &summary.cells[o.cell].dims;
                    let mvec: Vec<String> = dims.mvec.iter().map(usize::to_string).collect();
                    let mut cols = vec![String::new(); CSV_HEADER.len()];
                    cols[0] = summary.identity.to_string();
                    cols[1] = dims.n.to_string();
                    cols[2] = dims.m.to_string();
                    cols[3] = dims.total.to_string();
                    cols[4] = mvec.join(",");
                    cols[5] = o.seed.to_string();
                    cols[6] = summary.precision_bits.to_string();
                    cols[14] = "SAMPLING_FAILURE".into();
                    row.extend(cols);
                }
            }
            row
        })
        .collect()
}

fn run_fuzz(args: &FuzzArgs) -> Result<u8, CliError> {
    let grid = grid_dims(args)?;
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be positive"));
    }
    let mut summaries = Vec::new();
    for &p in &args.p_mod.0 {
        let config = args.sampling.config(p);
        summaries.push(fuzz_campaign(
            args.identity,
            &grid,
            args.trials,
            &config,
            args.sampling.precision,
        )?);
    }
    let timing = !args.output.no_timing;
    let text = match args.output.output {
        Format::Human => summaries
            .iter()
            .map(CampaignSummary::to_human)
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => pretty(&serde_json::Value::Array(
            summaries.iter().map(|s| s.to_json_value(timing)).collect(),
        )),
        Format::Csv => {
            let mut header = vec!["p"];
            header.extend(CSV_HEADER);
            let rows: Vec<Vec<String>> = summaries.iter().flat_map(|s| campaign_rows(s, timing)).collect();
            csv_text(&header, &rows)?
        }
    };
    emit(&args.output, &text)?;
    Ok(if summaries.iter().any(|s| s.fail() > 0) {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

struct PathTiming {
    mean_ms: f64,
    min_ms: f64,
}

fn time_path(
    instance: &ehs_core::catalog::IdentityInstance,
    path: PochPath,
    repeat: usize,
) -> Result<PathTiming, CliError> {
    let mut samples = Vec::with_capacity(repeat);
    for _ in 0..repeat {
        let ev = Evaluator::new(instance.frame()).with_poch_path(path);
        let start = Instant::now();
        evaluate_sides_with(instance, &ev)?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(PathTiming {
        mean_ms: samples.iter().sum::<f64>() / repeat as f64,
        min_ms: samples.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn run_bench(args: &BenchArgs) -> Result<u8, CliError> {
    if args.repeat == 0 {
        return Err(CliError::usage("--repeat must be positive"));
    }
    let id = args.identity;
    let dims = single_dims(id, &args.dims)?;
    let config = args.sampling.config(args.p_mod);
    let instance = sample_instance(id, &dims, &config, args.sampling.precision)?;
    let report = verify_instance(&instance)?;
    let reference = time_path(&instance, PochPath::Reference, args.repeat)?;
    let incremental = time_path(&instance, PochPath::Incremental, args.repeat)?;
    let text = match args.output.output {
        Format::Human => format!(
            "{id} [{dims}] seed={} precision={} bits, terms {} / {}, status {}\n  reference:   mean {:.3} ms, min {:.3} ms\n  incremental: mean {:.3} ms, min {:.3} ms",
            args.sampling.seed,
            args.sampling.precision,
            report.terms_lhs,
            report.terms_rhs,
            report.status,
            reference.mean_ms,
            reference.min_ms,
            incremental.mean_ms,
            incremental.min_ms
        ),
        Format::Json => pretty(&serde_json::json!({
            "identity": id,
            "dims": dims,
            "seed": args.sampling.seed,
            "precision_bits": args.sampling.precision,
            "terms": {"lhs": report.terms_lhs, "rhs": report.terms_rhs},
            "status": report.status,
            "repeat": args.repeat,
            "reference_ms": {"mean": reference.mean_ms, "min": reference.min_ms},
            "incremental_ms": {"mean": incremental.mean_ms, "min": incremental.min_ms},
        })),
        Format::Csv => {
            let mvec: Vec<String> = dims.mvec.iter().map(usize::to_string).collect();
            let row = vec![
                id.to_string(),
                dims.n.to_string(),
                dims.m.to_string(),
                dims.total.to_string(),
                mvec.join(","),
                args.sampling.seed.to_string(),
                args.sampling.precision.to_string(),
                report.terms_lhs.to_string(),
                report.terms_rhs.to_string(),
                report.status.to_string(),
                args.repeat.to_string(),
                format!("{:.3}", reference.mean_ms),
                format!("{:.3}", reference.min_ms),
                format!("{:.3}", incremental.mean_ms),
                format!("{:.3}", incremental.min_ms),
            ];
            csv_text(
                &[
                    "identity",
                    "n",
                    "m",
                    "N",
                    "mvec",
                    "seed",
                    "precision_bits",
                    "terms_lhs",
                    "terms_rhs",
                    "status",
                    "repeat",
                    "reference_mean_ms",
                    "reference_min_ms",
                    "incremental_mean_ms",
                    "incremental_min_ms",
                ],
                &[row],
            )?
        }
    };
    emit(&args.output, &text)?;
    Ok(if report.status == Status::Fail {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

/// Executes a parsed command and returns its exit code; errors are reported on stderr.
pub fn run(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::List(a) => run_list(a),
        Command::Verify(a) => run_verify(a),
        Command::Fuzz(a) => run_fuzz(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
