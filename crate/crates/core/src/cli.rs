//! Command-line front end.
//!
//! Numeric results go to stdout (or `--out`), diagnostics to stderr. Exit
//! codes: 0 success, 1 verification failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    classify_with, violation_window, AlternatingOptions, BoundsReport, ClassifyOptions,
    TMaxMethod, ViolationWindow,
};
use crate::error::BellError;
use crate::grid::SettingGrid;
use crate::lhv::{
    factored_inner_product, lhv_inner_product, max_lhv_inner_product_with,
    projection_decomposition, run_oracle, trig_identity_suite, DeterministicStrategy,
    LhvSearchOptions, SearchMode, EXHAUSTIVE_MAX_PARTIES, MAX_PROJECTION_NORM,
};
use crate::tensor::{ghz_werner_tensor, CorrelationTensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bell(#[from] BellError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "trisetting",
    version,
    about = "Three-setting Bell inequality bounds for N-qubit GHZ–Werner states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the GHZ–Werner correlation tensor as JSON.
    Tensor(TensorArgs),
    /// Evaluate (E,E), T_max and the 2^N·T_max bound; classify.
    Bounds(BoundsArgs),
    /// Tabulate the visibility window 2(2/3)^N < V ≤ 2^{-(N-1)/2}.
    Window(WindowArgs),
    /// Maximize the LHV inner product and check it against 2^N·T_max.
    Oracle(OracleArgs),
    /// Run the grid identities, projection-norm and factored-form checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TensorArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub v: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Number of parties.
    #[arg(long, conflicts_with = "load")]
    pub n: Option<usize>,
    /// Visibility; a comma-separated list is allowed for sweeps.
    #[arg(long, value_delimiter = ',', conflicts_with = "load")]
    pub v: Vec<f64>,
    /// Read a tensor JSON file instead of building a GHZ–Werner tensor.
    #[arg(long)]
    pub load: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Party range `a..b` (inclusive) for sweeps.
    #[arg(long, conflicts_with_all = ["n", "load"])]
    pub n_range: Option<String>,
    /// Visibility sweep `start:stop:step` (inclusive).
    #[arg(long, conflicts_with_all = ["v", "load"])]
    pub v_sweep: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// T_max method; defaults to the GHZ closed form when it applies.
    #[arg(long)]
    pub method: Option<String>,
    /// Also run the LHV oracle (N ≤ 9 unless --mode alternating).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Alternating,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::Alternating => SearchMode::Alternating,
        }
    }
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Party range `a..b` (inclusive) or a single `n`.
    #[arg(long = "n-range", visible_alias = "n")]
    pub n_range: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parameter sweep over parties and visibilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub n_range: RangeInclusive<usize>,
    pub v_values: Vec<f64>,
}

impl ScanSpec {
    pub fn new(n_range: RangeInclusive<usize>, v_values: Vec<f64>) -> Result<Self, CliError> {
        if n_range.is_empty() {
            return Err(CliError::Usage("empty party range".into()));
        }
        if v_values.is_empty() {
            return Err(CliError::Usage("no visibilities given".into()));
        }
        if let Some(v) = v_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(BellError::InvalidVisibility(*v).into());
        }
        Ok(ScanSpec { n_range, v_values })
    }

    /// `(n, v)` pairs sorted by `n`, then `v`.
    pub fn points(&self) -> Vec<(usize, f64)> {
        let mut vs = self.v_values.clone();
        vs.sort_by(f64::total_cmp);
        vs.dedup();
        self.n_range
            .clone()
            .flat_map(|n| vs.iter().map(move |&v| (n, v)))
            .collect()
    }
}

/// Parses `a..b`, `a..=b` (both inclusive) or a bare `n`.
pub fn parse_n_range(s: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::Usage(format!("invalid party range `{s}` (expected a..b)"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

/// Parses `start:stop:step` into `start + k·step` up to and including `stop`.
pub fn parse_v_sweep(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid sweep `{s}` (expected start:stop:step)"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn load_tensor(path: &Path) -> Result<CorrelationTensor, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

fn single_tensor(source: &SourceArgs) -> Result<CorrelationTensor, CliError> {
    if let Some(path) = &source.load {
        return load_tensor(path);
    }
    let n = source
        .n
        .ok_or_else(|| CliError::Usage("either --n/--v or --load is required".into()))?;
    let v = match source.v[..] {
        [v] => v,
        [] => return Err(CliError::Usage("--v is required with --n".into())),
        _ => return Err(CliError::Usage("a single --v is expected here".into())),
    };
    Ok(ghz_werner_tensor(n, v)?)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

// ---------------------------------------------------------------------------

pub fn cmd_tensor(args: &TensorArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let tensor = ghz_werner_tensor(args.n, args.v)?;
    emit(args.out.as_deref(), &to_json(&tensor), stdout)?;
    Ok(EXIT_OK)
}

fn search_options(seed: u64) -> LhvSearchOptions {
    LhvSearchOptions {
        seed,
        ..LhvSearchOptions::default()
    }
}

fn default_mode(n: usize, requested: Option<ModeArg>) -> SearchMode {
    requested.map(SearchMode::from).unwrap_or(if n <= EXHAUSTIVE_MAX_PARTIES {
        SearchMode::Exhaustive
    } else {
        SearchMode::Alternating
    })
}

fn bounds_report(
    tensor: &CorrelationTensor,
    args: &BoundsArgs,
    options: &ClassifyOptions,
) -> Result<BoundsReport, CliError> {
    let lhv_max = if args.oracle {
        let n = tensor.n_parties();
        let grid = SettingGrid::three_setting(n)?;
        let mode = default_mode(n, args.mode);
        Some(max_lhv_inner_product_with(tensor, &grid, mode, &search_options(args.seed))?.value)
    } else {
        None
    };
    Ok(classify_with(tensor, lhv_max, options)?)
}

pub fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let options = ClassifyOptions {
        method: args
            .method
            .as_deref()
            .map(str::parse::<TMaxMethod>)
            .transpose()?,
        alternating: AlternatingOptions {
            seed: args.seed,
            ..AlternatingOptions::default()
        },
    };

    let is_sweep = args.n_range.is_some() || args.v_sweep.is_some() || args.source.v.len() > 1;
    let reports = if is_sweep {
        let n_range = match (&args.n_range, args.source.n) {
            (Some(r), _) => parse_n_range(r)?,
            (None, Some(n)) => n..=n,
            (None, None) => return Err(CliError::Usage("sweep needs --n or --n-range".into())),
        };
        let v_values = match &args.v_sweep {
            Some(s) => parse_v_sweep(s)?,
            None => args.source.v.clone(),
        };
        let spec = ScanSpec::new(n_range, v_values)?;
        spec.points()
            .into_par_iter()
            .map(|(n, v)| {
                let tensor = ghz_werner_tensor(n, v)?;
                bounds_report(&tensor, args, &options)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![bounds_report(&single_tensor(&args.source)?, args, &options)?]
    };

    let text = match args.format {
        Format::Json if is_sweep => to_json(&reports),
        Format::Json => to_json(&reports[0]),
        Format::Csv => to_csv(&reports.iter().map(BoundsReport::sweep_row).collect::<Vec<_>>())?,
    };
    emit(args.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_window(args: &WindowArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let rows: Vec<ViolationWindow> = parse_n_range(&args.n_range)?
        .map(violation_window)
        .collect::<Result<_, _>>()?;
    let text = match args.format {
        Format::Json => to_json(&rows),
        Format::Csv => to_csv(&rows)?,
    };
    emit(args.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let tensor = single_tensor(&args.source)?;
    let mode = default_mode(tensor.n_parties(), args.mode);
    let report = run_oracle(&tensor, mode, &search_options(args.seed))?;
    emit(args.out.as_deref(), &to_json(&report), stdout)?;
    Ok(if report.satisfied {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

#[derive(Debug, Serialize)]
struct CheckOutcome {
    name: String,
    passed: bool,
    max_residual: f64,
    detail: String,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    passed: bool,
    checks: Vec<CheckOutcome>,
}

fn factored_check(n: usize, tensor: &CorrelationTensor) -> Result<CheckOutcome, CliError> {
    let grid = SettingGrid::three_setting(n)?;
    let mut worst = 0.0f64;
    let count = 1u64 << (3 * n);
    for packed in 0..count {
        let s = DeterministicStrategy::from_packed(n, packed);
        let direct = lhv_inner_product(&s, tensor, &grid)?;
        let factored = factored_inner_product(&s, tensor, &grid)?;
        worst = worst.max((direct - factored).abs());
    }
    Ok(CheckOutcome {
        name: format!("factored_form_n{n}"),
        passed: worst <= 1e-9,
        max_residual: worst,
        detail: format!("{count} strategies, tensor {}", tensor.label().unwrap_or("unlabeled")),
    })
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let mut checks = Vec::new();

    let trig = trig_identity_suite(3)?;
    checks.push(CheckOutcome {
        name: "trig_identities".into(),
        passed: trig.passed,
        max_residual: trig.max_residual,
        detail: format!(
            "cross={:e} cos²={} sin²={}",
            trig.cross_sum, trig.cos_sq_sum, trig.sin_sq_sum
        ),
    });

    let (mut zeros, mut maxima, mut worst) = (0, 0, 0.0f64);
    for bits in 0u8..8 {
        let signs = [0, 1, 2].map(|l| if bits >> l & 1 == 1 { -1 } else { 1 });
        let norm = projection_decomposition(&signs)?.norm;
        let (dist_zero, dist_max) = (norm.abs(), (norm - MAX_PROJECTION_NORM).abs());
        if dist_zero <= 1e-12 {
            zeros += 1;
        } else if dist_max <= 1e-12 {
            maxima += 1;
        }
        worst = worst.max(dist_zero.min(dist_max));
    }
    checks.push(CheckOutcome {
        name: "projection_norm_dichotomy".into(),
        passed: zeros == 2 && maxima == 6,
        max_residual: worst,
        detail: format!("{zeros} at 0, {maxima} at 2√(2/3)"),
    });

    for n in [2, 3] {
        checks.push(factored_check(n, &ghz_werner_tensor(n, 1.0)?)?);
        let comps: Vec<f64> = (0..1usize << n)
            .map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() * 2.0 - 1.0)
            .collect();
        checks.push(factored_check(n, &CorrelationTensor::new(n, comps)?.with_label("quasi-random"))?);
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("verify: {} failed ({})", c.name, c.detail);
    }
    emit(args.out.as_deref(), &to_json(&VerifyReport { passed, checks }), stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

// ---------------------------------------------------------------------------

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Tensor(a) => cmd_tensor(a, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::Window(a) => cmd_window(a, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_with_io<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("BELL_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    configure_threads();
    run_with_io(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("trisetting").chain(args.iter().copied());
        let code = run_with_io(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn n_range_parsing() {
        assert_eq!(parse_n_range("2..10").unwrap(), 2..=10);
        assert_eq!(parse_n_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_n_range("6").unwrap(), 6..=6);
        assert!(parse_n_range("5..2").is_err());
        assert!(parse_n_range("a..b").is_err());
    }

    #[test]
    fn v_sweep_parsing() {
        assert_eq!(parse_v_sweep("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let v = parse_v_sweep("0.1:0.3:0.1").unwrap();
        assert_eq!(v, vec![0.1, 0.2, 0.3]);
        assert!(parse_v_sweep("0:1").is_err());
        assert!(parse_v_sweep("0:1:0").is_err());
        assert!(parse_v_sweep("1:0:0.1").is_err());
    }

    #[test]
    fn scan_spec_orders_points() {
        let spec = ScanSpec::new(2..=3, vec![0.5, 0.1]).unwrap();
        assert_eq!(spec.points(), vec![(2, 0.1), (2, 0.5), (3, 0.1), (3, 0.5)]);
        assert!(ScanSpec::new(2..=3, vec![1.5]).is_err());
        assert!(ScanSpec::new(2..=3, vec![]).is_err());
    }

    #[test]
    fn tensor_command_errors_on_one_party() {
        let (code, out, err) = run_args(&["tensor", "--n", "1", "--v", "0.5"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.contains("n_parties must be ≥ 2"), "{err}");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, _) = run_args(&["tensor", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_args(&["bounds", "--n", "3", "--v", "0.5", "--method", "newton"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn verify_passes() {
        let (code, out, _) = run_args(&["verify"]);
        assert_eq!(code, EXIT_OK);
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(json["passed"], true);
        assert_eq!(json["checks"].as_array().unwrap().len(), 6);
    }
}
