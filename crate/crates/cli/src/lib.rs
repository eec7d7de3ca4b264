//! Command-line front end for `rpq-core`.
//!
//! [`run_cli`] parses an argument vector, runs one subcommand and returns the
//! process exit code: 0 on success, 1 when a verification suite has a failing
//! asserted identity, 2 on invalid input or a domain error.

pub mod format;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rpq_core::distributions::{
    limit_distance_with_mode, pmf_table, sample, DistributionSpec, Kind, LimitFamily, Truncation,
};
use rpq_core::verification::{
    identities, run_suite_with, suite_failed, to_json_lines, SuiteConfig,
};
use rpq_core::{
    combinatorics, make_preset_algebra, DeformationAlgebra, Extended, FormulaMode, MultiIndex,
    PrecisionMode, Preset, Real,
};
use thiserror::Error;

use format::{
    limits_csv, p_of, sample_csv, sample_json, table_csv, table_json, LimitDocument, Number,
    SampleMeta,
};

/// Environment variable holding the default precision mode.
pub const PRECISION_ENV: &str = "RPQ_PRECISION";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rpq_core::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("{failed} of {total} verification reports failed")]
    VerificationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rpq",
    version,
    about = "R(p,q)-deformed multinomial coefficients and distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a deformed multinomial coefficient.
    Coeff(CoeffArgs),
    /// Emit the probability table of a distribution.
    Table(TableArgs),
    /// Draw seeded samples from a distribution.
    Sample(SampleArgs),
    /// Run the identity suite and print one JSON report per line.
    Verify(VerifyArgs),
    /// Distance between finite distributions and their Heine or Euler limit.
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    /// Every registered identity on its default grid.
    Default,
    /// Only what the config file lists.
    None,
}

#[derive(Debug, Args)]
pub struct AlgebraArgs {
    /// Preset algebra.
    #[arg(long, default_value = "q-standard")]
    pub algebra: Preset,
    /// Required by presets whose structure function depends on p.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: String,
    #[arg(long, env = PRECISION_ENV, default_value = "standard")]
    pub precision: PrecisionMode,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long)]
    pub kind: Kind,
    /// Number of trials, or the n parameter of negative families.
    #[arg(long, default_value_t = 0)]
    pub n: u32,
    /// Dimension; a single theta or m value is repeated k times.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma separated theta_j.
    #[arg(long)]
    pub theta: Option<String>,
    /// Comma separated absorption parameters m_j.
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long, default_value_t = Truncation::default().eps_tail)]
    pub eps_tail: f64,
    /// Largest total index enumerated for infinite supports.
    #[arg(long, default_value_t = Truncation::default().max_index)]
    pub max_index: u32,
    #[arg(long, default_value = "corrected")]
    pub mode: FormulaMode,
    /// Accept theta_j >= 1 where the trial model allows it.
    #[arg(long)]
    pub allow_large_theta: bool,
}

#[derive(Debug, Args)]
pub struct CoeffArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    /// Upper index.
    #[arg(long, allow_hyphen_values = true)]
    pub x: i64,
    /// Comma separated lower indices.
    #[arg(long)]
    pub r: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Defaults to `default` without a config file.
    #[arg(long, value_enum)]
    pub suite: Option<SuiteName>,
    /// TOML file with `[[check]]` grids and `[[case]]` points.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = PRECISION_ENV, default_value = "standard")]
    pub precision: PrecisionMode,
    /// List the registered identities instead of running them.
    #[arg(long)]
    pub list: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[arg(long)]
    pub family: LimitFamily,
    /// Comma separated values of n.
    #[arg(long, default_value = "5,10,20,40")]
    pub n: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub theta: String,
    #[arg(long, default_value = "corrected")]
    pub mode: FormulaMode,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one command and returns the exit code. Results go to `--out` or
/// `stdout`, diagnostics to `stderr`.
pub fn run_cli<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                2
            } else {
                let _ = write!(stdout, "{e}");
                0
            };
            return code;
        }
    };
    match run(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "rpq: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Coeff(a) => match a.algebra.precision {
            PrecisionMode::Standard => coeff::<f64>(a, stdout),
            PrecisionMode::Extended => coeff::<Extended>(a, stdout),
        },
        Command::Table(a) => match a.algebra.precision {
            PrecisionMode::Standard => table::<f64>(a, stdout),
            PrecisionMode::Extended => table::<Extended>(a, stdout),
        },
        Command::Sample(a) => match a.algebra.precision {
            PrecisionMode::Standard => draw::<f64>(a, stdout),
            PrecisionMode::Extended => draw::<Extended>(a, stdout),
        },
        Command::Verify(a) => verify(a, stdout, stderr),
        Command::Limits(a) => match a.algebra.precision {
            PrecisionMode::Standard => limits::<f64>(a, stdout),
            PrecisionMode::Extended => limits::<Extended>(a, stdout),
        },
    }
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn parse_real<T: Real>(s: &str, what: &str) -> Result<T, CliError> {
    let ok = s.trim().parse::<f64>().is_ok_and(f64::is_finite);
    match T::parse_decimal(s) {
        Some(v) if ok => Ok(v),
        _ => Err(CliError::Input(format!(
            "{what}: `{s}` is not a finite number"
        ))),
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Parses a comma list, repeating a single value `k` times.
fn parse_list<X>(
    s: &str,
    k: Option<usize>,
    what: &str,
    f: impl Fn(&str) -> Result<X, CliError>,
) -> Result<Vec<X>, CliError>
where
    X: Clone,
{
    let v: Vec<X> = split_list(s).map(f).collect::<Result<_, _>>()?;
    match (v.len(), k) {
        (0, _) => Err(CliError::Input(format!("{what} is empty"))),
        (1, Some(k)) => Ok(vec![v[0].clone(); k]),
        (len, Some(k)) if len != k => Err(CliError::Input(format!(
            "{what} has {len} values but k = {k}"
        ))),
        _ => Ok(v),
    }
}

fn algebra<T: Real>(a: &AlgebraArgs) -> Result<DeformationAlgebra<T>, CliError> {
    let q = parse_real::<T>(&a.q, "--q")?;
    let p = match &a.p {
        Some(p) => parse_real::<T>(p, "--p")?,
        None if a.algebra.uses_p() => {
            return Err(CliError::Input(format!(
                "--p is required for {}",
                a.algebra
            )));
        }
        None => T::one(),
    };
    Ok(make_preset_algebra(a.algebra, p, q)?)
}

fn spec<T: Real>(
    alg: DeformationAlgebra<T>,
    d: &DistArgs,
) -> Result<DistributionSpec<T>, CliError> {
    if d.k == Some(0) {
        return Err(CliError::Input("k must be at least 1".into()));
    }
    let mut b = DistributionSpec::builder(d.kind, alg)
        .n(d.n)
        .truncation(Truncation {
            eps_tail: d.eps_tail,
            max_index: d.max_index,
        })
        .mode(d.mode)
        .allow_large_theta(d.allow_large_theta);
    if d.kind.is_absorption() {
        if d.theta.is_some() {
            return Err(CliError::Input(format!(
                "{} takes --m, not --theta",
                d.kind
            )));
        }
        let m =
            d.m.as_deref()
                .ok_or_else(|| CliError::Input(format!("{} needs --m", d.kind)))?;
        b = b.absorption(parse_list(m, d.k, "--m", |t| parse_real::<f64>(t, "--m"))?);
    } else {
        if d.m.is_some() {
            return Err(CliError::Input(format!(
                "{} takes --theta, not --m",
                d.kind
            )));
        }
        let theta = d
            .theta
            .as_deref()
            .ok_or_else(|| CliError::Input(format!("{} needs --theta", d.kind)))?;
        b = b.theta(parse_list(theta, d.k, "--theta", |t| {
            parse_real::<T>(t, "--theta")
        })?);
    }
    Ok(b.build()?)
}

fn coeff<T: Real>(a: &CoeffArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let alg = algebra::<T>(&a.algebra)?;
    let r: Vec<u32> = split_list(&a.r)
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Input(format!("--r: `{t}` is not a non-negative integer")))
        })
        .collect::<Result<_, _>>()?;
    if r.is_empty() {
        return Err(CliError::Input("--r is empty".into()));
    }
    let v = combinatorics::multinomial(&alg, a.x, &MultiIndex::new(r)?)?;
    emit(&a.out, stdout, &format!("{}\n", v.to_repr()))
}

fn table<T: Real>(a: &TableArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = spec(algebra::<T>(&a.algebra)?, &a.dist)?;
    let t = pmf_table(&spec)?;
    let text = match a.format {
        OutputFormat::Csv => table_csv(&t),
        OutputFormat::Json => table_json(&t),
    };
    emit(&a.out, stdout, &text)
}

fn draw<T: Real>(a: &SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = spec(algebra::<T>(&a.algebra)?, &a.dist)?;
    let draws = sample(&spec, a.seed, a.draws)?;
    let text = match a.format {
        OutputFormat::Csv => sample_csv(spec.k(), &draws),
        OutputFormat::Json => {
            let alg = spec.algebra();
            let meta = SampleMeta {
                algebra: alg.name().to_string(),
                p: p_of(alg),
                q: Number::of(alg.q()),
                theta: spec.theta().iter().map(Number::of).collect(),
                n: spec.n(),
                k: spec.k(),
                kind: spec.kind().id().to_string(),
                seed: a.seed,
                draws: a.draws,
            };
            sample_json(meta, &draws)
        }
    };
    emit(&a.out, stdout, &text)
}

fn read_config(path: &Path) -> Result<SuiteConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(SuiteConfig::from_toml_str(&text)?)
}

fn verify(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    if a.list {
        let mut s = String::new();
        for info in identities() {
            s.push_str(&serde_json::to_string(&info).expect("identity info serialises"));
            s.push('\n');
        }
        return emit(&a.out, stdout, &s);
    }
    let mut config = match &a.config {
        Some(path) => read_config(path)?,
        None => SuiteConfig::default_suite(),
    };
    match a.suite {
        Some(SuiteName::Default) => config.include_default = true,
        Some(SuiteName::None) => config.include_default = false,
        None => {}
    }
    let reports = match a.precision {
        PrecisionMode::Standard => run_suite_with::<f64>(&config)?,
        PrecisionMode::Extended => run_suite_with::<Extended>(&config)?,
    };
    emit(&a.out, stdout, &to_json_lines(&reports))?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(stderr, "{} reports, {failed} failed", reports.len());
    if suite_failed(&reports) {
        return Err(CliError::VerificationFailed {
            failed,
            total: reports.len(),
        });
    }
    Ok(())
}

fn limits<T: Real>(a: &LimitsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.k == Some(0) {
        return Err(CliError::Input("k must be at least 1".into()));
    }
    let alg = algebra::<T>(&a.algebra)?;
    let theta = parse_list(&a.theta, a.k, "--theta", |t| parse_real::<T>(t, "--theta"))?;
    let ns: Vec<u32> = split_list(&a.n)
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Input(format!("--n: `{t}` is not a non-negative integer")))
        })
        .collect::<Result<_, _>>()?;
    if ns.is_empty() {
        return Err(CliError::Input("--n is empty".into()));
    }
    let distances = ns
        .iter()
        .map(|&n| {
            Ok((
                n,
                limit_distance_with_mode(&alg, &theta, n, a.family, a.mode)?,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut sorted = distances.clone();
    sorted.sort_by_key(|(n, _)| *n);
    let doc = LimitDocument {
        family: match a.family {
            LimitFamily::Heine => "heine",
            LimitFamily::Euler => "euler",
        }
        .to_string(),
        algebra: alg.name().to_string(),
        theta: theta.iter().map(Number::of).collect(),
        strictly_decreasing: sorted
            .windows(2)
            .all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1),
        distances,
    };
    let text = match a.format {
        OutputFormat::Csv => limits_csv(&doc),
        OutputFormat::Json => {
            let mut s = serde_json::to_string(&doc).expect("limits serialise");
            s.push('\n');
            s
        }
    };
    emit(&a.out, stdout, &text)
}
