//! `metrics-ci` command-line interface.
//!
//! Every subcommand is a pure function of its arguments and input bytes.
//! Exit codes: 0 success, 1 data or domain error, 2 usage error.

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use crate::data::{parse_estimates, parse_labels, parse_predictions, stratified_folds, GroupKey};
use crate::distribution::{histogram, qq_gaussian};
use crate::format::{round_sig, sig7};
use crate::report::{
    augment, chart_from_augmented, compare, render_error_bar_svg, write_augmented,
};
use crate::simulate::{emit_ensemble, simulate_coverage, simulate_multiseed, SimulationConfig};
use crate::stats::{normal_approx_ci, normal_approx_ci_from_accuracy, z_from_level};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "metrics-ci",
    version,
    about = "Confidence intervals and significance checks for classifier accuracy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal-approximation interval for one accuracy measurement
    Ci(CiArgs),
    /// Per-group intervals, overlap matrix and McNemar tests from predictions
    Compare(CompareArgs),
    /// Add interval columns (and optionally a chart) to an estimates file
    Augment(AugmentArgs),
    /// Stratified k-fold assignment
    Folds(FoldsArgs),
    /// Histogram and Gaussian QQ diagnostics of accuracies
    Dist(DistArgs),
    /// Monte Carlo studies
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("estimate").required(true).args(["acc", "correct"])))]
#[command(group(ArgGroup::new("width").required(true).args(["z", "level"])))]
struct CiArgs {
    /// Measured accuracy in [0, 1]
    #[arg(long)]
    acc: Option<f64>,
    /// Number of correct predictions
    #[arg(long)]
    correct: Option<u64>,
    /// Holdout size
    #[arg(long)]
    n: u64,
    #[arg(long)]
    z: Option<f64>,
    /// Central confidence level in (0, 1)
    #[arg(long)]
    level: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("width").args(["z", "level"])))]
struct CompareArgs {
    /// predictions.csv
    #[arg(long)]
    input: PathBuf,
    /// model, fold or seed
    #[arg(long, default_value = "model")]
    group_by: String,
    /// Interval width for the overlap matrix (default z = 1)
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// Pairwise McNemar tests between models
    #[arg(long)]
    mcnemar: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("width").required(true).args(["z", "level"])))]
struct AugmentArgs {
    /// estimates.csv
    #[arg(long)]
    input: PathBuf,
    /// One or two z values (repeat the flag or separate with commas)
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    z: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    level: Vec<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write an error-bar chart
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value = "accuracy")]
    title: String,
}

#[derive(Debug, Args)]
struct FoldsArgs {
    /// CSV with header `sample_id,label`
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistArgs {
    /// CSV with an `accuracy` column
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 15)]
    bins: usize,
    /// Also compute the Gaussian QQ series
    #[arg(long)]
    qq: bool,
    /// Histogram CSV destination
    #[arg(long)]
    output: Option<PathBuf>,
    /// QQ CSV destination (default: after the histogram on stdout)
    #[arg(long)]
    qq_output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Empirical coverage of the normal-approximation interval
    Coverage(CoverageArgs),
    /// Fold × seed ensemble against the normal approximation
    Multiseed(MultiseedArgs),
}

#[derive(Debug, Args)]
struct SimCommon {
    /// True accuracy
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    /// Holdout size
    #[arg(long, default_value_t = 670)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("width").args(["z", "level"])))]
struct CoverageArgs {
    #[command(flatten)]
    common: SimCommon,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
}

#[derive(Debug, Args)]
struct MultiseedArgs {
    #[command(flatten)]
    common: SimCommon,
    #[arg(long, default_value_t = 20)]
    folds: u32,
    #[arg(long, default_value_t = 1)]
    seeds: u32,
    /// Standard deviation of the per-seed accuracy shift
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Also write the simulated ensemble CSV
    #[arg(long)]
    ensemble: Option<PathBuf>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let text = err.render().to_string();
            return if err.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(stderr, "metrics-ci: {err}");
            match err {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ci(a) => cmd_ci(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Augment(a) => cmd_augment(a, stdout),
        Command::Folds(a) => cmd_folds(a, stdout, stderr),
        Command::Dist(a) => cmd_dist(a, stdout, stderr),
        Command::Simulate(SimulateCommand::Coverage(a)) => cmd_coverage(a, stdout),
        Command::Simulate(SimulateCommand::Multiseed(a)) => cmd_multiseed(a, stdout),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(stdout.write_all(bytes)?),
    }
}

/// Rounds every float in a JSON tree to 7 significant digits.
fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

/// Serializes `value` as one line of JSON with floats at 7 significant digits.
pub fn to_json_line<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let tree = serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes =
        serde_json::to_vec(&round_json(tree)).map_err(|e| Error::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn resolve_z(z: Option<f64>, level: Option<f64>, default: Option<f64>) -> Result<f64> {
    match (z, level) {
        (Some(z), None) => Ok(z),
        (None, Some(level)) => z_from_level(level),
        (None, None) => {
            default.ok_or_else(|| Error::Usage("one of --z or --level is required".into()))
        }
        (Some(_), Some(_)) => Err(Error::Usage(
            "--z and --level are mutually exclusive".into(),
        )),
    }
}

fn cmd_ci(a: CiArgs, stdout: &mut dyn Write) -> Result<()> {
    let z = resolve_z(a.z, a.level, None)?;
    let ci = match (a.acc, a.correct) {
        (Some(acc), None) => normal_approx_ci_from_accuracy(acc, a.n, z)?,
        (None, Some(correct)) => normal_approx_ci(correct, a.n, z)?,
        _ => {
            return Err(Error::Usage(
                "give exactly one of --acc or --correct".into(),
            ))
        }
    };
    let mut out = to_json_line(&ci)?;
    writeln!(
        out,
        "accuracy {} ± {} at z = {} ({}% level): [{}, {}]",
        sig7(ci.point),
        sig7(ci.half_width),
        sig7(ci.z),
        sig7(100.0 * ci.level),
        sig7(ci.lower),
        sig7(ci.upper)
    )?;
    emit(None, &out, stdout)
}

fn cmd_compare(a: CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let group_key: GroupKey = a
        .group_by
        .parse()
        .map_err(|e: Error| Error::Usage(e.to_string()))?;
    let z = resolve_z(a.z, a.level, Some(1.0))?;
    let records = parse_predictions(open(&a.input)?)?;
    let report = compare(&records, group_key, z, a.mcnemar)?;
    emit(a.output.as_deref(), &to_json_line(&report)?, stdout)
}

fn cmd_augment(a: AugmentArgs, stdout: &mut dyn Write) -> Result<()> {
    let zs = if a.level.is_empty() {
        a.z
    } else {
        a.level
            .iter()
            .map(|&l| z_from_level(l))
            .collect::<Result<Vec<_>>>()?
    };
    if zs.len() > 2 {
        return Err(Error::Usage(format!(
            "at most two interval widths, got {}",
            zs.len()
        )));
    }
    let estimates = parse_estimates(open(&a.input)?)?;
    let rows = augment(&estimates, &zs)?;
    let mut csv = Vec::new();
    write_augmented(&rows, &mut csv)?;
    if let Some(svg_path) = &a.svg {
        let svg = render_error_bar_svg(&chart_from_augmented(&rows, &a.title)?)?;
        emit(Some(svg_path), &svg, stdout)?;
    }
    emit(a.output.as_deref(), &csv, stdout)
}

fn cmd_folds(a: FoldsArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let labels = parse_labels(open(&a.input)?)?;
    let assignment = stratified_folds(&labels, a.k, a.seed)?;
    for warning in assignment.warnings() {
        writeln!(stderr, "warning: {warning}")?;
    }
    let mut csv = Vec::new();
    assignment.write_csv(&mut csv)?;
    emit(a.output.as_deref(), &csv, stdout)
}

/// Reads the `accuracy` column of any CSV file.
pub fn read_accuracy_column(path: &Path) -> Result<Vec<f64>> {
    let mut reader = crate::data::csv_reader(open(path)?);
    let col = crate::data::find_column(reader.headers()?, "accuracy")?;
    reader
        .records()
        .map(|row| {
            let row = row?;
            row[col].parse().map_err(|_| Error::Parse {
                line: row.position().map_or(0, |p| p.line()),
                message: format!("accuracy `{}` is not a number", &row[col]),
            })
        })
        .collect()
}

fn cmd_dist(a: DistArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let values = read_accuracy_column(&a.input)?;
    let hist = histogram(&values, a.bins)?;
    let qq = if a.qq {
        Some(qq_gaussian(&values)?)
    } else {
        None
    };

    let mut hist_csv = Vec::new();
    hist.write_csv(&mut hist_csv)?;
    emit(a.output.as_deref(), &hist_csv, stdout)?;
    if let Some(qq) = qq {
        let mut qq_csv = Vec::new();
        qq.write_csv(&mut qq_csv)?;
        if a.qq_output.is_none() && a.output.is_none() {
            stdout.write_all(b"\n")?;
        }
        emit(a.qq_output.as_deref(), &qq_csv, stdout)?;
        writeln!(
            stderr,
            "qq: n = {}, mu = {}, sigma = {}, max_abs_deviation = {}",
            qq.points.len(),
            sig7(qq.mu),
            sig7(qq.sigma),
            sig7(qq.max_abs_deviation)
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CoverageJson<'a> {
    config: &'a SimulationConfig,
    z: f64,
    coverage: f64,
    nominal: f64,
    clamp_events: u64,
}

#[derive(Serialize)]
struct MultiseedJson<'a> {
    config: &'a SimulationConfig,
    approx_half_width: f64,
    sample_std: f64,
    ratio: Option<f64>,
    clamp_events: u64,
}

fn cmd_coverage(a: CoverageArgs, stdout: &mut dyn Write) -> Result<()> {
    let z = resolve_z(a.z, a.level, Some(1.0))?;
    let config = SimulationConfig {
        p: a.common.p,
        n_holdout: a.common.n,
        trials: a.trials,
        rng_seed: a.common.seed,
        ..SimulationConfig::default()
    };
    let r = simulate_coverage(&config, z)?;
    let json = CoverageJson {
        config: &r.config,
        z: r.z,
        coverage: r.coverage,
        nominal: r.nominal,
        clamp_events: r.clamp_events,
    };
    emit(a.common.output.as_deref(), &to_json_line(&json)?, stdout)
}

fn cmd_multiseed(a: MultiseedArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = SimulationConfig {
        p: a.common.p,
        n_holdout: a.common.n,
        folds: a.folds,
        seeds: a.seeds,
        tau: a.tau,
        trials: 1,
        rng_seed: a.common.seed,
    };
    let r = simulate_multiseed(&config)?;
    if let Some(path) = &a.ensemble {
        let mut csv = Vec::new();
        emit_ensemble(&r.measurements, &mut csv)?;
        emit(Some(path), &csv, stdout)?;
    }
    let json = MultiseedJson {
        config: &r.config,
        approx_half_width: r.comparison.approx_half_width,
        sample_std: r.comparison.sample_std,
        ratio: r.comparison.ratio,
        clamp_events: r.clamp_events,
    };
    emit(a.common.output.as_deref(), &to_json_line(&json)?, stdout)
}
