//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid arguments.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::frames::{Angle, FrameRotation};
use crate::noise::{classify_violation, derive_seed, simulate_chsh, DEFAULT_RATE};
use crate::quantum::TwoQubitState;
use crate::sampling::{degree_values, random_frame_violation_probability, scan, SamplingSpec};

#[derive(Debug, Parser)]
#[command(name = "bellframe", version, about = "CHSH violation statistics under partially shared reference frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CHSH parameter at every (θ, φ) grid point, one CSV row per point.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Violation fraction f(φ) and cumulative weighted probability p(t).
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Violation probability for uniformly random relative frames.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of random frames.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Simulated photon counts, CHSH estimate with one-sigma error, and classification.
    Counts {
        #[command(flatten)]
        common: CommonArgs,
        /// In-plane angle θ in degrees, as a value or start:step:stop.
        #[arg(long, default_value = "0")]
        theta: DegreeList,
        /// Tilt φ of the shared axis in degrees, as a value or start:step:stop.
        #[arg(long, default_value = "0")]
        phi: DegreeList,
        /// Final rotation χ about Y in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        chi: f64,
        /// Expected pair rate in pairs per second.
        #[arg(long, default_value_t = DEFAULT_RATE)]
        rate: f64,
        /// Integration time per measurement setting in seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct StateArgs {
    /// Werner-state visibility V in [0, 1].
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Singlet fidelity F in [0.25, 1]; uses the Werner state with V = (4F − 1)/3.
    #[arg(long)]
    pub fidelity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Root seed for all random draws.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: json for montecarlo, csv otherwise].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// In-plane angles θ in degrees, as a value or start:step:stop.
    #[arg(long, default_value = "0:10:180")]
    pub theta: DegreeList,
    /// Tilt angles φ in degrees within [0, 90], as a value or start:step:stop.
    #[arg(long, default_value = "0:10:90")]
    pub phi: DegreeList,
    /// Final rotation χ about Y in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Degrees given as `x` or `start:step:stop` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeList(pub Vec<f64>);

impl std::str::FromStr for DegreeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
            .collect::<Result<Vec<_>, _>>()?;
        match nums.as_slice() {
            [x] if x.is_finite() => Ok(DegreeList(vec![*x])),
            [x] => Err(format!("angle {x} is not finite")),
            [start, step, stop] => degree_values(*start, *step, *stop).map(DegreeList).map_err(|e| e.to_string()),
            _ => Err(format!("expected a number or start:step:stop, got '{s}'")),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            other => CliError::Io(io::Error::other(format!("{other:?}"))),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

type CliResult<T> = Result<T, CliError>;

impl CommonArgs {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(args, &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `stdout` unless `--out` is given. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(stderr, "I/O error: {e}");
            1
        }
    }
}

fn build_state(common: &CommonArgs) -> CliResult<TwoQubitState> {
    match (common.state.visibility, common.state.fidelity) {
        (Some(v), None) => Ok(TwoQubitState::werner(v)?),
        (None, Some(f)) => Ok(TwoQubitState::werner_from_fidelity(f)?),
        _ => Err(CliError::Validation("give exactly one of --visibility or --fidelity".into())),
    }
}

fn check_phi(phi: &[f64]) -> CliResult<()> {
    match phi.iter().find(|p| !(0.0..=90.0).contains(*p)) {
        Some(p) => Err(CliError::Validation(format!("φ = {p}° outside [0, 90]"))),
        None => Ok(()),
    }
}

fn check_finite(name: &str, x: f64) -> CliResult<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be finite")))
    }
}

fn sampling_spec(grid: &GridArgs) -> CliResult<SamplingSpec> {
    check_phi(&grid.phi.0)?;
    check_finite("χ", grid.chi)?;
    let to_angles = |v: &[f64]| v.iter().copied().map(Angle::deg).collect::<Vec<_>>();
    Ok(SamplingSpec::new(to_angles(&grid.theta.0), to_angles(&grid.phi.0), Angle::deg(grid.chi))?)
}

fn with_output(
    common: &CommonArgs,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> CliResult<()>,
) -> CliResult<()> {
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            body(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_rows<R: Serialize>(w: &mut dyn Write, format: Format, rows: &[R]) -> CliResult<()> {
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in rows {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ScanRow {
    theta_deg: f64,
    phi_deg: f64,
    chi_deg: f64,
    s_max: f64,
    combo_index: usize,
    violates: bool,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    phi_deg: f64,
    f: f64,
    p_cumulative: f64,
}

#[derive(Debug, Serialize)]
struct CountsRow {
    theta_deg: f64,
    phi_deg: f64,
    chi_deg: f64,
    s_max: f64,
    sigma: f64,
    classification: &'static str,
}

fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Scan { common, grid } => {
            let state = build_state(common)?;
            let spec = sampling_spec(grid)?;
            let curve = scan(&state, &spec)?;
            let mut rows = Vec::new();
            for (row, &phi_deg) in curve.rows.iter().zip(&grid.phi.0) {
                for (r, &theta_deg) in row.points.iter().zip(&grid.theta.0) {
                    rows.push(ScanRow {
                        theta_deg,
                        phi_deg,
                        chi_deg: grid.chi,
                        s_max: r.s_max,
                        combo_index: r.best_combo_index,
                        violates: r.is_violation(),
                    });
                }
            }
            with_output(common, stdout, |w| write_rows(w, common.format_or(Format::Csv), &rows))
        }
        Command::Curve { common, grid } => {
            let state = build_state(common)?;
            if grid.phi.0.first() != Some(&0.0) {
                return Err(CliError::Validation("the φ grid must start at 0 for the cumulative estimate".into()));
            }
            let spec = sampling_spec(grid)?;
            let curve = scan(&state, &spec)?;
            let rows: Vec<CurveRow> = curve
                .rows
                .iter()
                .zip(&grid.phi.0)
                .zip(&curve.cumulative)
                .map(|((row, &phi_deg), &(_, p))| CurveRow { phi_deg, f: row.f, p_cumulative: p })
                .collect();
            with_output(common, stdout, |w| write_rows(w, common.format_or(Format::Csv), &rows))?;
            let (t_max, p) = *curve.cumulative.last().expect("non-empty grid");
            writeln!(stderr, "p(t={t_max}) = {p}")?;
            Ok(())
        }
        Command::Montecarlo { common, samples } => {
            let state = build_state(common)?;
            let est = random_frame_violation_probability(&state, *samples, common.seed)?;
            with_output(common, stdout, |w| match common.format_or(Format::Json) {
                Format::Json => {
                    serde_json::to_writer(&mut *w, &est)?;
                    writeln!(w)?;
                    Ok(())
                }
                Format::Csv => write_rows(w, Format::Csv, &[est]),
            })
        }
        Command::Counts { common, theta, phi, chi, rate, duration } => {
            let state = build_state(common)?;
            check_phi(&phi.0)?;
            check_finite("χ", *chi)?;
            if rate.is_nan() || *rate <= 0.0 || duration.is_nan() || *duration <= 0.0 {
                return Err(CliError::Validation("--rate and --duration must be positive".into()));
            }
            let mut rows = Vec::new();
            for (p_idx, &phi_deg) in phi.0.iter().enumerate() {
                for (t_idx, &theta_deg) in theta.0.iter().enumerate() {
                    let rot = FrameRotation::new(Angle::deg(theta_deg), Angle::deg(phi_deg), Angle::deg(*chi));
                    let point_seed = derive_seed(common.seed, (p_idx * theta.0.len() + t_idx) as u64);
                    let est = simulate_chsh(&state, &rot, *rate, *duration, point_seed)?;
                    rows.push(CountsRow {
                        theta_deg,
                        phi_deg,
                        chi_deg: *chi,
                        s_max: est.result.s_max,
                        sigma: est.result.sigma.unwrap_or(0.0),
                        classification: classify_violation(&est)?.as_str(),
                    });
                }
            }
            with_output(common, stdout, |w| write_rows(w, common.format_or(Format::Csv), &rows))
        }
    }
}

/// Runs the CLI in-process and captures `(exit code, stdout, stderr)`.
pub fn run_captured<I, T>(args: I) -> (u8, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(args, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}
