//! Command-line front end: argument parsing, dispatch and serialization.
//!
//! Every JSON document has the form `{"version", "config", "result"}` where
//! `config` is the fully resolved invocation. Exit codes: 0 success, 1 failed
//! verification, 2 unreadable input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::branch_systems::model::ModelSpec;
use crate::branch_systems::{BranchSystem, Potential};
use crate::error::Error;
use crate::measures::{digit_frequency_dimension, feasible, FrequencyMode};
use crate::oracle::{sample_orbit, verify, OracleReport, Recipe, Suite};
use crate::spectrum::{flat_bounds, moment_range, spectrum_curve, CurveOptions, LegendreOptions, SpectrumPoint};
use crate::thermo::{pressure, pressure_root, s_infinity, PressureOptions, RootMethod, RootOptions, Truncation, DEFAULT_BUDGET};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "thermospec", version, about = "Pressure, s_inf and multifractal spectra of expanding interval maps")]
pub struct RunConfig {
    /// Worker threads for word enumeration.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Cap on enumerated words.
    #[arg(long, global = true, env = "THERMOSPEC_BUDGET", default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Periodic-sum pressure P(φ - t ln|T'|).
    Pressure(PressureArgs),
    /// Critical exponent s_inf.
    Sinf(SinfArgs),
    /// Root of t ↦ P(-t ln|T'|).
    Root(RootArgs),
    /// Spectrum curve as CSV.
    Spectrum(SpectrumArgs),
    /// Flat-interval ends for the indicator of the first branch.
    FlatBounds(FlatBoundsArgs),
    /// Dimension of a digit-frequency level set.
    FreqDim(FreqDimArgs),
    /// Moment-target feasibility at a truncation.
    Feasible(FeasibleArgs),
    /// Runs the oracle suites.
    Verify(VerifyArgs),
    /// Deterministic orbit with prescribed digit frequencies.
    Sample(SampleArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct PressureArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Potential file; zero when omitted.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long)]
    pub t: f64,
    /// Number of branches; the full alphabet through tail series when omitted.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SinfArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct RootArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 2.0)]
    pub hi: f64,
    /// Enumerate words over the first q branches.
    #[arg(long)]
    pub q: Option<usize>,
    /// Word length (enumeration) or nesting depth (tail series).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub potential: PathBuf,
    /// Defaults to the lower end of the moment range.
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Defaults to the upper end of the moment range.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(1..))]
    pub points: u64,
    /// Adds rows at α_*, α^* and α̃.
    #[arg(long)]
    pub transitions: bool,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FlatBoundsArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Full,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FreqDimArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated frequencies of the branches in order.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub freqs: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
}

/// Targets file for `feasible`: `{"potentials": [...], "gamma": [...]}`.
#[derive(Clone, Debug, Deserialize)]
struct Targets {
    potentials: Vec<serde_json::Value>,
    gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FeasibleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gamma: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long)]
    pub q: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteArg {
    All,
    Thermo,
    Spectrum,
    Measures,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    /// JSON instead of a text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Target frequencies of the branches in order.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "word", required_unless_present = "word")]
    pub freqs: Option<Vec<f64>>,
    /// Word repeated periodically.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub word: Option<Vec<u64>>,
    #[arg(long)]
    pub horizon: usize,
    /// Potential files whose running averages are reported.
    #[arg(long)]
    pub potential: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub config: RunConfig,
    pub result: T,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub status: i32,
    pub message: String,
    /// Partial result, when one is defined.
    pub partial: Option<serde_json::Value>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidModel(_)
            | Error::InvalidWord(_)
            | Error::InvalidMeasure(_)
            | Error::InfeasibleModel(_)
            | Error::TruncationTooLarge { .. }
            | Error::Unsupported(_)
            | Error::Precondition(_) => 2,
            _ => 3,
        };
        let partial = match &e {
            Error::BudgetExceeded { partial, .. } => serde_json::to_value(partial.as_ref()).ok(),
            _ => None,
        };
        Failure {
            status,
            message: e.to_string(),
            partial,
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure {
        status: 2,
        message,
        partial: None,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<BranchSystem, Failure> {
    Ok(ModelSpec::from_json(&read(path)?)?.build()?)
}

fn load_potential(path: &Path) -> Result<Potential, Failure> {
    Ok(Potential::from_json(&read(path)?)?)
}

impl RunConfig {
    fn pressure_options(&self) -> PressureOptions {
        PressureOptions {
            budget: self.budget,
            workers: self.workers as usize,
        }
    }

    fn envelope<T: Serialize>(&self, result: T) -> Result<String, Failure> {
        let env = Envelope {
            version: VERSION.to_string(),
            config: self.clone(),
            result,
        };
        serde_json::to_string_pretty(&env)
            .map(|s| s + "\n")
            .map_err(|e| Failure {
                status: 3,
                message: format!("serialization: {e}"),
                partial: None,
            })
    }

    /// Executes the command and returns what goes to stdout plus the exit
    /// status (0, or 1 for a failed verification).
    pub fn execute(&self) -> Result<(String, i32), Failure> {
        let popts = self.pressure_options();
        let ok = |s: String| Ok((s, 0));
        match &self.command {
            Command::Pressure(a) => {
                let sys = load_model(&a.model)?;
                let phi = match &a.potential {
                    Some(p) => load_potential(p)?,
                    None => Potential::zero(),
                };
                let truncation = a.q.map_or(Truncation::Countable, Truncation::Finite);
                ok(self.envelope(pressure(&sys, &phi, a.t, truncation, a.n, &popts)?)?)
            }
            Command::Sinf(a) => {
                let sys = load_model(&a.model)?;
                ok(self.envelope(s_infinity(&sys, a.tol)?)?)
            }
            Command::Root(a) => {
                let sys = load_model(&a.model)?;
                let method = match (a.q, a.n) {
                    (Some(q), n) => Some(RootMethod::Enumerated { q, n: n.unwrap_or(3) }),
                    (None, Some(n)) if !sys.is_linear() && !sys.is_finite() => Some(RootMethod::Countable { n }),
                    (None, Some(n)) if !sys.is_linear() => Some(RootMethod::Enumerated {
                        q: sys.branch_count().unwrap_or(1),
                        n,
                    }),
                    _ => None,
                };
                let opts = RootOptions {
                    method,
                    tol: a.tol,
                    pressure: popts,
                };
                ok(self.envelope(pressure_root(&sys, [a.lo, a.hi], &opts)?)?)
            }
            Command::Spectrum(a) => {
                let sys = load_model(&a.model)?;
                let phi = load_potential(&a.potential)?;
                let (lo, hi) = match (a.alpha_min, a.alpha_max) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    (lo, hi) => {
                        let (rl, rh) = moment_range(&sys, &phi)?;
                        (lo.unwrap_or(rl), hi.unwrap_or(rh))
                    }
                };
                if !(lo <= hi) {
                    return Err(input_error(format!("alpha-min {lo} exceeds alpha-max {hi}")));
                }
                let n = a.points as usize;
                let grid: Vec<f64> = if n == 1 {
                    vec![lo]
                } else {
                    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
                };
                let opts = CurveOptions {
                    legendre: LegendreOptions {
                        pressure: popts,
                        ..Default::default()
                    },
                    transitions: a.transitions,
                };
                let rows = spectrum_curve(&sys, &phi, &grid, &opts)?;
                let body = match a.format {
                    Format::Csv => curve_csv(&rows)?,
                    Format::Json => self.envelope(&rows)?,
                };
                match &a.out {
                    None => ok(body),
                    Some(path) => {
                        std::fs::write(path, &body).map_err(|e| Failure {
                            status: 3,
                            message: format!("{}: {e}", path.display()),
                            partial: None,
                        })?;
                        #[derive(Serialize)]
                        struct Written<'a> {
                            rows: usize,
                            out: &'a Path,
                        }
                        ok(self.envelope(Written { rows: rows.len(), out: path })?)
                    }
                }
            }
            Command::FlatBounds(a) => {
                let sys = load_model(&a.model)?;
                let first = sys.label_at(0).ok_or_else(|| input_error("model has no branches".into()))?;
                ok(self.envelope(flat_bounds(&sys, &Potential::indicator(first))?)?)
            }
            Command::FreqDim(a) => {
                let sys = load_model(&a.model)?;
                let mode = match a.mode {
                    ModeArg::Full => FrequencyMode::Full,
                    ModeArg::Partial => FrequencyMode::Partial,
                };
                ok(self.envelope(digit_frequency_dimension(&sys, &a.freqs, mode)?)?)
            }
            Command::Feasible(a) => {
                let sys = load_model(&a.model)?;
                let targets: Targets = serde_json::from_str(&read(&a.gamma)?)
                    .map_err(|e| input_error(format!("{}: {e}", a.gamma.display())))?;
                let pots = targets
                    .potentials
                    .iter()
                    .map(|v| Potential::from_json(&v.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                ok(self.envelope(feasible(&sys, &pots, &targets.gamma, a.eps, a.q, a.n)?)?)
            }
            Command::Verify(a) => {
                let suite = match a.suite {
                    SuiteArg::All => Suite::All,
                    SuiteArg::Thermo => Suite::Thermo,
                    SuiteArg::Spectrum => Suite::Spectrum,
                    SuiteArg::Measures => Suite::Measures,
                };
                let reports = verify(suite, &popts);
                let status = if reports.iter().all(|r| r.pass) { 0 } else { 1 };
                let body = if a.json { self.envelope(&reports)? } else { report_table(&reports) };
                Ok((body, status))
            }
            Command::Sample(a) => {
                let sys = load_model(&a.model)?;
                let recipe = match (&a.freqs, &a.word) {
                    (Some(f), _) => Recipe::Frequencies(f.clone()),
                    (None, Some(w)) => Recipe::Periodic(w.clone()),
                    (None, None) => return Err(input_error("need --freqs or --word".into())),
                };
                let pots = a.potential.iter().map(|p| load_potential(p)).collect::<Result<Vec<_>, _>>()?;
                ok(self.envelope(sample_orbit(&sys, &recipe, a.horizon, &pots)?)?)
            }
        }
    }
}

fn csv_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Columns `alpha, dim, t, q, regime, resid1, resid2` plus a `note` column;
/// missing values are empty fields.
pub fn curve_csv(rows: &[SpectrumPoint]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure {
        status: 3,
        message: format!("csv: {e}"),
        partial: None,
    };
    w.write_record(["alpha", "dim", "t", "q", "regime", "resid1", "resid2", "note"]).map_err(io)?;
    for r in rows {
        let [r1, r2] = r.residuals.map_or([None, None], |[a, b]| [Some(a), Some(b)]);
        w.write_record([
            csv_f64(Some(r.alpha)),
            csv_f64(r.dim),
            csv_f64(r.t),
            csv_f64(r.q),
            r.regime.as_str().to_string(),
            csv_f64(r1),
            csv_f64(r2),
            r.note.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| io(e.into_error().into()))?;
    String::from_utf8(bytes).map_err(|e| input_error(e.to_string()))
}

fn report_table(reports: &[OracleReport]) -> String {
    let mut s = String::new();
    let width = reports.iter().map(|r| r.quantity.chars().count()).max().unwrap_or(8);
    for r in reports {
        s += &format!(
            "{} {:<width$} oracle={:<24} module={:<24} diff={:.3e} tol={:.1e}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.quantity,
            r.oracle,
            r.module,
            r.difference,
            r.tolerance,
        );
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    s += &format!("{} checks, {failed} failed\n", reports.len());
    s
}

/// Parses arguments, runs, and writes to the given streams. Returns the
/// exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return status;
        }
    };
    match config.execute() {
        Ok((body, status)) => {
            let _ = stdout.write_all(body.as_bytes());
            status
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            if let Some(p) = f.partial {
                if let Ok(s) = config.envelope(serde_json::json!({ "error": f.message, "partial": p })) {
                    let _ = stdout.write_all(s.as_bytes());
                }
            }
            f.status
        }
    }
}
