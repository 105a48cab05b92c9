//! Command-line workflows: configuration, analysis, construction dumps,
//! ε-sweeps, exponent fits and the oracle harness.
//!
//! Every workflow is a plain function returning serializable values, so the
//! binary only parses flags, prints and maps errors to exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compatibility::{
    cc_spectrum, multiplier_p, quantifiers, sampled_quantifiers, CompatQuantifiers,
};
use crate::construction::{
    cc_branching, choose_n, grad_branching, BranchField, BranchLedger, ExponentKind,
    ReductionPath,
};
use crate::energy_eval::{field_elastic_energy, GridField};
use crate::error::TwoWellError;
use crate::fit::log_log_fit;
use crate::operator_kernel::{
    project_compatible, project_compatible_oracle, random_direction, DiffOp, Direction, Matrix,
    OpKind,
};
use crate::random::{random_mixing, random_problem, CcClass};
use crate::relaxation::{grid_search_fraction, relax, ProblemData, Regime, RelaxReport};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for unexpected failures.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for malformed configuration or arguments.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for degenerate data.
pub const EXIT_DEGENERATE: i32 = 3;
/// Exit code for an oracle tolerance breach.
pub const EXIT_BREACH: i32 = 4;

/// Default refinement ratio of the branching layers.
pub const DEFAULT_TAU: f64 = 0.4;
/// Default number of sweep points.
pub const DEFAULT_POINTS: usize = 17;
/// Default seed.
pub const DEFAULT_SEED: u64 = 42;
/// Default grid resolution for construction dumps.
pub const DEFAULT_GRID_N: usize = 256;
/// Smallest `N` entering a sweep fit.
pub const FIT_MIN_N: usize = 4;
/// Minimum number of records for a fit.
pub const FIT_MIN_RECORDS: usize = 5;

/// CLI failure with an associated exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration or arguments.
    #[error("configuration error: {0}")]
    Config(String),
    /// Data for which the requested workflow is undefined.
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// Oracle tolerance breached.
    #[error("oracle breach: {0}")]
    Breach(String),
    /// File system failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// CSV failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// JSON failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    /// Model failure.
    #[error(transparent)]
    Model(#[from] TwoWellError),
}

impl CliError {
    /// Process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Json(_) => EXIT_CONFIG,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Breach(_) => EXIT_BREACH,
            CliError::Io(_) | CliError::Csv(_) => EXIT_FAILURE,
            CliError::Model(e) => match e {
                TwoWellError::DimensionMismatch { .. }
                | TwoWellError::DimensionTooSmall(_)
                | TwoWellError::UnsupportedDimension { .. }
                | TwoWellError::NotSymmetric(_)
                | TwoWellError::NonFinite
                | TwoWellError::InvalidArgument(_)
                | TwoWellError::Aspect { .. } => EXIT_CONFIG,
                TwoWellError::DegenerateWells(_)
                | TwoWellError::Equicompatible(_)
                | TwoWellError::PureRegime(_) => EXIT_DEGENERATE,
                TwoWellError::Oracle(_) => EXIT_BREACH,
                _ => EXIT_FAILURE,
            },
        }
    }
}

/// Result alias for CLI workflows.
pub type CliResult<T> = std::result::Result<T, CliError>;

/// JSON run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Operator: `curl`, `div` or `curlcurl`.
    pub op: OpKind,
    /// Dimension.
    pub d: usize,
    /// Boundary datum.
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    /// First well.
    pub a0: Vec<Vec<f64>>,
    /// Second well.
    pub a1: Vec<Vec<f64>>,
    /// Refinement ratio in `(1/4, 1/2)`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Smallest sweep `ε`; defaults by predicted exponent.
    #[serde(default)]
    pub eps_start: Option<f64>,
    /// Largest sweep `ε`.
    #[serde(default)]
    pub eps_end: Option<f64>,
    /// Number of sweep points.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Seed for randomized workflows.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Grid resolution for dumps.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_points() -> usize {
    DEFAULT_POINTS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}

impl Config {
    /// Parses and validates JSON text.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a JSON file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Config for in-memory data.
    pub fn from_problem(data: &ProblemData<f64>) -> Self {
        Self {
            op: data.op.kind,
            d: data.op.d,
            f: data.f.rows(),
            a0: data.a0.rows(),
            a1: data.a1.rows(),
            tau: DEFAULT_TAU,
            eps_start: None,
            eps_end: None,
            points: DEFAULT_POINTS,
            seed: DEFAULT_SEED,
            grid_n: DEFAULT_GRID_N,
        }
    }

    fn validate(&self) -> CliResult<()> {
        for (name, m) in [("F", &self.f), ("a0", &self.a0), ("a1", &self.a1)] {
            if m.len() != self.d || m.iter().any(|r| r.len() != self.d) {
                return Err(CliError::Config(format!("{name} must be {0}x{0}", self.d)));
            }
        }
        if !(self.tau > 0.25 && self.tau < 0.5) {
            return Err(CliError::Config(format!("tau = {} must lie in (1/4, 1/2)", self.tau)));
        }
        for e in [self.eps_start, self.eps_end].into_iter().flatten() {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Config(format!("epsilon {e} must lie in (0, 1)")));
            }
        }
        if let (Some(a), Some(b)) = (self.eps_start, self.eps_end) {
            if a >= b {
                return Err(CliError::Config("eps_start must be below eps_end".into()));
            }
        }
        if self.points < 2 {
            return Err(CliError::Config("points must be at least 2".into()));
        }
        Ok(())
    }

    /// Operator and validated problem data.
    pub fn problem(&self) -> CliResult<ProblemData<f64>> {
        let op = DiffOp::new(self.op, self.d).map_err(|e| CliError::Config(e.to_string()))?;
        let m = |r: &Vec<Vec<f64>>| Matrix::from_f64_rows(r).map_err(|e| CliError::Config(e.to_string()));
        match ProblemData::new(op, m(&self.f)?, m(&self.a0)?, m(&self.a1)?) {
            Ok(d) => Ok(d),
            Err(e @ TwoWellError::DegenerateWells(_)) => Err(CliError::Degenerate(e.to_string())),
            Err(e) => Err(CliError::Config(e.to_string())),
        }
    }
}

/// Predicted energy scaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    /// Pure regime: `E_ε − E₀ = 0`.
    #[serde(rename = "trivial")]
    Trivial,
    /// `ε^{2/3}`.
    #[serde(rename = "2/3")]
    TwoThirds,
    /// `ε^{4/5}`.
    #[serde(rename = "4/5")]
    FourFifths,
    /// Equicompatible data, no prediction.
    #[serde(rename = "open")]
    Open,
}

impl Prediction {
    /// Label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Prediction::Trivial => "trivial",
            Prediction::TwoThirds => "2/3",
            Prediction::FourFifths => "4/5",
            Prediction::Open => "open",
        }
    }

    /// Exponent value, when defined.
    pub fn value(self) -> Option<f64> {
        match self {
            Prediction::TwoThirds => Some(2.0 / 3.0),
            Prediction::FourFifths => Some(0.8),
            _ => None,
        }
    }
}

/// Predicted exponent from the relaxation report.
pub fn predict(data: &ProblemData<f64>, report: &RelaxReport<f64>) -> Prediction {
    if report.regime != Regime::Mixing {
        Prediction::Trivial
    } else if report.quantifiers.equicompatible {
        Prediction::Open
    } else if data.op.kind == OpKind::CurlCurl && cc_spectrum(&data.a()).rank_one {
        Prediction::FourFifths
    } else {
        Prediction::TwoThirds
    }
}

/// Output of `analyze`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeReport {
    /// Operator.
    pub op: OpKind,
    /// Dimension.
    pub d: usize,
    /// Compatibility quantifiers of `a = a₁ − a₀`.
    pub compat: CompatQuantifiers<f64>,
    /// Relaxation summary.
    pub relax: RelaxReport<f64>,
    /// Predicted exponent label.
    pub predicted_exponent: Prediction,
    /// Predicted exponent value.
    pub predicted_value: Option<f64>,
    /// Construction path used by `sweep` and `construct`.
    pub construction: Option<ReductionPath>,
}

fn construction_plan(data: &ProblemData<f64>) -> (ReductionPath, ExponentKind) {
    match data.op.kind {
        OpKind::CurlCurl if cc_spectrum(&data.a()).rank_one => {
            (ReductionPath::ChanConti, ExponentKind::FourFifths)
        }
        OpKind::CurlCurl => (ReductionPath::GradSym, ExponentKind::TwoThirds),
        _ => (ReductionPath::Grad, ExponentKind::TwoThirds),
    }
}

/// Compatibility and relaxation analysis.
pub fn analyze(cfg: &Config) -> CliResult<AnalyzeReport> {
    let data = cfg.problem()?;
    let rep = relax(&data)?;
    let pred = predict(&data, &rep);
    let construction = (data.op.d == 2 && matches!(pred, Prediction::TwoThirds | Prediction::FourFifths))
        .then(|| construction_plan(&data).0);
    Ok(AnalyzeReport {
        op: data.op.kind,
        d: data.op.d,
        compat: rep.quantifiers,
        relax: rep,
        predicted_exponent: pred,
        predicted_value: pred.value(),
        construction,
    })
}

/// Builds the branching field with `n` oscillations.
pub fn build_field(data: &ProblemData<f64>, n: usize, tau: f64) -> CliResult<BranchField<f64>> {
    let rep = relax(data)?;
    if rep.regime != Regime::Mixing {
        return Err(CliError::Model(TwoWellError::PureRegime("constant fields are optimal")));
    }
    if rep.quantifiers.equicompatible {
        return Err(CliError::Model(TwoWellError::Equicompatible("no branching construction")));
    }
    let xi = rep.lamination.first();
    let field = match construction_plan(data).0 {
        ReductionPath::ChanConti => cc_branching(data, xi, n, tau)?,
        _ => grad_branching(data, xi, n, tau)?,
    };
    Ok(field)
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Interfacial energy weight.
    pub epsilon: f64,
    /// Oscillations in the coarsest layer (0 in the Pure regime).
    #[serde(rename = "N")]
    pub n: usize,
    /// `E_elastic + ε·E_surface`.
    #[serde(rename = "E_total")]
    pub e_total: f64,
    /// Elastic energy against the original wells.
    #[serde(rename = "E_elastic")]
    pub e_elastic: f64,
    /// Total variation of the phase (not multiplied by `ε`).
    #[serde(rename = "E_surface")]
    pub e_surface: f64,
    /// Excess energy density times `|Ω| = 1`.
    #[serde(rename = "E0")]
    pub e0: f64,
    /// `E_total − E0`, evaluated from the split ledger.
    pub corrected: f64,
    /// Semicolon-separated tags.
    pub flags: String,
}

/// Least-squares fit of `log corrected` against `log ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Fitted exponent.
    pub slope: f64,
    /// Intercept of the log-log line.
    pub intercept: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// `[ε_min, ε_max]` of the fitted records.
    pub window: [f64; 2],
    /// Number of fitted records.
    pub n: usize,
}

/// Sweep result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutput {
    /// Records in increasing `ε`.
    pub records: Vec<SweepRecord>,
    /// Fit over records with `N ≥ 4`.
    pub fit: Option<FitResult>,
    /// Explanation when the fit is skipped.
    pub note: Option<String>,
    /// Predicted exponent.
    pub predicted: Prediction,
}

/// Geometric grid of `points` values from `start` to `end`.
pub fn eps_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let r = (end / start).ln();
    (0..points)
        .map(|k| {
            if k + 1 == points {
                end
            } else {
                start * (r * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

fn ledger_record(eps: f64, n: usize, l: &BranchLedger<f64>, path: ReductionPath) -> SweepRecord {
    let mut flags = vec![path_tag(path)];
    if n < FIT_MIN_N {
        flags.push("coarse");
    }
    SweepRecord {
        epsilon: eps,
        n,
        e_total: l.total(eps),
        e_elastic: l.direct,
        e_surface: l.surface,
        e0: l.e0,
        corrected: l.corrected(eps),
        flags: flags.join(";"),
    }
}

fn path_tag(path: ReductionPath) -> &'static str {
    match path {
        ReductionPath::Grad => "grad",
        ReductionPath::GradSym => "grad_sym",
        ReductionPath::ChanConti => "chan_conti",
    }
}

/// ε-sweep along the analytic ledger.
pub fn sweep(cfg: &Config) -> CliResult<SweepOutput> {
    let data = cfg.problem()?;
    let rep = relax(&data)?;
    let pred = predict(&data, &rep);
    let (lo_default, hi_default) = match pred {
        Prediction::FourFifths => (1e-8, 1e-3),
        _ => (1e-7, 1e-3),
    };
    let eps = eps_grid(
        cfg.eps_start.unwrap_or(lo_default),
        cfg.eps_end.unwrap_or(hi_default),
        cfg.points,
    );
    match pred {
        Prediction::Trivial => {
            let e0 = rep.e0_density;
            let records = eps
                .iter()
                .map(|&e| SweepRecord {
                    epsilon: e,
                    n: 0,
                    e_total: e0,
                    e_elastic: e0,
                    e_surface: 0.0,
                    e0,
                    corrected: 0.0,
                    flags: "pure".into(),
                })
                .collect();
            return Ok(SweepOutput {
                records,
                fit: None,
                note: Some(format!(
                    "{} regime: constant fields give the trivial scaling, fit skipped",
                    rep.regime.name()
                )),
                predicted: pred,
            });
        }
        Prediction::Open => {
            return Err(CliError::Degenerate(
                "equicompatible well difference: no construction, scaling open".into(),
            ));
        }
        _ => {}
    }
    if data.op.d != 2 {
        return Err(CliError::Model(TwoWellError::UnsupportedDimension {
            op: "construction",
            d: data.op.d,
        }));
    }
    let (path, kind) = construction_plan(&data);
    let ns: Vec<usize> = eps.iter().map(|&e| choose_n(e, kind)).collect();
    let mut unique = ns.clone();
    unique.sort_unstable();
    unique.dedup();
    let ledgers: BTreeMap<usize, BranchLedger<f64>> = unique
        .par_iter()
        .map(|&n| build_field(&data, n, cfg.tau).map(|f| (n, f.ledger)))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .collect();
    let records: Vec<SweepRecord> = eps
        .iter()
        .zip(&ns)
        .map(|(&e, &n)| ledger_record(e, n, &ledgers[&n], path))
        .collect();
    let (fit, note) = match fit_records(&records, None, FIT_MIN_N) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SweepOutput { records, fit, note, predicted: pred })
}

/// Fits records with `N ≥ min_n`, positive `corrected` and `ε` in `window`.
pub fn fit_records(
    records: &[SweepRecord],
    window: Option<(f64, f64)>,
    min_n: usize,
) -> CliResult<FitResult> {
    let sel: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.n >= min_n && r.corrected > 0.0)
        .filter(|r| window.is_none_or(|(a, b)| r.epsilon >= a && r.epsilon <= b))
        .collect();
    if sel.len() < FIT_MIN_RECORDS {
        return Err(CliError::Config(format!(
            "fit window holds {} records, need at least {FIT_MIN_RECORDS}",
            sel.len()
        )));
    }
    let xs: Vec<f64> = sel.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = sel.iter().map(|r| r.corrected).collect();
    let f = log_log_fit(&xs, &ys)?;
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        slope_stderr: f.slope_stderr,
        window: [lo, hi],
        n: f.n,
    })
}

/// Formats like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let s = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let strip = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..P).contains(&exp) {
        let m = strip(format!("{}.{}", &digits[..1], &digits[1..]));
        let es = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{es}{:02}", exp.abs())
    } else if exp >= 0 {
        let e = exp as usize;
        let body = strip(format!("{}.{}", &digits[..=e], &digits[e + 1..]));
        format!("{sign}{body}")
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        let body = strip(format!("0.{zeros}{digits}"));
        format!("{sign}{body}")
    }
}

/// CSV header of sweep files.
pub const SWEEP_HEADER: [&str; 8] =
    ["epsilon", "N", "E_total", "E_elastic", "E_surface", "E0", "corrected", "flags"];

/// Writes sweep records as CSV with LF line endings.
pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            fmt_g17(r.epsilon),
            r.n.to_string(),
            fmt_g17(r.e_total),
            fmt_g17(r.e_elastic),
            fmt_g17(r.e_surface),
            fmt_g17(r.e0),
            fmt_g17(r.corrected),
            r.flags.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads sweep records from CSV.
pub fn read_sweep_csv(path: &Path) -> CliResult<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(CliError::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Fits a sweep CSV file.
pub fn fit_csv(path: &Path, window: Option<(f64, f64)>, min_n: usize) -> CliResult<FitResult> {
    fit_records(&read_sweep_csv(path)?, window, min_n)
}

/// Summary emitted by `construct`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructReport {
    /// Oscillations in layer 0.
    #[serde(rename = "N")]
    pub n: usize,
    /// Refinement ratio.
    pub tau: f64,
    /// Last interior layer.
    pub j0: usize,
    /// Construction path.
    pub path: ReductionPath,
    /// Volume fraction.
    pub theta: f64,
    /// Lamination direction in the original frame.
    pub direction: [f64; 2],
    /// Analytic ledger.
    pub ledger: BranchLedger<f64>,
    /// Grid resolution of the dump.
    pub grid_n: usize,
}

/// Builds a field and writes `x1,x2,v1,v2,phase` at the grid nodes.
///
/// Points and displacements are in the original frame; the sampled square
/// is the rotated canonical square.
pub fn construct<W: Write>(
    cfg: &Config,
    n: usize,
    grid_n: usize,
    out: W,
) -> CliResult<ConstructReport> {
    if grid_n == 0 {
        return Err(CliError::Config("grid_n must be positive".into()));
    }
    let data = cfg.problem()?;
    let field = build_field(&data, n, cfg.tau)?;
    let h = 1.0 / grid_n as f64;
    let rows: Vec<Vec<[String; 5]>> = (0..=grid_n)
        .into_par_iter()
        .map(|j| {
            (0..=grid_n)
                .map(|i| {
                    let y = [i as f64 * h, j as f64 * h];
                    let x = field.canonical.back_point(y);
                    let v = field.canonical.back_displacement(field.displacement(y));
                    [fmt_g17(x[0] + 0.0), fmt_g17(x[1] + 0.0), fmt_g17(v[0] + 0.0), fmt_g17(v[1] + 0.0), field.phase(y).to_string()]
                })
                .collect()
        })
        .collect();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["x1", "x2", "v1", "v2", "phase"])?;
    for row in rows {
        for rec in row {
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(ConstructReport {
        n,
        tau: field.tau,
        j0: field.j0,
        path: field.canonical.path,
        theta: field.theta,
        direction: field.canonical.direction(),
        ledger: field.ledger,
        grid_n,
    })
}

/// One oracle comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleCheck {
    /// Quantity checked.
    pub name: String,
    /// Number of samples.
    pub cases: usize,
    /// Largest error.
    pub max_err: f64,
    /// Tolerance.
    pub tol: f64,
    /// `max_err ≤ tol`.
    pub pass: bool,
}

impl OracleCheck {
    fn new(name: impl Into<String>, errs: &[f64], tol: f64) -> Self {
        let max_err = errs.iter().cloned().fold(0.0, f64::max);
        let nan = errs.iter().any(|e| !e.is_finite());
        Self { name: name.into(), cases: errs.len(), max_err, tol, pass: !nan && max_err <= tol }
    }
}

/// Oracle run settings.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Seed.
    pub seed: u64,
    /// Random cases per operator.
    pub cases: usize,
    /// Sampled directions.
    pub directions: usize,
    /// Grid-search points for `θ̃`.
    pub theta_points: usize,
    /// Grid resolution of the quadrature oracle.
    pub grid_n: usize,
    /// Offset added to the closed-form `h` (fault injection).
    pub perturb_h: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            cases: 200,
            directions: 4096,
            theta_points: 1_000_000,
            grid_n: 512,
            perturb_h: 0.0,
        }
    }
}

/// Oracle report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    /// Settings used.
    pub options: OracleOptions,
    /// All comparisons.
    pub checks: Vec<OracleCheck>,
    /// All checks passed.
    pub pass: bool,
}

/// Tolerance for closed form against sampling and grid search.
pub const ORACLE_TOL: f64 = 1e-6;
/// Tolerance for projections and vanishing multipliers.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for ledger against grid quadrature.
pub const QUADRATURE_TOL: f64 = 2e-2;

struct CaseErrs {
    h: f64,
    g: f64,
    theta: f64,
    e0: f64,
    proj: f64,
}

fn oracle_case(data: &ProblemData<f64>, opts: &OracleOptions, seed: u64) -> CliResult<CaseErrs> {
    let op = data.op;
    let a = data.a();
    let n2 = a.norm_sq();
    let q = quantifiers(&op, &a)?;
    let h_closed = q.h + opts.perturb_h;
    let s = sampled_quantifiers(&op, &a, opts.directions)?;
    let rep = relax(data)?;
    let (t_grid, e_grid) = grid_search_fraction(data, s.h, opts.theta_points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut proj = 0.0f64;
    for _ in 0..16 {
        let xi: Direction<f64> = random_direction(op.d, &mut rng);
        let p = project_compatible(&op, &xi, &a)?;
        let o = project_compatible_oracle(&op, &xi, &a)?;
        proj = proj.max((&p - &o).norm() / a.norm());
    }
    Ok(CaseErrs {
        h: (h_closed - s.h).abs() / n2,
        g: (q.g - s.g).abs() / n2,
        theta: (rep.theta_tilde - t_grid).abs(),
        e0: (rep.e0_density - e_grid).abs() / rep.e0_density.max(n2),
        proj,
    })
}

fn quadrature_check(data: &ProblemData<f64>, grid_n: usize) -> CliResult<f64> {
    let field = build_field(data, 2, DEFAULT_TAU)?;
    let grid = GridField::from_branch(&field, grid_n)?;
    let e = field_elastic_energy(&field, &grid)?;
    Ok((e.energy - field.ledger.direct).abs() / field.ledger.direct)
}

/// Runs all oracles; `config` adds checks on user data.
pub fn run_oracle(opts: &OracleOptions, config: Option<&Config>) -> CliResult<OracleReport> {
    let mut checks = Vec::new();
    let ops = [DiffOp::curl(2), DiffOp::div(2), DiffOp::curl_curl()];
    for (k, op) in ops.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
        let cases: Vec<(ProblemData<f64>, u64)> = (0..opts.cases)
            .map(|i| {
                random_problem(&mut rng, *op)
                    .map(|d| (d, opts.seed.wrapping_mul(1000).wrapping_add((k * opts.cases + i) as u64)))
            })
            .collect::<Result<_, _>>()?;
        let errs: Vec<CaseErrs> = cases
            .par_iter()
            .map(|(d, s)| oracle_case(d, opts, *s))
            .collect::<CliResult<_>>()?;
        let name = op.kind.name();
        let col = |f: fn(&CaseErrs) -> f64| errs.iter().map(f).collect::<Vec<_>>();
        checks.push(OracleCheck::new(format!("{name}: h vs sphere sampling"), &col(|e| e.h), ORACLE_TOL));
        checks.push(OracleCheck::new(format!("{name}: g vs sphere sampling"), &col(|e| e.g), ORACLE_TOL));
        checks.push(OracleCheck::new(format!("{name}: theta vs grid search"), &col(|e| e.theta), ORACLE_TOL));
        checks.push(OracleCheck::new(format!("{name}: E0 vs grid search"), &col(|e| e.e0), ORACLE_TOL));
        checks.push(OracleCheck::new(format!("{name}: projection vs nullspace"), &col(|e| e.proj), IDENTITY_TOL));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let quad_cases = [
        random_mixing(&mut rng, DiffOp::curl(2), None)?,
        random_mixing(&mut rng, DiffOp::curl_curl(), Some(CcClass::RankOne))?,
    ];
    let errs: Vec<f64> = quad_cases
        .iter()
        .map(|d| quadrature_check(d, opts.grid_n))
        .collect::<CliResult<_>>()?;
    checks.push(OracleCheck::new("ledger vs grid quadrature", &errs, QUADRATURE_TOL));
    if let Some(cfg) = config {
        let data = cfg.problem()?;
        let a = data.a();
        let q = quantifiers(&data.op, &a)?;
        let n2 = a.norm_sq();
        if q.equicompatible {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let errs: Vec<f64> = (0..opts.directions)
                .map(|_| {
                    let xi: Direction<f64> = random_direction(data.op.d, &mut rng);
                    multiplier_p(&data.op, &a, &xi).map(|p| p / n2)
                })
                .collect::<Result<_, _>>()?;
            checks.push(OracleCheck::new("config: p vanishes identically", &errs, IDENTITY_TOL));
        } else {
            let e = oracle_case(&data, opts, cfg.seed)?;
            checks.push(OracleCheck::new("config: h vs sphere sampling", &[e.h], ORACLE_TOL));
            checks.push(OracleCheck::new("config: g vs sphere sampling", &[e.g], ORACLE_TOL));
            checks.push(OracleCheck::new("config: theta vs grid search", &[e.theta], ORACLE_TOL));
            checks.push(OracleCheck::new("config: E0 vs grid search", &[e.e0], ORACLE_TOL));
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(OracleReport { options: *opts, checks, pass })
}
