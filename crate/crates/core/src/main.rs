//! `twowell` command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use twowell::construction::{choose_n, ExponentKind};
use twowell::scaling_cli::{
    analyze, construct, fit_csv, run_oracle, sweep, write_sweep_csv, CliError, CliResult, Config,
    OracleOptions, Prediction, EXIT_BREACH, EXIT_CONFIG, FIT_MIN_N,
};

/// Energy scaling of incompatible two-well problems.
#[derive(Debug, Parser)]
#[command(name = "twowell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compatibility, relaxation and predicted exponent as JSON.
    Analyze {
        /// JSON configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dumps a branching field as CSV and prints its ledger as JSON.
    Construct {
        /// JSON configuration.
        #[arg(long)]
        config: PathBuf,
        /// CSV output file.
        #[arg(long)]
        out: PathBuf,
        /// Grid resolution of the dump.
        #[arg(long)]
        grid_n: Option<usize>,
        /// Refinement ratio.
        #[arg(long)]
        tau: Option<f64>,
        /// Oscillations in the coarsest layer.
        #[arg(long, conflicts_with = "epsilon")]
        n: Option<usize>,
        /// Choose `N` from this interfacial weight.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// ε-sweep along the analytic ledger; CSV out, fit as JSON on stdout.
    Sweep {
        /// JSON configuration.
        #[arg(long)]
        config: PathBuf,
        /// CSV output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refinement ratio.
        #[arg(long)]
        tau: Option<f64>,
        /// Seed recorded in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Log-log fit of a sweep CSV.
    Fit {
        /// Sweep CSV.
        csv: PathBuf,
        /// Smallest ε in the window.
        #[arg(long)]
        eps_min: Option<f64>,
        /// Largest ε in the window.
        #[arg(long)]
        eps_max: Option<f64>,
        /// Smallest `N` in the window.
        #[arg(long, default_value_t = FIT_MIN_N)]
        min_n: usize,
    },
    /// Diffs closed forms against independent oracles.
    Oracle {
        /// Optional configuration with extra data to check.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed of the random cases.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random cases per operator.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Grid resolution of the quadrature oracle.
        #[arg(long)]
        grid_n: Option<usize>,
        /// Adds this offset to the closed-form `h`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        perturb_h: f64,
    },
}

fn writer(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Analyze { config, out } => {
            let cfg = Config::load(&config)?;
            emit_json(&analyze(&cfg)?, out.as_deref())?;
        }
        Command::Construct { config, out, grid_n, tau, n, epsilon } => {
            let mut cfg = Config::load(&config)?;
            if let Some(t) = tau {
                cfg.tau = t;
            }
            let n = match (n, epsilon) {
                (Some(n), _) => n,
                (None, Some(e)) => {
                    if !(e > 0.0 && e < 1.0) {
                        return Err(CliError::Config(format!("epsilon {e} must lie in (0, 1)")));
                    }
                    let kind = match analyze(&cfg)?.predicted_exponent {
                        Prediction::FourFifths => ExponentKind::FourFifths,
                        _ => ExponentKind::TwoThirds,
                    };
                    choose_n(e, kind)
                }
                (None, None) => 4,
            };
            let file = BufWriter::new(File::create(&out)?);
            let report = construct(&cfg, n, grid_n.unwrap_or(cfg.grid_n), file)?;
            emit_json(&report, None)?;
        }
        Command::Sweep { config, out, tau, seed } => {
            let mut cfg = Config::load(&config)?;
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let res = sweep(&cfg)?;
            match &out {
                Some(p) => {
                    write_sweep_csv(BufWriter::new(File::create(p)?), &res.records)?;
                    #[derive(Serialize)]
                    struct Summary<'a> {
                        predicted: Prediction,
                        fit: &'a Option<twowell::scaling_cli::FitResult>,
                        note: &'a Option<String>,
                    }
                    emit_json(&Summary { predicted: res.predicted, fit: &res.fit, note: &res.note }, None)?;
                }
                None => write_sweep_csv(io::stdout().lock(), &res.records)?,
            }
        }
        Command::Fit { csv, eps_min, eps_max, min_n } => {
            let window = match (eps_min, eps_max) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(0.0), b.unwrap_or(f64::INFINITY))),
            };
            let f = fit_csv(&csv, window, min_n)?;
            println!("slope = {:.6} ± {:.2e} (r² = {:.6}, n = {})", f.slope, f.slope_stderr, f.r_squared, f.n);
            emit_json(&f, None)?;
        }
        Command::Oracle { config, out, seed, cases, grid_n, perturb_h } => {
            let cfg = config.as_deref().map(Config::load).transpose()?;
            let mut opts = OracleOptions { seed, cases, perturb_h, ..Default::default() };
            if let Some(g) = grid_n {
                opts.grid_n = g;
            }
            let report = run_oracle(&opts, cfg.as_ref())?;
            for c in &report.checks {
                eprintln!(
                    "{} {:<40} max_err = {:.3e} tol = {:.1e} ({} cases)",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_err,
                    c.tol,
                    c.cases
                );
            }
            emit_json(&report, out.as_deref())?;
            if !report.pass {
                return Ok(EXIT_BREACH);
            }
        }
    }
    Ok(0)
}

fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("TWOWELL_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("TWOWELL_THREADS={v} is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
