use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use channel_thermo::capacity::{capacity, capacity_gradient, fd_capacity_gradient, MethodChoice, DEFAULT_MAX_ITER};
use channel_thermo::channel::{InfoMeasures, Role};
use channel_thermo::io::{read_channel, read_distribution};
use channel_thermo::landscape::analysis::{
    argmin_report, corner_basin_diagnostics, diagonal_argmin_check, near_argmin_psi_check, Quantity,
    DEFAULT_NEAR_ZERO_RATIO, DEFAULT_TIE_TOL,
};
use channel_thermo::landscape::{sweep, ChannelFamily, FamilyKind, LandscapeGrid, SweepConfig};
use channel_thermo::mixing::spectral_gap;
use channel_thermo::thermo::{dmc_thermo, effective_state, DEFAULT_SUPPORT_EPS};
use channel_thermo::verify::{run_suite, Suite};
use channel_thermo::{CapacityMethod, Error};

/// Overrides the default worker count of `sweep`.
const THREADS_ENV: &str = "CHANNEL_THERMO_THREADS";

#[derive(Parser, Debug)]
#[command(name = "channel-thermo", version, about = "Capacity, mixing and effective thermodynamics of discrete memoryless channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Channel capacity and capacity-achieving input law.
    Capacity {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Blahut-Arimoto stopping gap in nats.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Report the capacity in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// Exact capacity gradient with respect to the off-diagonal entries.
    Gradient {
        #[arg(long)]
        channel: PathBuf,
        /// Also evaluate central differences with this step.
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Entropies, relative entropy and mutual information for an input law.
    Info {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        p: PathBuf,
    },
    /// Spectral gap and mixing time of the channel viewed as a Markov chain.
    Mixing {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Capacity-achieving law at the mixing time: effective free energy.
    Thermo {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_EPS)]
        support_eps: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Effective energies and inverse temperature for a law and timescale.
    ThermoState {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        t_inf: f64,
    },
    /// Evaluate a channel family on a grid and write CSV.
    Sweep {
        #[arg(long, value_enum)]
        family: Family,
        /// JSON parameter object for the family.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 101)]
        nu: usize,
        #[arg(long, default_value_t = 101)]
        nv: usize,
        #[arg(long, default_value_t = 0.02)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_EPS)]
        support_eps: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Worker threads (default: $CHANNEL_THERMO_THREADS, else all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagnostics over a swept grid.
    Report {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_enum)]
        check: Check,
        /// Family the grid was swept from (inferred for two-symbol grids).
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Quantity for `--check argmin`.
        #[arg(long, default_value = "C")]
        quantity: String,
        #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
        tie_tol: f64,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_EPS)]
        support_eps: f64,
        /// Inter-mask band half-width in cells (default: 3% of the grid size).
        #[arg(long)]
        band: Option<usize>,
        /// Neighborhood radius in cells for `--check psi`.
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_NEAR_ZERO_RATIO)]
        threshold: f64,
    },
    /// Run seeded property suites and print a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Ba,
    Muroga,
    Auto,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Biodmc,
    Constrained3,
    Convex3,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Biodmc => FamilyKind::Biodmc,
            Family::Constrained3 => FamilyKind::Constrained3,
            Family::Convex3 => FamilyKind::Convex3,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Check {
    Eq2,
    Corners,
    Psi,
    Argmin,
}

enum Failure {
    Lib(Error),
    Usage(String),
    /// A verification report with failing entries; already printed.
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Lib(Error::Io(e))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`, which
/// plain JSON numbers cannot express.
fn float(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(float).collect())
}

fn matrix(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|j| floats(&m.row(j).iter().copied().collect::<Vec<_>>())).collect())
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn method_name(m: CapacityMethod) -> &'static str {
    match m {
        CapacityMethod::BlahutArimoto => "blahut-arimoto",
        CapacityMethod::Muroga => "muroga",
        CapacityMethod::SupportNewton => "support-newton",
    }
}

fn load_family(kind: FamilyKind, params: Option<&Path>) -> CliResult<ChannelFamily> {
    match params {
        Some(path) => Ok(ChannelFamily::from_json(kind, &fs::read_to_string(path)?)?),
        None => Ok(ChannelFamily::default_for(kind)),
    }
}

fn positive(name: &str, x: f64) -> CliResult {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must be positive and finite, got {x}")))
    }
}

fn default_workers() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a nonnegative integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Capacity { channel, method, tol, max_iter, bits } => {
            positive("tol", tol)?;
            let w = read_channel(&channel)?;
            let choice = match method {
                Method::Ba => MethodChoice::BlahutArimoto,
                Method::Muroga => MethodChoice::Muroga,
                Method::Auto => MethodChoice::Auto,
            };
            let r = capacity(&w, choice, tol, max_iter)?;
            let scale = if bits { std::f64::consts::LN_2 } else { 1.0 };
            emit(
                &json!({
                    "C": float(r.capacity / scale),
                    "units": if bits { "bits" } else { "nats" },
                    "p_star": floats(r.p_star.weights()),
                    "method": method_name(r.method),
                    "iterations": r.iterations,
                    "gap": float(r.gap / scale),
                    "d_positive": r.d_positive,
                }),
                None,
            )
        }
        Command::Gradient { channel, fd_step } => {
            let w = read_channel(&channel)?;
            let g = capacity_gradient(&w)?;
            let mut out = json!({
                "psi": matrix(&g.psi),
                "grad": matrix(&g.grad),
                "p_star": floats(&g.p),
                "method": method_name(g.method),
            });
            if let Some(h) = fd_step {
                positive("fd-step", h)?;
                let n = w.n();
                let mut fd = nalgebra::DMatrix::from_element(n, n, f64::NAN);
                for j in 0..n {
                    for k in (0..n).filter(|&k| k != j) {
                        fd[(j, k)] = fd_capacity_gradient(&w, j, k, h)?;
                    }
                }
                out["fd_grad"] = matrix(&fd);
            }
            emit(&out, None)
        }
        Command::Info { channel, p } => {
            let w = read_channel(&channel)?;
            let p = read_distribution(&p, Role::Input)?;
            emit(&InfoMeasures::compute(&w, &p)?, None)
        }
        Command::Mixing { channel } => {
            let w = read_channel(&channel)?;
            let m = spectral_gap(&w)?;
            emit(
                &json!({
                    "lambda_star": float(m.lambda_star),
                    "t_mix": float(m.t_mix),
                    "spectrum_U": floats(&m.spectrum_u),
                    "invariant": floats(m.invariant.weights()),
                }),
                None,
            )
        }
        Command::Thermo { channel, support_eps, tol } => {
            positive("support-eps", support_eps)?;
            positive("tol", tol)?;
            let w = read_channel(&channel)?;
            let t = dmc_thermo(&w, tol, support_eps)?;
            emit(
                &json!({
                    "C": float(t.capacity.capacity),
                    "p_star": floats(t.capacity.p_star.weights()),
                    "t_mix": float(t.t_mix),
                    "beta_mix": float(t.beta_mix),
                    "beta_inv_mix": float(t.beta_inv_mix()),
                    "F_mix": float(t.f_mix),
                    "H": float(t.entropy),
                    "degenerate": t.degenerate,
                }),
                None,
            )
        }
        Command::ThermoState { p, t_inf } => {
            let p = read_distribution(&p, Role::Input)?;
            let s = effective_state(&p, t_inf)?;
            emit(
                &json!({
                    "p": floats(&s.p),
                    "t_inf": float(s.t_inf),
                    "gamma": floats(&s.gamma),
                    "beta": float(s.beta),
                    "E": floats(&s.energies),
                    "log_Z": float(s.log_z),
                    "F": float(s.free_energy),
                    "U": float(s.internal_energy),
                    "H": float(s.entropy),
                }),
                None,
            )
        }
        Command::Sweep { family, params, nu, nv, margin, support_eps, tol, workers, out } => {
            let family = load_family(family.into(), params.as_deref())?;
            let workers = match workers {
                Some(w) => w,
                None => default_workers()?,
            };
            let config = SweepConfig { n_u: nu, n_v: nv, margin, workers, ba_tol: tol, support_eps };
            let grid = sweep(&family, &config)?;
            match out {
                Some(path) => {
                    let mut writer = BufWriter::new(File::create(&path)?);
                    grid.write_csv(&mut writer)?;
                    writer.flush()?;
                }
                None => grid.write_csv(io::stdout().lock())?,
            }
            let failed = grid.error_count();
            if failed > 0 {
                eprintln!("{}", json!({ "warning": "cells_failed", "count": failed, "total": grid.cells.len() }));
            }
            Ok(())
        }
        Command::Report { grid, check, family, params, quantity, tie_tol, support_eps, band, radius, threshold } => {
            let kind = family.map(FamilyKind::from);
            let grid = LandscapeGrid::read_csv(BufReader::new(File::open(&grid)?), kind)?;
            match check {
                Check::Eq2 => emit(&diagonal_argmin_check(&grid, tie_tol)?, None),
                Check::Argmin => emit(&argmin_report(&grid, quantity.parse::<Quantity>()?, tie_tol)?, None),
                Check::Corners => emit(&corner_basin_diagnostics(&grid, support_eps, band)?, None),
                Check::Psi => {
                    let kind = grid
                        .family
                        .ok_or_else(|| Failure::Usage("--check psi needs --family for grids with more than two symbols".into()))?;
                    let family = load_family(kind, params.as_deref())?;
                    emit(&near_argmin_psi_check(&grid, &family, radius, threshold)?, None)
                }
            }
        }
        Command::Verify { suite, seed, out } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite, seed);
            emit(&report, out.as_deref())?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({ "code": "usage", "message": message.trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(message)) => {
            eprintln!("{}", json!({ "code": "usage", "message": message }));
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("{}", json!({ "code": e.code(), "message": e.to_string() }));
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
