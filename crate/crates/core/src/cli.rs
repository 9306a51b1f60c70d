//! Command-line front end.
//!
//! Every subcommand reads an optional TOML config (a flat table), applies
//! flag overrides on top and writes its artifacts into the output directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::causality::{
    causality_verdict, kernel_check, perturbative_gcrt, perturbative_gcrt_gamma_c, solve_roots, ComplexRootSet,
    KernelCheck, KernelWindow, Verdict,
};
use crate::error::{Error, Result};
use crate::nonclassicality::{measure_nonclassicality, NonclassicalityResult};
use crate::params::{make_params, pt_thresholds, RawParams, Sidedness, StabilityThresholds, SystemParams};
use crate::response::{response_sweep, ResponseRow, TransmissionReference};
use crate::steady::{steady_state, SteadyDump};
use crate::sweep::{
    critical_report, fig2_report, fig2a_csv, fig2b_csv, fmt_num, quantum_point, sweep_csv, sweep_g, write_json,
    write_text, GridSpec, QuantumPoint, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Keys accepted in the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma_m: Option<f64>,
    pub gamma_c: Option<f64>,
    pub sidedness: Option<Sidedness>,
    pub delta: Option<f64>,
    pub g_mag: Option<f64>,
    pub theta: Option<f64>,
    pub kappa_c_override: Option<f64>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidednessArg {
    TwoSided,
    SingleSided,
}

impl From<SidednessArg> for Sidedness {
    fn from(s: SidednessArg) -> Self {
        match s {
            SidednessArg::TwoSided => Sidedness::TwoSided,
            SidednessArg::SingleSided => Sidedness::SingleSided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    Transmitted,
    Reflected,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_m: Option<f64>,
    /// Per-mirror optical rate.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_c: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub sidedness: Option<SidednessArg>,
    /// Coupler detuning.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Coupling magnitude |g|.
    #[arg(long = "g", global = true, allow_hyphen_values = true)]
    pub g_mag: Option<f64>,
    /// Coupling phase.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa_c_override: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Output directory (default `results`).
    #[arg(long = "out", global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "optocausal", version, about = "Causality and nonclassicality of an optomechanical cavity")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Numerator roots and causality verdict at |g|.
    Roots,
    /// Probe response, ε/μ and slab (n, z) over a probe grid.
    Response {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        dp_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        dp_max: f64,
        #[arg(long, default_value_t = 601)]
        dp_points: usize,
        /// Slab phase kL.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        kl: f64,
        #[arg(long, value_enum, default_value_t = ReferenceArg::Transmitted)]
        reference: ReferenceArg,
    },
    /// Windowed inverse transform of the response singularities.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        half_width: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Drift, diffusion, steady covariance and mode moments.
    Steady,
    /// Log-negativity of the output mode.
    En {
        /// Also maximize over the coupling phase.
        #[arg(long)]
        maximize_theta: bool,
    },
    /// Classical and quantum columns over the coupling grid.
    Sweep {
        /// Keep θ fixed instead of maximizing E_N over it.
        #[arg(long)]
        fixed_theta: bool,
    },
    /// Both critical couplings by bisection over [grid_min, grid_max].
    Critical,
    /// Grid sweep, both critical couplings and the two panel tables.
    Fig2,
}

/// Parameters, grid and output directory after merging config and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: SystemParams,
    pub grid: GridSpec,
    pub out_dir: PathBuf,
}

pub fn resolve(common: &Common) -> Result<Resolved> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let d = RawParams::default();
    let grid_default = GridSpec::fig2();
    let raw = RawParams {
        gamma_m: common.gamma_m.or(file.gamma_m).unwrap_or(d.gamma_m),
        gamma_c: common.gamma_c.or(file.gamma_c).unwrap_or(d.gamma_c),
        sidedness: common.sidedness.map(Sidedness::from).or(file.sidedness).unwrap_or(d.sidedness),
        delta: common.delta.or(file.delta).unwrap_or(d.delta),
        g_mag: common.g_mag.or(file.g_mag).unwrap_or(d.g_mag),
        theta: common.theta.or(file.theta).unwrap_or(d.theta),
        kappa_c_override: common.kappa_c_override.or(file.kappa_c_override),
        thermal_phonons: d.thermal_phonons,
    };
    Ok(Resolved {
        params: make_params(raw)?,
        grid: GridSpec {
            min: common.grid_min.or(file.grid_min).unwrap_or(grid_default.min),
            max: common.grid_max.or(file.grid_max).unwrap_or(grid_default.max),
            points: common.grid_points.or(file.grid_points).unwrap_or(grid_default.points),
        },
        out_dir: common.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("results")),
    })
}

#[derive(Debug, Serialize)]
struct RootsReport<'a> {
    schema_version: u32,
    roots: &'a ComplexRootSet,
    verdict: Verdict,
    marginal: bool,
    g_formula: f64,
    g_formula_gamma_c: f64,
    thresholds: StabilityThresholds,
    params: &'a SystemParams,
}

#[derive(Debug, Serialize)]
struct KernelReport<'a> {
    schema_version: u32,
    window: KernelWindow,
    guard: f64,
    precausal_leakage: f64,
    verdict: Verdict,
    params: &'a SystemParams,
}

#[derive(Debug, Serialize)]
struct EnReport<'a> {
    schema_version: u32,
    fixed_theta: Option<NonclassicalityResult>,
    theta_maximized: Option<QuantumPoint>,
    params: &'a SystemParams,
}

fn fmt_opt_complex(z: Option<num_complex::Complex64>) -> String {
    match z {
        Some(z) => format!("{},{}", fmt_num(z.re), fmt_num(z.im)),
        None => "undefined,undefined".to_string(),
    }
}

fn response_csv(rows: &[ResponseRow]) -> String {
    let mut out = format!("{}\n", ResponseRow::CSV_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_num(r.delta_p),
            fmt_num(r.c_plus.re),
            fmt_num(r.c_plus.im),
            fmt_num(r.refl.re),
            fmt_num(r.refl.im),
            fmt_num(r.trans.re),
            fmt_num(r.trans.im),
            fmt_opt_complex(r.eps_over_mu),
            fmt_opt_complex(r.n),
            fmt_opt_complex(r.z),
        ));
    }
    out
}

fn kernel_csv(k: &KernelCheck) -> String {
    let mut out = format!("{}\n", KernelCheck::CSV_HEADER);
    for (t, g) in k.tau_grid.iter().zip(&k.kernel) {
        out.push_str(&format!("{},{},{}\n", fmt_num(*t), fmt_num(g.re), fmt_num(g.im)));
    }
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(lo.is_finite() && hi.is_finite()) || (n > 1 && hi <= lo) {
        return Err(Error::InvalidParameter(format!("probe grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| if k + 1 == n { hi } else { lo + k as f64 * step }).collect())
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let r = resolve(&cli.common)?;
    let p = &r.params;
    let dir = &r.out_dir;
    match &cli.command {
        Command::Roots => {
            let roots = solve_roots(p, None)?;
            let verdict = causality_verdict(&roots);
            info!("max Im root {:e}: {verdict}", roots.max_imag);
            write_json(
                dir,
                "roots.json",
                &RootsReport {
                    schema_version: SCHEMA_VERSION,
                    roots: &roots,
                    verdict,
                    marginal: roots.is_marginal(),
                    g_formula: perturbative_gcrt(p),
                    g_formula_gamma_c: perturbative_gcrt_gamma_c(p),
                    thresholds: pt_thresholds(p),
                    params: p,
                },
            )?;
        }
        Command::Response { dp_min, dp_max, dp_points, kl, reference } => {
            let grid = linspace(*dp_min, *dp_max, *dp_points)?;
            let reference = match reference {
                ReferenceArg::Transmitted => TransmissionReference::Transmitted,
                ReferenceArg::Reflected => TransmissionReference::Reflected,
            };
            let rows = response_sweep(p, &grid, *kl, reference)?;
            write_text(dir, "response.csv", &response_csv(&rows))?;
        }
        Command::Kernel { half_width, threshold } => {
            let mut window = KernelWindow::for_params(p);
            if let Some(w) = half_width {
                window.half_width = *w;
            }
            if let Some(t) = threshold {
                window.threshold = *t;
            }
            let k = kernel_check(p, &window)?;
            info!("precausal leakage {:e}: {}", k.precausal_leakage, k.verdict);
            write_text(dir, "kernel.csv", &kernel_csv(&k))?;
            write_json(
                dir,
                "kernel.json",
                &KernelReport {
                    schema_version: SCHEMA_VERSION,
                    window,
                    guard: window.guard(),
                    precausal_leakage: k.precausal_leakage,
                    verdict: k.verdict,
                    params: p,
                },
            )?;
        }
        Command::Steady => {
            let s = steady_state(p)?;
            write_json(dir, "steady.json", &SteadyDump::new(p, &s))?;
        }
        Command::En { maximize_theta } => {
            let fixed = match steady_state(p) {
                Ok(s) => Some(measure_nonclassicality(&s.output)?),
                Err(Error::Unstable(_)) => None,
                Err(e) => return Err(e),
            };
            let maximized = if *maximize_theta { Some(quantum_point(p, p.g_mag(), true)?) } else { None };
            write_json(
                dir,
                "en.json",
                &EnReport { schema_version: SCHEMA_VERSION, fixed_theta: fixed, theta_maximized: maximized, params: p },
            )?;
        }
        Command::Sweep { fixed_theta } => {
            let records = sweep_g(p, &r.grid.values()?, !fixed_theta)?;
            write_text(dir, "sweep.csv", &sweep_csv(&records))?;
        }
        Command::Critical => {
            let report = critical_report(p, (r.grid.min, r.grid.max))?;
            write_json(dir, "report.json", &report)?;
        }
        Command::Fig2 => {
            let (report, records) = fig2_report(p, &r.grid)?;
            write_text(dir, "fig2a.csv", &fig2a_csv(&records))?;
            write_text(dir, "fig2b.csv", &fig2b_csv(&records))?;
            write_json(dir, "report.json", &report)?;
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
