use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use memlang_core::bath::{discretize_bath, OracleConfig};
use memlang_core::ensemble::{
    analytic_curves, reproduce_figure_with, run_ensemble_with, run_oracle_ensemble, tau_grid, EnsembleConfig,
    IcPolicy, OracleEnsemble, FIG1_CURVES,
};
use memlang_core::integrators::{Counterterm, IntegratorConfig, IntegratorKind, Potential};
use memlang_core::noise::{default_fdt_lags, validate_fdt, NoiseGrid};
use memlang_core::output::{kernel_table, write_fdt_csv, write_figure_csv, write_kernels_csv, write_trajectory_csv};
use memlang_core::stats::EnsembleStats;
use memlang_core::{CutoffKind, Execution, KernelSpec};

mod config;

use config::{config_hash, resolve, Manifest};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl From<memlang_core::Error> for CliError {
    fn from(e: memlang_core::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "memlang", version, about = "Generalized Langevin dynamics with memory kernels")]
struct Cli {
    /// Worker threads for ensembles (default: logical cores)
    #[arg(long, global = true, env = "MEMLANG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate Δ_Ω(t), J_n(Ωt) and the Laplace kernel Δ̃_δ(s)
    Kernels(KernelsArgs),
    /// Check the colored-noise covariance against 2ηTΔ_Ω
    ValidateFdt(FdtArgs),
    /// Run a GLE ensemble and write ⟨Q⟩, Var Q, ⟨v⟩, Var v per output time
    Simulate(SimulateArgs),
    /// Run the particle-plus-oscillator-bath ensemble
    Oracle(OracleArgs),
    /// Analytic ⟨Q²⟩/(2MT/η²) curves for the Lorentzian kernel
    Analytic(AnalyticArgs),
    /// Figure datasets (Fig. 1: δ = 0.5 curves; Fig. 2: late-time normalized curves)
    Figures(FiguresArgs),
}

/// Fields shared by `simulate` and `oracle`, plus the given extras.
macro_rules! run_args {
    ($name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty,)* }) => {
        #[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            /// JSON run configuration or a previous manifest; flags override it
            #[arg(long)]
            #[serde(skip)]
            config: Option<PathBuf>,
            /// Cutoff kind: sharp, exponential, gaussian or lorentzian
            #[arg(long)]
            kernel: Option<String>,
            /// Cutoff frequency Ω [1/time]
            #[arg(long)]
            omega: Option<f64>,
            /// Dissipation coefficient η [mass/time]
            #[arg(long)]
            eta: Option<f64>,
            /// Particle mass M [mass]
            #[arg(long)]
            mass: Option<f64>,
            /// Temperature T [energy, k_B = 1]
            #[arg(long)]
            temperature: Option<f64>,
            /// free, harmonic:W (W in 1/time) or quartic:A,B (V = A(Q² − B²)², A in energy/length⁴, B in length)
            #[arg(long)]
            potential: Option<String>,
            /// Counterterm: renormalized (V is the effective potential) or bare
            #[arg(long)]
            counterterm: Option<String>,
            /// Time step [time]
            #[arg(long)]
            dt: Option<f64>,
            /// Final time [time]
            #[arg(long)]
            t_end: Option<f64>,
            /// Initial position Q₀ [length]
            #[arg(long)]
            q0: Option<f64>,
            /// Initial velocity v₀ [length/time]
            #[arg(long)]
            v0: Option<f64>,
            /// Draw v₀ from N(0, variance) instead [length²/time²]
            #[arg(long)]
            v0_variance: Option<f64>,
            /// Number of trajectories
            #[arg(long)]
            n_traj: Option<usize>,
            /// Master seed
            #[arg(long)]
            seed: Option<u64>,
            /// Steps between output rows (must divide the step count)
            #[arg(long)]
            stride: Option<usize>,
            /// Output CSV path (stdout if absent)
            #[arg(long)]
            out: Option<PathBuf>,
            $($(#[$fm])* #[arg(long)] $field: Option<$ty>,)*
        }
    };
}

run_args!(SimulateArgs {
    /// Integrator: full, embed, truncated:N (N = 1, 2, 3) or markov
    integrator: String,
    /// Add the −2ηΔ_Ω(t)Q₀ boundary force
    initial_slip: bool,
    /// Memory cutoff for `full`, in units of 1/Ω [dimensionless]
    memory_window: f64,
});

run_args!(OracleArgs {
    /// Number of bath oscillators
    n_modes: usize,
    /// Highest bath frequency [1/time] (default 40Ω)
    omega_max: f64,
    /// Bath oscillator mass m [mass] (default M)
    bath_mass: f64,
    /// Relative energy-drift tolerance [dimensionless]
    energy_tolerance: f64,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelsArgs {
    /// JSON run configuration or a previous manifest; flags override it
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Cutoff kind (all four if absent): sharp, exponential, gaussian or lorentzian
    #[arg(long)]
    kernel: Option<String>,
    /// Cutoff frequency Ω [1/time]
    #[arg(long)]
    omega: Option<f64>,
    /// Dissipation coefficient η [mass/time], enters δ = η/(MΩ)
    #[arg(long)]
    eta: Option<f64>,
    /// Particle mass M [mass], enters δ = η/(MΩ)
    #[arg(long)]
    mass: Option<f64>,
    /// Largest t for Δ_Ω(t) [time]; J_n is tabulated at y = Ωt
    #[arg(long)]
    t_max: Option<f64>,
    /// Largest Laplace variable s [dimensionless]
    #[arg(long)]
    s_max: Option<f64>,
    /// Points per table
    #[arg(long)]
    n_points: Option<usize>,
    /// Highest J order (clipped to what the kind supports)
    #[arg(long)]
    max_j: Option<usize>,
    /// Output CSV path (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdtArgs {
    /// JSON run configuration or a previous manifest; flags override it
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Cutoff kind (lorentzian and gaussian if absent)
    #[arg(long)]
    kernel: Option<String>,
    /// Cutoff frequency Ω [1/time]
    #[arg(long)]
    omega: Option<f64>,
    /// Dissipation coefficient η [mass/time]
    #[arg(long)]
    eta: Option<f64>,
    /// Temperature T [energy]
    #[arg(long)]
    temperature: Option<f64>,
    /// Time step [time]
    #[arg(long)]
    dt: Option<f64>,
    /// Steps per path
    #[arg(long)]
    n_steps: Option<usize>,
    /// Number of noise paths
    #[arg(long)]
    n_paths: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyticArgs {
    /// JSON run configuration or a previous manifest; flags override it
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// δ = η/(MΩ) [dimensionless]
    #[arg(long)]
    delta: Option<f64>,
    /// Largest τ = ηt/M [dimensionless]
    #[arg(long)]
    tau_max: Option<f64>,
    /// τ spacing [dimensionless]
    #[arg(long)]
    tau_step: Option<f64>,
    /// Comma-separated subset of markov,trunc1,trunc2,trunc3,exact
    #[arg(long, value_delimiter = ',')]
    curves: Option<Vec<String>>,
    /// Output CSV path (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiguresArgs {
    /// JSON run configuration or a previous manifest; flags override it
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Figure: 1 or 2
    #[arg(long)]
    fig: Option<u8>,
    /// Trajectories for the simulated Fig. 1 curve (0 = analytic curves only)
    #[arg(long)]
    n_traj: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse<T: std::str::FromStr<Err = memlang_core::Error>>(s: &str) -> CliResult<T> {
    s.parse().map_err(CliError::from)
}

fn parse_potential(s: &str, counterterm: Counterterm) -> CliResult<Potential> {
    let bad = || {
        CliError::Config(format!(
            "invalid potential `{s}`; expected free, harmonic:W or quartic:A,B"
        ))
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let p = match s.split_once(':') {
        None if s == "free" => Potential::free(),
        Some(("harmonic", w)) => Potential::harmonic(num(w)?),
        Some(("quartic", ab)) => {
            let (a, b) = ab.split_once(',').ok_or_else(bad)?;
            Potential::quartic(num(a)?, num(b)?)
        }
        _ => return Err(bad()),
    };
    let p = p.with_counterterm(counterterm);
    p.validate()?;
    Ok(p)
}

fn step_count(t_end: f64, dt: f64) -> CliResult<usize> {
    if !(t_end > 0.0 && dt > 0.0 && t_end.is_finite() && dt.is_finite()) {
        return Err(CliError::Config("t_end and dt must be positive".into()));
    }
    let n = (t_end / dt).round();
    if n < 1.0 || ((n * dt - t_end) / t_end).abs() > 1e-9 {
        return Err(CliError::Config(format!("t_end = {t_end} is not a whole number of steps dt = {dt}")));
    }
    Ok(n as usize)
}

/// Opens the destination (stdout when absent), writes, and returns the path.
fn emit<F>(out: Option<&Path>, write: F) -> CliResult<()>
where
    F: FnOnce(Box<dyn Write>) -> io::Result<Box<dyn Write>>,
{
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    write(sink).map_err(|e| CliError::Config(format!("write failed: {e}")))?;
    Ok(())
}

struct Run {
    subcommand: &'static str,
    effective: Value,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn header_comments(run: &Run) -> Vec<String> {
    vec![
        format!("memlang {} {}", env!("CARGO_PKG_VERSION"), run.subcommand),
        format!("config_sha256 {}", config_hash(&run.effective)),
    ]
}

fn run_common_defaults() -> Value {
    json!({
        "kernel": "lorentzian",
        "omega": 10.0,
        "eta": 1.0,
        "mass": 1.0,
        "temperature": 1.0,
        "potential": "free",
        "counterterm": "renormalized",
        "t_end": 10.0,
        "q0": 0.0,
        "v0": 0.0,
        "seed": 0,
    })
}

fn defaults(extra: Value) -> Value {
    let mut base = run_common_defaults();
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn ic(q0: f64, v0: f64, variance: Option<f64>) -> IcPolicy {
    match variance {
        Some(variance) => IcPolicy::GaussianV0 { q0, variance },
        None => IcPolicy::Fixed { q0, v0 },
    }
}

fn default_stride(n_steps: usize) -> usize {
    (1..=memlang_core::ensemble::DEFAULT_STRIDE)
        .rev()
        .find(|s| n_steps.is_multiple_of(*s))
        .unwrap_or(1)
}

fn report_failures(stats: &EnsembleStats) {
    if stats.failed() > 0 {
        eprintln!("memlang: warning: {} trajectories diverged and were dropped", stats.failed());
    }
}

fn cmd_simulate(flags: &SimulateArgs, exec: Execution) -> CliResult<Run> {
    let (a, effective) = resolve(
        defaults(json!({"integrator": "embed", "dt": 0.01, "n_traj": 10_000, "initial_slip": false})),
        flags.config.as_deref(),
        flags,
    )?;
    let spec = KernelSpec::new(
        parse(a.kernel.as_deref().unwrap_or_default())?,
        a.eta.unwrap_or_default(),
        a.omega.unwrap_or_default(),
        a.mass.unwrap_or_default(),
        a.temperature.unwrap_or_default(),
    )?;
    let counterterm = parse(a.counterterm.as_deref().unwrap_or_default())?;
    let potential = parse_potential(a.potential.as_deref().unwrap_or_default(), counterterm)?;
    let kind: IntegratorKind = parse(a.integrator.as_deref().unwrap_or_default())?;
    let dt = a.dt.unwrap_or_default();
    let n_steps = step_count(a.t_end.unwrap_or_default(), dt)?;
    let mut ic_config = IntegratorConfig::new(spec, potential, kind, dt, n_steps);
    ic_config.initial_slip = a.initial_slip.unwrap_or(false);
    ic_config.memory_window = a.memory_window;
    let seed = a.seed.unwrap_or_default();
    let config = EnsembleConfig::new(ic_config, a.n_traj.unwrap_or_default(), seed)
        .with_ic(ic(a.q0.unwrap_or_default(), a.v0.unwrap_or_default(), a.v0_variance))
        .with_stride(a.stride.unwrap_or_else(|| default_stride(n_steps)));
    let stats = run_ensemble_with(&config, exec)?;
    report_failures(&stats);
    let run = Run {
        subcommand: "simulate",
        effective,
        seed: Some(seed),
        out: a.out.clone(),
    };
    let mut comments = header_comments(&run);
    comments.push(format!("integrator {kind}, kernel {}, delta {}", spec.kind, spec.delta()));
    emit(run.out.as_deref(), |w| write_trajectory_csv(w, &stats, &spec, &comments))?;
    Ok(run)
}

fn cmd_oracle(flags: &OracleArgs, exec: Execution) -> CliResult<Run> {
    let (a, effective) = resolve(
        defaults(json!({"t_end": 5.0, "n_traj": 200, "n_modes": 4096, "energy_tolerance": 1e-4})),
        flags.config.as_deref(),
        flags,
    )?;
    let spec = KernelSpec::new(
        parse(a.kernel.as_deref().unwrap_or_default())?,
        a.eta.unwrap_or_default(),
        a.omega.unwrap_or_default(),
        a.mass.unwrap_or_default(),
        a.temperature.unwrap_or_default(),
    )?;
    let counterterm = parse(a.counterterm.as_deref().unwrap_or_default())?;
    let potential = parse_potential(a.potential.as_deref().unwrap_or_default(), counterterm)?;
    let omega_max = a.omega_max.unwrap_or(40.0 * spec.omega);
    let modes = discretize_bath(
        &spec,
        a.n_modes.unwrap_or_default(),
        a.bath_mass.unwrap_or(spec.mass),
        omega_max,
    )?;
    let t_end = a.t_end.unwrap_or_default();
    let (dt, n_steps) = match a.dt {
        Some(dt) => (dt, step_count(t_end, dt)?),
        None => {
            let n = (t_end * omega_max / 0.05).ceil() as usize;
            (t_end / n as f64, n)
        }
    };
    let mut config = OracleConfig::new(potential, dt, n_steps);
    config.energy_tolerance = a.energy_tolerance.unwrap_or_default();
    let seed = a.seed.unwrap_or_default();
    let ensemble = OracleEnsemble {
        modes,
        config,
        n_traj: a.n_traj.unwrap_or_default(),
        seed,
        ic: ic(a.q0.unwrap_or_default(), a.v0.unwrap_or_default(), a.v0_variance),
        stride: a.stride.unwrap_or_else(|| default_stride(n_steps)),
    };
    let stats = run_oracle_ensemble(&ensemble, exec)?;
    report_failures(&stats);
    let run = Run {
        subcommand: "oracle",
        effective,
        seed: Some(seed),
        out: a.out.clone(),
    };
    let mut comments = header_comments(&run);
    comments.push(format!(
        "bath: {} modes up to {omega_max}, dt {dt}, kernel {}, delta {}",
        ensemble.modes.len(),
        spec.kind,
        spec.delta()
    ));
    emit(run.out.as_deref(), |w| write_trajectory_csv(w, &stats, &spec, &comments))?;
    Ok(run)
}

fn linspace(hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn cmd_kernels(flags: &KernelsArgs) -> CliResult<Run> {
    let (a, effective) = resolve(
        json!({"omega": 1.0, "eta": 1.0, "mass": 1.0, "s_max": 10.0, "n_points": 101, "max_j": 4}),
        flags.config.as_deref(),
        flags,
    )?;
    let kinds = match a.kernel.as_deref() {
        Some(k) => vec![parse::<CutoffKind>(k)?],
        None => CutoffKind::ALL.to_vec(),
    };
    let omega = a.omega.unwrap_or_default();
    let n = a.n_points.unwrap_or_default();
    let t_max = a.t_max.unwrap_or(10.0 / omega);
    let times = linspace(t_max, n);
    let ys: Vec<f64> = times.iter().map(|t| omega * t).collect();
    let ss = linspace(a.s_max.unwrap_or_default(), n);
    let mut rows = Vec::new();
    for kind in kinds {
        let spec = KernelSpec::new(kind, a.eta.unwrap_or_default(), omega, a.mass.unwrap_or_default(), 1.0)?;
        rows.extend(kernel_table(&spec, &times, &ys, a.max_j.unwrap_or_default(), &ss)?);
    }
    let run = Run {
        subcommand: "kernels",
        effective,
        seed: None,
        out: a.out.clone(),
    };
    let comments = header_comments(&run);
    emit(run.out.as_deref(), |w| write_kernels_csv(w, &rows, &comments))?;
    Ok(run)
}

fn cmd_fdt(flags: &FdtArgs, exec: Execution) -> CliResult<Run> {
    let (a, effective) = resolve(
        json!({"omega": 2.0, "eta": 1.0, "temperature": 1.0, "dt": 0.05, "n_steps": 256, "n_paths": 10_000, "seed": 0}),
        flags.config.as_deref(),
        flags,
    )?;
    let kinds = match a.kernel.as_deref() {
        Some(k) => vec![parse::<CutoffKind>(k)?],
        None => vec![CutoffKind::Lorentzian, CutoffKind::Gaussian],
    };
    let grid = NoiseGrid::new(a.dt.unwrap_or_default(), a.n_steps.unwrap_or_default())?;
    let seed = a.seed.unwrap_or_default();
    let mut rows = Vec::new();
    for kind in kinds {
        let spec = KernelSpec::new(
            kind,
            a.eta.unwrap_or_default(),
            a.omega.unwrap_or_default(),
            1.0,
            a.temperature.unwrap_or_default(),
        )?;
        let lags = default_fdt_lags(&spec, grid.dt);
        rows.extend(validate_fdt(&spec, grid, a.n_paths.unwrap_or_default(), seed, &lags, exec)?);
    }
    let worst = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    eprintln!("memlang: validate-fdt: max |z| = {worst:.2}");
    let run = Run {
        subcommand: "validate-fdt",
        effective,
        seed: Some(seed),
        out: a.out.clone(),
    };
    let comments = header_comments(&run);
    emit(run.out.as_deref(), |w| write_fdt_csv(w, &rows, &comments))?;
    Ok(run)
}

fn cmd_analytic(flags: &AnalyticArgs) -> CliResult<Run> {
    let (a, effective) = resolve(
        json!({"delta": 0.5, "tau_max": 5.0, "tau_step": 0.1, "curves": FIG1_CURVES}),
        flags.config.as_deref(),
        flags,
    )?;
    let step = a.tau_step.unwrap_or_default();
    let tau_max = a.tau_max.unwrap_or_default();
    if !(step > 0.0 && tau_max >= 0.0) {
        return Err(CliError::Config("tau_step must be positive and tau_max non-negative".into()));
    }
    let curves = a
        .curves
        .clone()
        .unwrap_or_default()
        .iter()
        .map(|c| {
            FIG1_CURVES.iter().copied().find(|k| k == c).ok_or_else(|| {
                CliError::Config(format!("unknown curve `{c}`; expected one of {}", FIG1_CURVES.join(", ")))
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let rows = analytic_curves(&curves, a.delta.unwrap_or_default(), &tau_grid(0.0, tau_max, step))?;
    let run = Run {
        subcommand: "analytic",
        effective,
        seed: None,
        out: a.out.clone(),
    };
    let mut comments = header_comments(&run);
    comments.push("q2_normalized = <Q^2>/(2MT/eta^2), lorentzian kernel".into());
    emit(run.out.as_deref(), |w| write_figure_csv(w, &rows, &comments))?;
    Ok(run)
}

fn cmd_figures(flags: &FiguresArgs, exec: Execution) -> CliResult<Run> {
    let (a, effective) = resolve(json!({"fig": 1, "n_traj": 0, "seed": 0}), flags.config.as_deref(), flags)?;
    let fig = a.fig.unwrap_or_default();
    let seed = a.seed.unwrap_or_default();
    let rows = reproduce_figure_with(fig, a.n_traj.unwrap_or_default(), seed, exec)?;
    let run = Run {
        subcommand: "figures",
        effective,
        seed: Some(seed),
        out: a.out.clone(),
    };
    let mut comments = header_comments(&run);
    comments.push(match fig {
        1 => "figure 1: q2_normalized = <Q^2>/(2MT/eta^2)".into(),
        _ => "figure 2: q2_normalized = <Q^2>/(2Tt/eta)".into(),
    });
    emit(run.out.as_deref(), |w| write_figure_csv(w, &rows, &comments))?;
    Ok(run)
}

fn configure_threads(threads: Option<usize>) -> CliResult<(Execution, usize)> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(1) => Ok((Execution::Sequential, 1)),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok((Execution::Parallel, n))
        }
        #[cfg(feature = "parallel")]
        None => Ok((Execution::Parallel, rayon::current_num_threads())),
        #[cfg(not(feature = "parallel"))]
        _ => Ok((Execution::Sequential, 1)),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (exec, threads) = configure_threads(cli.threads)?;
    let start = Instant::now();
    let run = match &cli.command {
        Command::Kernels(a) => cmd_kernels(a)?,
        Command::ValidateFdt(a) => cmd_fdt(a, exec)?,
        Command::Simulate(a) => cmd_simulate(a, exec)?,
        Command::Oracle(a) => cmd_oracle(a, exec)?,
        Command::Analytic(a) => cmd_analytic(a)?,
        Command::Figures(a) => cmd_figures(a, exec)?,
    };
    if let Some(out) = &run.out {
        Manifest {
            subcommand: run.subcommand,
            effective: &run.effective,
            seed: run.seed,
            threads,
            wall_time: start.elapsed(),
            out,
        }
        .write()?;
    }
    Ok(())
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
            let text = e.render().to_string();
            eprintln!("memlang: error[config]: {}", text.trim_start_matches("error: ").trim_end());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("memlang: error[config]: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(m)) => {
            eprintln!("memlang: error[numeric]: {m}");
            ExitCode::from(2)
        }
    }
}
