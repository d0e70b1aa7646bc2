//! Many-trajectory runs and the figure datasets.
//!
//! Trajectory i draws its noise from stream i of the master seed and its
//! initial conditions from stream i + 2⁶². Trajectories are grouped in
//! fixed chunks whose accumulators are merged in index order, so the
//! statistics do not depend on the number of workers.

use crate::analytic::{q2_numeric, Q2Series, ResponseFunction};
use crate::bath::{
    free_bath_force, integrate_system_bath, sample_thermal_ics, BathModes, OracleConfig,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrators::{Integrator, IntegratorConfig, IntegratorKind, Potential};
use crate::kernels::{CutoffKind, KernelSpec};
use crate::noise::{rng_for, standard_normal, NoiseGrid};
use crate::stats::{EnsembleStats, DEFAULT_BATCHES};

pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_N_TRAJ: usize = 10_000;
const CHUNK: usize = 64;
const IC_STREAM_OFFSET: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcPolicy {
    Fixed { q0: f64, v0: f64 },
    /// v₀ ~ N(0, variance), Q₀ fixed.
    GaussianV0 { q0: f64, variance: f64 },
}

impl Default for IcPolicy {
    fn default() -> Self {
        IcPolicy::Fixed { q0: 0.0, v0: 0.0 }
    }
}

impl IcPolicy {
    fn validate(&self) -> Result<()> {
        match *self {
            IcPolicy::Fixed { q0, v0 } if q0.is_finite() && v0.is_finite() => Ok(()),
            IcPolicy::GaussianV0 { q0, variance } if q0.is_finite() && variance >= 0.0 && variance.is_finite() => {
                Ok(())
            }
            _ => Err(Error::invalid("initial_conditions", "must be finite, with a non-negative variance")),
        }
    }

    /// Initial (Q₀, v₀) of trajectory `index`.
    pub fn draw(&self, seed: u64, index: usize) -> (f64, f64) {
        match *self {
            IcPolicy::Fixed { q0, v0 } => (q0, v0),
            IcPolicy::GaussianV0 { q0, variance } => {
                let mut rng = rng_for(seed, IC_STREAM_OFFSET + index as u64);
                (q0, variance.sqrt() * standard_normal(&mut rng))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub integrator: IntegratorConfig,
    pub n_traj: usize,
    pub seed: u64,
    pub ic: IcPolicy,
    /// Steps between output times.
    pub stride: usize,
}

impl EnsembleConfig {
    /// Fixed zero initial conditions and the largest stride ≤ 100 that
    /// divides the step count.
    pub fn new(integrator: IntegratorConfig, n_traj: usize, seed: u64) -> Self {
        let stride = (1..=DEFAULT_STRIDE)
            .rev()
            .find(|s| integrator.n_steps.is_multiple_of(*s))
            .unwrap_or(1);
        Self {
            integrator,
            n_traj,
            seed,
            ic: IcPolicy::default(),
            stride,
        }
    }

    pub fn with_ic(mut self, ic: IcPolicy) -> Self {
        self.ic = ic;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::invalid("n_traj", "need at least 2 trajectories"));
        }
        if self.stride == 0 || !self.integrator.n_steps.is_multiple_of(self.stride) {
            return Err(Error::invalid(
                "stride",
                format!("must divide the step count {}", self.integrator.n_steps),
            ));
        }
        self.ic.validate()
    }

    pub fn output_times(&self) -> Vec<f64> {
        output_times(self.integrator.dt, self.integrator.n_steps, self.stride)
    }
}

fn output_times(dt: f64, n_steps: usize, stride: usize) -> Vec<f64> {
    (0..=n_steps / stride).map(|k| (k * stride) as f64 * dt).collect()
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    run_ensemble_with(config, Execution::default())
}

pub fn run_ensemble_with(config: &EnsembleConfig, exec: Execution) -> Result<EnsembleStats> {
    config.validate()?;
    let integrator = Integrator::new(config.integrator)?;
    let generator = integrator.noise_generator()?;
    let seed = config.seed;
    run_ensemble_driven(config, exec, |i, buf| {
        generator.fill(&mut rng_for(seed, i as u64), buf);
        Ok(())
    })
}

/// Like [`run_ensemble_with`], with the noise of trajectory i supplied by
/// `noise(i, buf)`. Used to drive two models with common random numbers.
pub fn run_ensemble_driven<F>(config: &EnsembleConfig, exec: Execution, noise: F) -> Result<EnsembleStats>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    config.validate()?;
    let integrator = Integrator::new(config.integrator)?;
    let n_steps = config.integrator.n_steps;
    let stride = config.stride;
    accumulate(config.output_times(), config.n_traj, exec, |i, samples| {
        let mut buf = vec![0.0; n_steps];
        noise(i, &mut buf)?;
        let (q0, v0) = config.ic.draw(config.seed, i);
        integrator.run(q0, v0, &buf, |s| {
            if s.step % stride == 0 {
                samples.push((s.q, s.v));
            }
        })?;
        Ok(())
    })
}

/// Runs `trajectory(i, samples)` for every index in fixed chunks and merges
/// the chunk accumulators in index order. Divergences are counted; any
/// other error aborts the run.
fn accumulate<F>(times: Vec<f64>, n_traj: usize, exec: Execution, trajectory: F) -> Result<EnsembleStats>
where
    F: Fn(usize, &mut Vec<(f64, f64)>) -> Result<()> + Sync,
{
    let n_out = times.len();
    let n_chunks = n_traj.div_ceil(CHUNK);
    let template = EnsembleStats::new(times, DEFAULT_BATCHES);
    let chunks = exec.map(n_chunks, |c| -> Result<EnsembleStats> {
        let mut stats = template.clone();
        let mut samples = Vec::with_capacity(n_out);
        for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
            samples.clear();
            match trajectory(i, &mut samples) {
                Ok(()) => {
                    for (k, &(q, v)) in samples.iter().enumerate() {
                        stats.record(i, k, q, v);
                    }
                }
                Err(Error::Diverged { .. }) => stats.record_failure(),
                Err(e) => return Err(e),
            }
        }
        Ok(stats)
    });
    let mut total = template;
    for chunk in chunks {
        total.merge(&chunk?);
    }
    if total.failed() * 100 > n_traj {
        return Err(Error::TooManyDiverged {
            failed: total.failed(),
            total: n_traj,
        });
    }
    Ok(total)
}

/// An ensemble of system-bath realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEnsemble {
    pub modes: BathModes,
    pub config: OracleConfig,
    pub n_traj: usize,
    pub seed: u64,
    pub ic: IcPolicy,
    pub stride: usize,
}

impl OracleEnsemble {
    pub fn output_times(&self) -> Vec<f64> {
        output_times(self.config.dt, self.config.n_steps, self.stride)
    }

    /// Force of the free bath of realization `index` on the grid midpoints,
    /// the noise a GLE sees when driven by the same bath.
    pub fn bath_force(&self, index: usize, grid: NoiseGrid) -> Result<Vec<f64>> {
        let bath = sample_thermal_ics(&self.modes, self.modes.spec.temperature, self.seed, index as u64)?;
        Ok(free_bath_force(&self.modes, &bath, grid))
    }
}

pub fn run_oracle_ensemble(ensemble: &OracleEnsemble, exec: Execution) -> Result<EnsembleStats> {
    if ensemble.n_traj < 2 {
        return Err(Error::invalid("n_traj", "need at least 2 realizations"));
    }
    if ensemble.stride == 0 || !ensemble.config.n_steps.is_multiple_of(ensemble.stride) {
        return Err(Error::invalid("stride", "must divide the step count"));
    }
    ensemble.ic.validate()?;
    let stride = ensemble.stride;
    let temperature = ensemble.modes.spec.temperature;
    accumulate(ensemble.output_times(), ensemble.n_traj, exec, |i, samples| {
        let bath = sample_thermal_ics(&ensemble.modes, temperature, ensemble.seed, i as u64)?;
        let (q0, v0) = ensemble.ic.draw(ensemble.seed, i);
        integrate_system_bath(&ensemble.modes, &bath, &ensemble.config, q0, v0, |s| {
            if s.step % stride == 0 {
                samples.push((s.q, s.v));
            }
        })?;
        Ok(())
    })
}

/// One row of a figure dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub curve_id: &'static str,
    pub delta: f64,
    pub tau: f64,
    pub q2_normalized: f64,
}

pub const FIG1_DELTA: f64 = 0.5;
pub const FIG2_DELTAS: [f64; 3] = [0.0, 0.1, 0.3];
/// Curve ids of the analytic Fig. 1 curves, top row of the legend first.
pub const FIG1_CURVES: [&str; 5] = ["markov", "trunc1", "trunc2", "trunc3", "exact"];
pub const SIMULATED_CURVE: &str = "exact_sim";

/// Fig. 1: ⟨Q²⟩/(2MT/η²) at δ = 0.5 on τ ∈ [0, 5]; with `n_traj > 0` a
/// simulated exact curve from the auxiliary-variable integrator is added.
/// Fig. 2: ⟨Q²⟩/(2Tt/η) on τ ∈ [0.5, 30] for δ = 0 (Markovian) and the exact
/// and O(δ³) curves at δ = 0.1 and 0.3.
pub fn reproduce_figure(which: u8, n_traj: usize, seed: u64) -> Result<Vec<FigureRow>> {
    reproduce_figure_with(which, n_traj, seed, Execution::default())
}

pub fn reproduce_figure_with(which: u8, n_traj: usize, seed: u64, exec: Execution) -> Result<Vec<FigureRow>> {
    match which {
        1 => figure1(n_traj, seed, exec),
        2 => figure2(),
        _ => Err(Error::invalid("fig", format!("unknown figure {which}; expected 1 or 2"))),
    }
}

pub fn tau_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Analytic ⟨Q²⟩/(2MT/η²) of a Fig. 1 curve (`markov`, `trunc1`,
/// `trunc2`, `trunc3` or `exact`) for the Lorentzian kernel.
pub fn analytic_curves(curves: &[&'static str], delta: f64, taus: &[f64]) -> Result<Vec<FigureRow>> {
    let series = Q2Series::lorentzian();
    let markov = ResponseFunction::markovian();
    let exact = ResponseFunction::exact_lorentzian(delta)?;
    let mut rows = Vec::with_capacity(curves.len() * taus.len());
    for &curve in curves {
        for &tau in taus {
            let value = match curve {
                "markov" => q2_numeric(CutoffKind::Lorentzian, &markov, tau)?,
                "trunc1" => series.eval(1, delta, tau)?,
                "trunc2" => series.eval(2, delta, tau)?,
                "trunc3" => series.eval(3, delta, tau)?,
                "exact" => q2_numeric(CutoffKind::Lorentzian, &exact, tau)?,
                other => {
                    return Err(Error::invalid(
                        "curve",
                        format!("unknown curve `{other}`; expected one of {}", FIG1_CURVES.join(", ")),
                    ))
                }
            };
            rows.push(FigureRow {
                curve_id: curve,
                delta,
                tau,
                q2_normalized: value,
            });
        }
    }
    Ok(rows)
}

fn figure1(n_traj: usize, seed: u64, exec: Execution) -> Result<Vec<FigureRow>> {
    let delta = FIG1_DELTA;
    let mut rows = analytic_curves(&FIG1_CURVES, delta, &tau_grid(0.0, 5.0, 0.1))?;
    if n_traj > 0 {
        let spec = KernelSpec::from_delta(CutoffKind::Lorentzian, delta)?;
        let dt = 0.01;
        let n_steps = (spec.time(5.0) / dt).round() as usize;
        let config = EnsembleConfig::new(
            IntegratorConfig::new(spec, Potential::free(), IntegratorKind::OuEmbedding, dt, n_steps),
            n_traj,
            seed,
        )
        .with_stride((spec.time(0.1) / dt).round() as usize);
        let stats = run_ensemble_with(&config, exec)?;
        let unit = spec.q2_unit();
        for row in stats.rows() {
            rows.push(FigureRow {
                curve_id: SIMULATED_CURVE,
                delta,
                tau: spec.tau(row.t),
                q2_normalized: row.q2 / unit,
            });
        }
    }
    Ok(rows)
}

fn figure2() -> Result<Vec<FigureRow>> {
    let taus = tau_grid(0.5, 30.0, 0.5);
    let series = Q2Series::lorentzian();
    let mut rows = Vec::new();
    for delta in FIG2_DELTAS {
        let curves: &[&'static str] = if delta == 0.0 { &["markov"] } else { &["exact", "trunc3"] };
        let response = if delta == 0.0 {
            ResponseFunction::markovian()
        } else {
            ResponseFunction::exact_lorentzian(delta)?
        };
        for &curve in curves {
            for &tau in &taus {
                let q2 = match curve {
                    "trunc3" => series.eval(3, delta, tau)?,
                    _ => q2_numeric(CutoffKind::Lorentzian, &response, tau)?,
                };
                rows.push(FigureRow {
                    curve_id: curve,
                    delta,
                    tau,
                    q2_normalized: q2 / tau,
                });
            }
        }
    }
    Ok(rows)
}
