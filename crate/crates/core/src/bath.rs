//! Classical particle coupled to N harmonic oscillators,
//!
//!   H = p²/2M + V(q) + Σ_k [P_k²/2m + ½mω_k²R_k²] + q Σ_k c_k R_k,
//!
//! with thermal oscillator initial conditions. Its ensemble statistics are
//! the reference the GLE integrators are checked against.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrators::{Counterterm, Potential};
use crate::kernels::{cutoff_f, KernelSpec};
use crate::noise::{rng_for, standard_normal, NoiseGrid};

pub const MIN_MODES: usize = 100;
/// ω_max must be at least this multiple of Ω.
pub const MIN_OMEGA_MAX_RATIO: f64 = 8.0;
pub const DEFAULT_ENERGY_TOLERANCE: f64 = 1e-4;

/// Discretized bath: uniform frequencies with midpoint weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BathModes {
    pub omega: Vec<f64>,
    pub coupling: Vec<f64>,
    pub mass: f64,
    pub d_omega: f64,
    pub spec: KernelSpec,
}

/// ω_k = (k + ½)Δω on (0, ω_max], c_k² = (2mηω_k²/π) f(ω_k/Ω) Δω.
pub fn discretize_bath(spec: &KernelSpec, n_modes: usize, bath_mass: f64, omega_max: f64) -> Result<BathModes> {
    spec.validate()?;
    if !(bath_mass > 0.0 && bath_mass.is_finite()) {
        return Err(Error::invalid("bath_mass", "must be positive and finite"));
    }
    if n_modes < MIN_MODES {
        return Err(Error::TooFewModes {
            reason: format!("{n_modes} modes requested"),
            suggested_modes: MIN_MODES,
        });
    }
    if !(omega_max >= MIN_OMEGA_MAX_RATIO * spec.omega) || omega_max.is_infinite() {
        let d_omega = omega_max / n_modes as f64;
        return Err(Error::TooFewModes {
            reason: format!(
                "omega_max = {omega_max} is below {MIN_OMEGA_MAX_RATIO} * omega = {}",
                MIN_OMEGA_MAX_RATIO * spec.omega
            ),
            suggested_modes: ((MIN_OMEGA_MAX_RATIO * spec.omega / d_omega).ceil() as usize).max(MIN_MODES),
        });
    }
    let d_omega = omega_max / n_modes as f64;
    let mut omega = Vec::with_capacity(n_modes);
    let mut coupling = Vec::with_capacity(n_modes);
    for k in 0..n_modes {
        let w = (k as f64 + 0.5) * d_omega;
        let f = cutoff_f(spec.kind, w / spec.omega)?;
        omega.push(w);
        coupling.push((2.0 * bath_mass * spec.eta * w * w / PI * f * d_omega).sqrt());
    }
    Ok(BathModes {
        omega,
        coupling,
        mass: bath_mass,
        d_omega,
        spec: *spec,
    })
}

impl BathModes {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Σ_k c_k² cos(ω_k t)/(m ω_k²), the discrete stand-in for 2ηΔ_Ω(t).
    pub fn reconstructed_kernel(&self, t: f64) -> f64 {
        self.omega
            .iter()
            .zip(&self.coupling)
            .map(|(w, c)| c * c * (w * t).cos() / (self.mass * w * w))
            .sum()
    }

    /// κ = Σ c_k²/(m ω_k²), the curvature shift the bath induces.
    pub fn curvature_shift(&self) -> f64 {
        self.reconstructed_kernel(0.0)
    }

    /// Poincaré recurrence time 2π/Δω of the uniform grid.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.d_omega
    }

    pub fn omega_max(&self) -> f64 {
        self.d_omega * self.omega.len() as f64
    }

    /// Fails when `t_end` reaches the recurrence time.
    pub fn check_horizon(&self, t_end: f64) -> Result<()> {
        if t_end < self.recurrence_time() {
            return Ok(());
        }
        let needed = (t_end * self.omega_max() / (2.0 * PI)).ceil() as usize + 1;
        Err(Error::TooFewModes {
            reason: format!(
                "recurrence time {} does not exceed t_end = {t_end}",
                self.recurrence_time()
            ),
            suggested_modes: 2 * needed.max(MIN_MODES / 2),
        })
    }
}

/// Oscillator initial conditions drawn from the canonical distribution of
/// the uncoupled bath.
#[derive(Debug, Clone, PartialEq)]
pub struct BathRealization {
    pub r0: Vec<f64>,
    pub rdot0: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

/// R_k(0) ~ N(0, T/(mω_k²)), Ṙ_k(0) ~ N(0, T/m).
pub fn sample_thermal_ics(modes: &BathModes, temperature: f64, seed: u64, stream: u64) -> Result<BathRealization> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature", "the thermal bath needs T > 0"));
    }
    let mut rng = rng_for(seed, stream);
    let sv = (temperature / modes.mass).sqrt();
    let mut r0 = Vec::with_capacity(modes.len());
    let mut rdot0 = Vec::with_capacity(modes.len());
    for &w in &modes.omega {
        r0.push(sv / w * standard_normal(&mut rng));
        rdot0.push(sv * standard_normal(&mut rng));
    }
    Ok(BathRealization {
        r0,
        rdot0,
        seed,
        stream,
    })
}

/// Force of the free (uncoupled) bath on the particle, −Σ c_k R_k^free(t),
/// at the grid midpoints.
pub fn free_bath_force(modes: &BathModes, bath: &BathRealization, grid: NoiseGrid) -> Vec<f64> {
    // R(t) = Re[(R0 − i Ṙ0/ω) e^{iωt}], rotated step by step.
    let mut z: Vec<Complex64> = modes
        .omega
        .iter()
        .zip(bath.r0.iter().zip(&bath.rdot0))
        .map(|(w, (r, rd))| Complex64::new(*r, -rd / w) * Complex64::from_polar(1.0, 0.5 * w * grid.dt))
        .collect();
    let rot: Vec<Complex64> = modes
        .omega
        .iter()
        .map(|w| Complex64::from_polar(1.0, w * grid.dt))
        .collect();
    let mut out = Vec::with_capacity(grid.n_steps);
    for _ in 0..grid.n_steps {
        let mut s = 0.0;
        for ((zk, c), r) in z.iter_mut().zip(&modes.coupling).zip(&rot) {
            s += c * zk.re;
            *zk *= r;
        }
        out.push(-s);
    }
    out
}

/// Settings of one system-bath integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub potential: Potential,
    pub dt: f64,
    pub n_steps: usize,
    pub energy_tolerance: f64,
}

impl OracleConfig {
    pub fn new(potential: Potential, dt: f64, n_steps: usize) -> Self {
        Self {
            potential,
            dt,
            n_steps,
            energy_tolerance: DEFAULT_ENERGY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleState {
    pub step: usize,
    pub t: f64,
    pub q: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSummary {
    pub final_state: OracleState,
    /// Largest |E(t) − E(0)|/|E(0)| seen at the checked steps.
    pub energy_drift: f64,
}

/// Velocity-Verlet integration of the full (N+1)-body Hamiltonian. With
/// `Renormalized`, the counterterm ½κq² is added to H so that the bare V is
/// the effective potential. `observe` sees every step.
pub fn integrate_system_bath<O: FnMut(&OracleState)>(
    modes: &BathModes,
    bath: &BathRealization,
    config: &OracleConfig,
    q0: f64,
    v0: f64,
    mut observe: O,
) -> Result<OracleSummary> {
    let dt = config.dt;
    let n = modes.len();
    if bath.r0.len() != n || bath.rdot0.len() != n {
        return Err(Error::invalid("bath", "realization does not match the mode table"));
    }
    if !(dt > 0.0) || dt > 0.1 / modes.omega_max() * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "dt",
            format!("system-bath integration needs 0 < dt <= 0.1/omega_max = {}", 0.1 / modes.omega_max()),
        ));
    }
    config.potential.validate()?;
    modes.check_horizon(dt * config.n_steps as f64)?;
    let big_m = modes.spec.mass;
    let m = modes.mass;
    let kappa = modes.curvature_shift();
    let counter = match config.potential.counterterm {
        Counterterm::Renormalized => kappa,
        Counterterm::Bare => {
            if let Some(c) = quadratic_curvature(&config.potential, big_m) {
                if c - kappa <= 0.0 {
                    return Err(Error::InvertedCurvature { curvature: c - kappa });
                }
            }
            0.0
        }
    };
    let mw2: Vec<f64> = modes.omega.iter().map(|w| m * w * w).collect();
    let c = &modes.coupling;
    let mut r = bath.r0.clone();
    let mut p: Vec<f64> = bath.rdot0.iter().map(|v| m * v).collect();
    let mut q = q0;
    let mut pq = big_m * v0;
    let mut s: f64 = c.iter().zip(&r).map(|(a, b)| a * b).sum();

    let particle_force = |q: f64, s: f64| -config.potential.gradient(q, big_m) - s - counter * q;
    let energy = |q: f64, pq: f64, r: &[f64], p: &[f64]| -> f64 {
        let mut e = 0.5 * pq * pq / big_m + config.potential.energy(q, big_m) + 0.5 * counter * q * q;
        for k in 0..n {
            e += 0.5 * p[k] * p[k] / m + 0.5 * mw2[k] * r[k] * r[k] + q * c[k] * r[k];
        }
        e
    };
    let e0 = energy(q, pq, &r, &p);
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    let check_every = (config.n_steps / 50).max(1);
    let mut drift: f64 = 0.0;
    let mut state = OracleState { step: 0, t: 0.0, q, v: v0 };
    observe(&state);
    let half = 0.5 * dt;
    for step in 1..=config.n_steps {
        pq += half * particle_force(q, s);
        let q_new = q + dt * pq / big_m;
        // kick, drift, kick for every mode in one pass
        let mut acc = [0.0f64; 4];
        for (k, ((rk, pk), (&ck, &wk))) in r.iter_mut().zip(p.iter_mut()).zip(c.iter().zip(&mw2)).enumerate() {
            *pk += half * (-wk * *rk - ck * q);
            *rk += dt * *pk / m;
            *pk += half * (-wk * *rk - ck * q_new);
            acc[k & 3] += ck * *rk;
        }
        s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        q = q_new;
        pq += half * particle_force(q, s);
        if !(q.is_finite() && pq.is_finite()) {
            return Err(Error::Diverged {
                step,
                time: step as f64 * dt,
            });
        }
        if step % check_every == 0 || step == config.n_steps {
            drift = drift.max((energy(q, pq, &r, &p) - e0).abs() / scale);
            if drift > config.energy_tolerance {
                return Err(Error::EnergyDrift {
                    drift,
                    tolerance: config.energy_tolerance,
                });
            }
        }
        state = OracleState {
            step,
            t: step as f64 * dt,
            q,
            v: pq / big_m,
        };
        observe(&state);
    }
    Ok(OracleSummary {
        final_state: state,
        energy_drift: drift,
    })
}

fn quadratic_curvature(potential: &Potential, mass: f64) -> Option<f64> {
    use crate::integrators::PotentialKind;
    match potential.kind {
        PotentialKind::Free => Some(0.0),
        PotentialKind::Harmonic { omega0 } => Some(mass * omega0 * omega0),
        PotentialKind::QuarticDoubleWell { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{memory_kernel, CutoffKind};

    fn lorentz(delta: f64) -> KernelSpec {
        KernelSpec::from_delta(CutoffKind::Lorentzian, delta).unwrap()
    }

    #[test]
    fn kernel_tail_at_sixteen_omega() {
        // The Lorentzian spectrum beyond 16Ω carries (2/π)·atan(1/16) ≈ 4%
        // of 2ηΔ(0), so the t = 0 reconstruction falls short by that much.
        let spec = lorentz(0.3);
        let modes = discretize_bath(&spec, 4096, 1.0, 16.0 * spec.omega).unwrap();
        let target = 2.0 * spec.eta * memory_kernel(&spec, 0.0);
        let deficit = 1.0 - modes.reconstructed_kernel(0.0) / target;
        let tail = 2.0 / PI * (1.0f64 / 16.0).atan();
        assert!((deficit - tail).abs() < 1e-4, "{deficit} vs {tail}");
    }

    #[test]
    fn coupling_scales_with_eta() {
        let a = discretize_bath(&KernelSpec::new(CutoffKind::Gaussian, 1.0, 2.0, 1.0, 1.0).unwrap(), 200, 1.0, 20.0).unwrap();
        let b = discretize_bath(&KernelSpec::new(CutoffKind::Gaussian, 2.0, 2.0, 1.0, 1.0).unwrap(), 200, 1.0, 20.0).unwrap();
        for (x, y) in a.coupling.iter().zip(&b.coupling) {
            assert!((2.0 * x * x - y * y).abs() < 1e-12 * y * y + 1e-300);
        }
    }

    #[test]
    fn discretization_preconditions() {
        let spec = lorentz(0.3);
        assert!(matches!(
            discretize_bath(&spec, 50, 1.0, 100.0),
            Err(Error::TooFewModes { suggested_modes: 100, .. })
        ));
        assert!(matches!(
            discretize_bath(&spec, 1000, 1.0, 2.0 * spec.omega),
            Err(Error::TooFewModes { .. })
        ));
        let modes = discretize_bath(&spec, 1000, 1.0, 40.0 * spec.omega).unwrap();
        assert!(modes.check_horizon(0.5 * modes.recurrence_time()).is_ok());
        assert!(modes.check_horizon(modes.recurrence_time()).is_err());
        assert!(modes.omega.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn thermal_position_variance() {
        let spec = lorentz(0.3);
        let modes = discretize_bath(&spec, 100, 1.0, 40.0).unwrap();
        let k = 7;
        let want = 2.0 / (modes.omega[k] * modes.omega[k]);
        let xs: crate::stats::Moments = (0..100_000)
            .map(|i| sample_thermal_ics(&modes, 2.0, 1, i).unwrap().r0[k])
            .collect();
        // SE of a Gaussian sample variance is σ²√(2/(n−1))
        let se = want * (2.0 / 99_999.0f64).sqrt();
        assert!((xs.variance() - want).abs() < 5.0 * se);
        assert!(sample_thermal_ics(&modes, 0.0, 1, 0).is_err());
    }

    #[test]
    fn decoupled_particle_follows_bare_potential() {
        let spec = lorentz(0.3);
        let mut modes = discretize_bath(&spec, 100, 1.0, 40.0 * spec.omega).unwrap();
        modes.coupling.iter_mut().for_each(|c| *c = 0.0);
        let bath = sample_thermal_ics(&modes, 1.0, 3, 0).unwrap();
        let dt = 0.05 / modes.omega_max();
        let n = (1.0 / dt) as usize;
        let cfg = OracleConfig::new(Potential::harmonic(2.0), dt, n);
        let end = integrate_system_bath(&modes, &bath, &cfg, 1.0, 0.0, |_| {}).unwrap();
        let t = end.final_state.t;
        assert!((end.final_state.q - (2.0 * t).cos()).abs() < 1e-5);
    }

    #[test]
    fn energy_is_conserved() {
        let spec = lorentz(0.3);
        let modes = discretize_bath(&spec, 512, 1.0, 40.0 * spec.omega).unwrap();
        let bath = sample_thermal_ics(&modes, 1.0, 5, 0).unwrap();
        let dt = 0.05 / modes.omega_max();
        let cfg = OracleConfig::new(Potential::harmonic(1.0), dt, 4000);
        let out = integrate_system_bath(&modes, &bath, &cfg, 0.0, 0.0, |_| {}).unwrap();
        assert!(out.energy_drift < 1e-4, "{}", out.energy_drift);
        let mut strict = cfg;
        strict.energy_tolerance = 1e-14;
        assert!(matches!(
            integrate_system_bath(&modes, &bath, &strict, 0.0, 0.0, |_| {}),
            Err(Error::EnergyDrift { .. })
        ));
    }

    #[test]
    fn bare_free_oracle_is_rejected() {
        let spec = lorentz(0.3);
        let modes = discretize_bath(&spec, 128, 1.0, 40.0 * spec.omega).unwrap();
        let bath = sample_thermal_ics(&modes, 1.0, 5, 0).unwrap();
        let cfg = OracleConfig::new(
            Potential::free().with_counterterm(Counterterm::Bare),
            0.1 / modes.omega_max(),
            10,
        );
        assert!(matches!(
            integrate_system_bath(&modes, &bath, &cfg, 0.0, 0.0, |_| {}),
            Err(Error::InvertedCurvature { .. })
        ));
    }

    #[test]
    fn free_force_matches_direct_sum() {
        let spec = lorentz(0.3);
        let modes = discretize_bath(&spec, 128, 1.0, 40.0 * spec.omega).unwrap();
        let bath = sample_thermal_ics(&modes, 1.0, 2, 0).unwrap();
        let grid = NoiseGrid::new(0.01, 500).unwrap();
        let xi = free_bath_force(&modes, &bath, grid);
        for i in [0, 250, 499] {
            let t = grid.midpoint(i);
            let direct: f64 = (0..modes.len())
                .map(|k| {
                    let w = modes.omega[k];
                    -modes.coupling[k] * (bath.r0[k] * (w * t).cos() + bath.rdot0[k] / w * (w * t).sin())
                })
                .sum();
            assert!((xi[i] - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }
}
