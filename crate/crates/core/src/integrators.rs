//! Time stepping for the generalized Langevin equation
//!
//!   M Q̈ + V̄′(Q) + 2η ∫₀ᵗ Δ_Ω(t − t′) Q̇(t′) dt′ = ξ(t)
//!
//! in four modes. All schemes are predictor-corrector (stochastic Heun)
//! with the noise value of a step held at the step midpoint.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{self, counterterm_shift, memory_kernel, CutoffKind, KernelSpec};
use crate::noise::{NoiseGenerator, NoiseGrid, NoisePath};
use crate::quad::{self, KERNEL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Free,
    /// V = ½ M ω₀² Q².
    Harmonic { omega0: f64 },
    /// V = a (Q² − b²)².
    QuarticDoubleWell { a: f64, b: f64 },
}

/// Whether the bath-induced curvature shift −ηΔ_Ω(0)Q² is left in place
/// (`Bare`) or cancelled by a counterterm (`Renormalized`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Counterterm {
    Bare,
    #[default]
    Renormalized,
}

impl Counterterm {
    pub fn name(self) -> &'static str {
        match self {
            Counterterm::Bare => "bare",
            Counterterm::Renormalized => "renormalized",
        }
    }
}

impl FromStr for Counterterm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" => Ok(Counterterm::Bare),
            "renormalized" => Ok(Counterterm::Renormalized),
            other => Err(Error::invalid(
                "counterterm",
                format!("unknown value `{other}`; expected bare or renormalized"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub counterterm: Counterterm,
}

impl Potential {
    pub fn free() -> Self {
        Self {
            kind: PotentialKind::Free,
            counterterm: Counterterm::Renormalized,
        }
    }

    pub fn harmonic(omega0: f64) -> Self {
        Self {
            kind: PotentialKind::Harmonic { omega0 },
            counterterm: Counterterm::Renormalized,
        }
    }

    pub fn quartic(a: f64, b: f64) -> Self {
        Self {
            kind: PotentialKind::QuarticDoubleWell { a, b },
            counterterm: Counterterm::Renormalized,
        }
    }

    pub fn with_counterterm(mut self, counterterm: Counterterm) -> Self {
        self.counterterm = counterterm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PotentialKind::Free => Ok(()),
            PotentialKind::Harmonic { omega0 } => {
                if omega0 >= 0.0 && omega0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("omega0", "must be non-negative and finite"))
                }
            }
            PotentialKind::QuarticDoubleWell { a, b } => {
                if a > 0.0 && a.is_finite() && b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("quartic", "needs a > 0 and finite b"))
                }
            }
        }
    }

    /// V′(Q) of the bare potential.
    pub fn gradient(&self, q: f64, mass: f64) -> f64 {
        match self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::Harmonic { omega0 } => mass * omega0 * omega0 * q,
            PotentialKind::QuarticDoubleWell { a, b } => 4.0 * a * q * (q * q - b * b),
        }
    }

    pub fn energy(&self, q: f64, mass: f64) -> f64 {
        match self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::Harmonic { omega0 } => 0.5 * mass * omega0 * omega0 * q * q,
            PotentialKind::QuarticDoubleWell { a, b } => a * (q * q - b * b).powi(2),
        }
    }

    /// Curvature of V at large |Q| for the stability check, if quadratic.
    fn quadratic_curvature(&self, mass: f64) -> Option<f64> {
        match self.kind {
            PotentialKind::Free => Some(0.0),
            PotentialKind::Harmonic { omega0 } => Some(mass * omega0 * omega0),
            PotentialKind::QuarticDoubleWell { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorKind {
    /// Trapezoidal memory sum over the full history, O(N²).
    FullMemory,
    /// Auxiliary-variable form of the Lorentzian kernel, O(N).
    OuEmbedding,
    /// Derivative expansion truncated at the given order (1 to 3).
    Truncated { order: usize },
    /// White noise and local friction.
    Markovian,
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegratorKind::FullMemory => f.write_str("full"),
            IntegratorKind::OuEmbedding => f.write_str("embed"),
            IntegratorKind::Truncated { order } => write!(f, "truncated:{order}"),
            IntegratorKind::Markovian => f.write_str("markov"),
        }
    }
}

impl FromStr for IntegratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(
                "integrator",
                format!("unknown integrator `{s}`; expected full, embed, truncated:N (N = 1, 2, 3) or markov"),
            )
        };
        match s {
            "full" => Ok(IntegratorKind::FullMemory),
            "embed" => Ok(IntegratorKind::OuEmbedding),
            "markov" => Ok(IntegratorKind::Markovian),
            _ => {
                let order = s.strip_prefix("truncated:").ok_or_else(bad)?;
                let order: usize = order.parse().map_err(|_| bad())?;
                if !(1..=3).contains(&order) {
                    return Err(bad());
                }
                Ok(IntegratorKind::Truncated { order })
            }
        }
    }
}

/// Source of the truncated-equation coefficients M̄, η₁, η₃, η₄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientMode {
    /// J_n(Ω t) at the current time.
    #[default]
    TimeDependent,
    /// J_n(∞), the late-time constants.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub spec: KernelSpec,
    pub potential: Potential,
    pub kind: IntegratorKind,
    pub dt: f64,
    pub n_steps: usize,
    /// Include the boundary term −2ηΔ_Ω(t)Q₀ from the integration by parts.
    pub initial_slip: bool,
    /// Truncate the memory sum at lags W/Ω (full-memory mode only).
    pub memory_window: Option<f64>,
    pub coefficients: CoefficientMode,
}

impl IntegratorConfig {
    pub fn new(spec: KernelSpec, potential: Potential, kind: IntegratorKind, dt: f64, n_steps: usize) -> Self {
        Self {
            spec,
            potential,
            kind,
            dt,
            n_steps,
            initial_slip: false,
            memory_window: None,
            coefficients: CoefficientMode::TimeDependent,
        }
    }

    pub fn grid(&self) -> Result<NoiseGrid> {
        NoiseGrid::new(self.dt, self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub q: f64,
    pub v: f64,
    /// Memory force u (embedding) or acceleration Q̈ (truncated order ≥ 2).
    pub aux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub aux: Vec<f64>,
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub seed: u64,
    pub spec: KernelSpec,
}

/// Per-run constants of each mode.
#[derive(Debug, Clone)]
enum Prepared {
    Markov,
    Full {
        /// w_j = 2η dt Δ_Ω(j dt)
        weights: Vec<f64>,
        window: usize,
    },
    Embed {
        decay: f64,
        one_minus: f64,
        psi: f64,
    },
    Truncated {
        order: usize,
        /// M̄, η₁, η₃ on the half-step grid (index 2n is t_n).
        mass: Vec<f64>,
        eta1: Vec<f64>,
        eta3: Vec<f64>,
    },
}

/// A validated integrator with its tables; shared by all trajectories.
#[derive(Debug, Clone)]
pub struct Integrator {
    config: IntegratorConfig,
    prepared: Prepared,
    shift: f64,
}

fn psi(z: f64) -> f64 {
    // (z − 1 + e^{−z})/z, with its series near 0
    if z < 1e-4 {
        z / 2.0 - z * z / 6.0
    } else if z.is_infinite() {
        1.0
    } else {
        (z - 1.0 + (-z).exp()) / z
    }
}

impl Integrator {
    pub fn new(config: IntegratorConfig) -> Result<Self> {
        let spec = config.spec;
        spec.validate()?;
        config.potential.validate()?;
        let grid = config.grid()?;
        let alpha = spec.alpha();
        if config.dt > 0.1 * alpha * (1.0 + 1e-12) {
            return Err(Error::invalid("dt", format!("must not exceed M/(10 eta) = {}", 0.1 * alpha)));
        }
        let colored = config.kind != IntegratorKind::Markovian;
        if colored {
            grid.check_resolves(&spec)?;
            if config.potential.counterterm == Counterterm::Bare {
                if let Some(c) = config.potential.quadratic_curvature(spec.mass) {
                    let curvature = c - counterterm_shift(&spec);
                    if curvature <= 0.0 {
                        return Err(Error::InvertedCurvature { curvature });
                    }
                }
            }
        }
        let prepared = match config.kind {
            IntegratorKind::Markovian => Prepared::Markov,
            IntegratorKind::FullMemory => {
                let limit = (0.25 / spec.omega).min(alpha / 100.0);
                if config.dt > limit * (1.0 + 1e-12) {
                    return Err(Error::invalid(
                        "dt",
                        format!("full-memory integration needs dt <= min(1/(4 omega), M/(100 eta)) = {limit}"),
                    ));
                }
                let window = match config.memory_window {
                    Some(w) if w > 0.0 => ((w / (spec.omega * config.dt)).ceil() as usize).max(1),
                    Some(_) => return Err(Error::invalid("memory_window", "must be positive")),
                    None => usize::MAX,
                };
                let len = config.n_steps.min(window).saturating_add(1);
                let weights = (0..len)
                    .map(|j| 2.0 * spec.eta * config.dt * memory_kernel(&spec, j as f64 * config.dt))
                    .collect();
                Prepared::Full { weights, window }
            }
            IntegratorKind::OuEmbedding => {
                if spec.kind != CutoffKind::Lorentzian {
                    return Err(Error::Unsupported(format!(
                        "the auxiliary-variable integrator needs the lorentzian kernel, got {}",
                        spec.kind
                    )));
                }
                let z = spec.omega * config.dt;
                let decay = (-z).exp();
                Prepared::Embed {
                    decay,
                    one_minus: -(-z).exp_m1(),
                    psi: psi(z),
                }
            }
            IntegratorKind::Truncated { order } => truncated_tables(&config, order)?,
        };
        let shift = if colored && config.potential.counterterm == Counterterm::Bare {
            counterterm_shift(&spec)
        } else {
            0.0
        };
        Ok(Self {
            config,
            prepared,
            shift,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    /// The noise this integrator expects: white for the Markovian mode,
    /// the kernel's colored noise otherwise.
    pub fn noise_generator(&self) -> Result<NoiseGenerator> {
        let grid = self.config.grid()?;
        match self.config.kind {
            IntegratorKind::Markovian => NoiseGenerator::white(&self.config.spec, grid),
            _ => NoiseGenerator::colored(&self.config.spec, grid),
        }
    }

    /// Effective force −V̄′(Q), plus the optional initial-slip term.
    fn force(&self, q: f64, t: f64, q0: f64) -> f64 {
        let spec = &self.config.spec;
        let mut f = -self.config.potential.gradient(q, spec.mass) + self.shift * q;
        if self.config.initial_slip && self.config.kind != IntegratorKind::Markovian {
            f -= 2.0 * spec.eta * memory_kernel(spec, t) * q0;
        }
        f
    }

    /// Integrates from (q0, v0) driven by `noise` (one value per step),
    /// calling `observe` on the initial state and after every step.
    pub fn run<O: FnMut(&State)>(&self, q0: f64, v0: f64, noise: &[f64], mut observe: O) -> Result<State> {
        if noise.len() < self.config.n_steps {
            return Err(Error::invalid(
                "noise",
                format!("needs {} values, got {}", self.config.n_steps, noise.len()),
            ));
        }
        let mut stepper = Stepper::new(self, q0, v0);
        observe(&stepper.state);
        for &xi in &noise[..self.config.n_steps] {
            stepper.step(xi)?;
            observe(&stepper.state);
        }
        Ok(stepper.state)
    }

    /// Integrates one noise path and records every `stride`-th state.
    pub fn trajectory(&self, q0: f64, v0: f64, noise: &NoisePath, stride: usize) -> Result<Trajectory> {
        let stride = stride.max(1);
        let mut out = Trajectory {
            times: vec![],
            q: vec![],
            v: vec![],
            aux: vec![],
            integrator: self.config.kind,
            dt: self.config.dt,
            seed: noise.seed,
            spec: self.config.spec,
        };
        self.run(q0, v0, &noise.values, |s| {
            if s.step % stride == 0 {
                out.times.push(s.t);
                out.q.push(s.q);
                out.v.push(s.v);
                out.aux.push(s.aux);
            }
        })?;
        Ok(out)
    }

    pub fn stepper(&self, q0: f64, v0: f64) -> Stepper<'_> {
        Stepper::new(self, q0, v0)
    }
}

/// Single-trajectory state, advanced one step at a time.
pub struct Stepper<'a> {
    integrator: &'a Integrator,
    pub state: State,
    q0: f64,
    /// Velocity history (full-memory mode).
    history: Vec<f64>,
    /// Memory force at the current step (full-memory mode).
    memory: f64,
}

impl<'a> Stepper<'a> {
    fn new(integrator: &'a Integrator, q0: f64, v0: f64) -> Self {
        let mut history = Vec::new();
        if let Prepared::Full { .. } = integrator.prepared {
            history.reserve(integrator.config.n_steps + 1);
            history.push(v0);
        }
        Self {
            integrator,
            state: State {
                step: 0,
                t: 0.0,
                q: q0,
                v: v0,
                aux: 0.0,
            },
            q0,
            history,
            memory: 0.0,
        }
    }

    pub fn step(&mut self, xi: f64) -> Result<()> {
        let it = self.integrator;
        let h = it.config.dt;
        let m = it.config.spec.mass;
        let eta = it.config.spec.eta;
        let State { step, t, q, v, aux } = self.state;
        let t1 = (step + 1) as f64 * h;
        let (q1, v1, aux1) = match &it.prepared {
            Prepared::Markov => {
                let a0 = (it.force(q, t, self.q0) - eta * v + xi) / m;
                let qp = q + h * v;
                let vp = v + h * a0;
                let ap = (it.force(qp, t1, self.q0) - eta * vp + xi) / m;
                (q + 0.5 * h * (v + vp), v + 0.5 * h * (a0 + ap), 0.0)
            }
            Prepared::Full { weights, window } => {
                let n1 = step + 1;
                let first = n1.saturating_sub(*window);
                let mut partial = 0.0;
                for j in first..n1 {
                    let w = weights[n1 - j];
                    partial += if j == 0 { 0.5 * w } else { w } * self.history[j];
                }
                let head = 0.5 * weights[0];
                let a0 = (it.force(q, t, self.q0) - self.memory + xi) / m;
                let qp = q + h * v;
                let vp = v + h * a0;
                let ap = (it.force(qp, t1, self.q0) - (partial + head * vp) + xi) / m;
                let q1 = q + 0.5 * h * (v + vp);
                let v1 = v + 0.5 * h * (a0 + ap);
                self.memory = partial + head * v1;
                self.history.push(v1);
                (q1, v1, self.memory)
            }
            Prepared::Embed { decay, one_minus, psi } => {
                let advance = |v_end: f64| decay * aux + eta * (one_minus * v + psi * (v_end - v));
                let a0 = (it.force(q, t, self.q0) - aux + xi) / m;
                let qp = q + h * v;
                let vp = v + h * a0;
                let up = advance(vp);
                let ap = (it.force(qp, t1, self.q0) - up + xi) / m;
                let q1 = q + 0.5 * h * (v + vp);
                let v1 = v + 0.5 * h * (a0 + ap);
                (q1, v1, advance(v1))
            }
            Prepared::Truncated { order, mass, eta1, eta3 } => {
                let (i0, im, i1) = (2 * step, 2 * step + 1, 2 * step + 2);
                if *order == 1 {
                    let a0 = (it.force(q, t, self.q0) - eta1[i0] * v + xi) / mass[i0];
                    let qp = q + h * v;
                    let vp = v + h * a0;
                    let ap = (it.force(qp, t1, self.q0) - eta1[i1] * vp + xi) / mass[i1];
                    (q + 0.5 * h * (v + vp), v + 0.5 * h * (a0 + ap), ap)
                } else {
                    // η₃ ȧ = M̄ (T − a), T = (F + ξ − η₁ v)/M̄, advanced with
                    // the exponential-Heun update.
                    let target0 = (it.force(q, t, self.q0) + xi - eta1[i0] * v) / mass[i0];
                    let z = if eta3[im] > 0.0 { mass[im] / eta3[im] * h } else { f64::INFINITY };
                    let e = (-z).exp();
                    let qp = q + h * v;
                    let vp = v + h * aux;
                    let ap = e * aux + (1.0 - e) * target0;
                    let target1 = (it.force(qp, t1, self.q0) + xi - eta1[i1] * vp) / mass[i1];
                    let a1 = ap + psi(z) * (target1 - target0);
                    (q + 0.5 * h * (v + vp), v + 0.5 * h * (aux + a1), a1)
                }
            }
        };
        if !(q1.is_finite() && v1.is_finite() && aux1.is_finite()) {
            return Err(Error::Diverged { step: step + 1, time: t1 });
        }
        self.state = State {
            step: step + 1,
            t: t1,
            q: q1,
            v: v1,
            aux: aux1,
        };
        Ok(())
    }
}

/// J_n(Ω t) on the half-step grid, accumulated piece by piece.
fn j_table(kind: CutoffKind, n: usize, omega: f64, h: f64, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len);
    if kind == CutoffKind::Lorentzian {
        for i in 0..len {
            out.push(kernels::j_coeff_kind(kind, n, omega * h * i as f64)?);
        }
        return Ok(out);
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..len {
        let (a, b) = (omega * h * (i - 1) as f64, omega * h * i as f64);
        acc += quad::integrate(|x| x.powi(n as i32) * kernels::unit_kernel(kind, x), a, b, KERNEL_TOLERANCE)?;
        out.push(sign / fact * acc);
    }
    Ok(out)
}

fn truncated_tables(config: &IntegratorConfig, order: usize) -> Result<Prepared> {
    let spec = config.spec;
    if !spec.kind.has_finite_moments() {
        return Err(Error::Unsupported(format!(
            "the truncated expansion needs a kernel with finite moments (gaussian or lorentzian), got {}",
            spec.kind
        )));
    }
    if !(1..=3).contains(&order) {
        return Err(Error::invalid("order", "truncated orders 1, 2 and 3 exist"));
    }
    let len = 2 * config.n_steps + 1;
    let half = 0.5 * config.dt;
    let (eta, omega, m) = (spec.eta, spec.omega, spec.mass);
    let table = |n: usize| -> Result<Vec<f64>> {
        match config.coefficients {
            CoefficientMode::TimeDependent => j_table(spec.kind, n, omega, half, len),
            CoefficientMode::Asymptotic => Ok(vec![kernels::j_coeff_kind(spec.kind, n, f64::INFINITY)?; len]),
        }
    };
    let j0 = table(0)?;
    let j1 = table(1)?;
    let mass: Vec<f64> = j1.iter().map(|j| m + 2.0 * eta * j / omega).collect();
    let delta = spec.delta();
    if let Some(i) = mass.iter().position(|&x| x <= 0.0) {
        return Err(Error::IllPosedTruncation {
            time: i as f64 * half,
            delta,
            reason: format!("effective mass {} is not positive", mass[i]),
        });
    }
    let eta1 = j0.iter().map(|j| 2.0 * eta * j).collect();
    let eta3 = if order >= 2 {
        table(2)?.iter().map(|j| 2.0 * eta * j / (omega * omega)).collect()
    } else {
        vec![0.0; len]
    };
    if order == 3 {
        let eta4: Vec<f64> = table(3)?
            .iter()
            .map(|j| 2.0 * eta * j / omega.powi(3))
            .collect();
        if let Some(i) = eta4.iter().position(|&x| x < 0.0) {
            return Err(Error::IllPosedTruncation {
                time: i as f64 * half,
                delta,
                reason: format!(
                    "fourth-derivative coefficient {:e} is negative, so the truncated equation has a growing mode",
                    eta4[i]
                ),
            });
        }
        return Err(Error::Unsupported(
            "order-3 truncation with a non-negative fourth-derivative coefficient".into(),
        ));
    }
    Ok(Prepared::Truncated {
        order,
        mass,
        eta1,
        eta3,
    })
}
