//! Cutoff functions, memory kernels and the expansion coefficients built
//! from them.
//!
//! Every kernel is stored in dimensionless form `k(x)` with `x = Ω t`, so
//! that `Δ_Ω(t) = Ω k(Ω t)` and `∫ k = 1` over the real line.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quad::{self, KERNEL_TOLERANCE};

/// Highest J_n order served for kernels whose moments all exist.
pub const DEFAULT_MAX_J_ORDER: usize = 4;

/// Highest J_n order for the sharp and exponential cutoffs; beyond it the
/// moment integrals diverge as y grows.
pub const DIVERGENT_MAX_J_ORDER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutoffKind {
    Sharp,
    ExponentialCut,
    Gaussian,
    Lorentzian,
}

impl CutoffKind {
    pub const ALL: [CutoffKind; 4] = [
        CutoffKind::Sharp,
        CutoffKind::ExponentialCut,
        CutoffKind::Gaussian,
        CutoffKind::Lorentzian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CutoffKind::Sharp => "sharp",
            CutoffKind::ExponentialCut => "exponential",
            CutoffKind::Gaussian => "gaussian",
            CutoffKind::Lorentzian => "lorentzian",
        }
    }

    pub fn max_j_order(self) -> usize {
        match self {
            CutoffKind::Sharp | CutoffKind::ExponentialCut => DIVERGENT_MAX_J_ORDER,
            CutoffKind::Gaussian | CutoffKind::Lorentzian => DEFAULT_MAX_J_ORDER,
        }
    }

    /// Kinds whose kernel moments are all finite.
    pub fn has_finite_moments(self) -> bool {
        matches!(self, CutoffKind::Gaussian | CutoffKind::Lorentzian)
    }
}

impl fmt::Display for CutoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sharp" => Ok(CutoffKind::Sharp),
            "exponential" | "exponential-cut" | "exponentialcut" | "exp" => {
                Ok(CutoffKind::ExponentialCut)
            }
            "gaussian" => Ok(CutoffKind::Gaussian),
            "lorentzian" => Ok(CutoffKind::Lorentzian),
            other => Err(Error::invalid(
                "kernel",
                format!("unknown kind `{other}`; expected one of sharp, exponential, gaussian, lorentzian"),
            )),
        }
    }
}

/// Cutoff kind plus the physical parameters of the particle and bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: CutoffKind,
    /// Dissipation coefficient η (mass/time).
    pub eta: f64,
    /// Cutoff frequency Ω (1/time).
    pub omega: f64,
    /// Particle mass M.
    pub mass: f64,
    /// Temperature T in energy units.
    pub temperature: f64,
}

impl KernelSpec {
    pub fn new(kind: CutoffKind, eta: f64, omega: f64, mass: f64, temperature: f64) -> Result<Self> {
        let spec = Self {
            kind,
            eta,
            omega,
            mass,
            temperature,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the spec with M = η = T = 1 and Ω = 1/δ, so that τ = t.
    pub fn from_delta(kind: CutoffKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", "must be positive and finite"));
        }
        Self::new(kind, 1.0, 1.0 / delta, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        positive("omega", self.omega)?;
        positive("mass", self.mass)?;
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("temperature", "must be non-negative and finite"));
        }
        Ok(())
    }

    /// δ = η / (M Ω).
    pub fn delta(&self) -> f64 {
        self.eta / (self.mass * self.omega)
    }

    /// α = M / η, the velocity relaxation time.
    pub fn alpha(&self) -> f64 {
        self.mass / self.eta
    }

    /// τ = t / α.
    pub fn tau(&self, t: f64) -> f64 {
        t / self.alpha()
    }

    pub fn time(&self, tau: f64) -> f64 {
        tau * self.alpha()
    }

    /// Unit of ⟨Q²⟩ used by the analytic module: 2 M T / η².
    pub fn q2_unit(&self) -> f64 {
        2.0 * self.mass * self.temperature / (self.eta * self.eta)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// f(ω/Ω) for the four cutoffs.
pub fn cutoff_f(kind: CutoffKind, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("cutoff argument must be non-negative, got {x}")));
    }
    Ok(match kind {
        CutoffKind::Sharp => {
            if x <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        CutoffKind::ExponentialCut => (-x).exp(),
        CutoffKind::Gaussian => (-x * x).exp(),
        CutoffKind::Lorentzian => 1.0 / (1.0 + x * x),
    })
}

/// Dimensionless kernel k(x) with Δ_Ω(t) = Ω k(Ω t).
pub fn unit_kernel(kind: CutoffKind, x: f64) -> f64 {
    let x = x.abs();
    match kind {
        CutoffKind::Sharp => {
            if x < 1e-8 {
                (1.0 - x * x / 6.0) / PI
            } else {
                x.sin() / (PI * x)
            }
        }
        CutoffKind::ExponentialCut => 1.0 / (PI * (1.0 + x * x)),
        CutoffKind::Gaussian => (-0.25 * x * x).exp() / (2.0 * PI.sqrt()),
        CutoffKind::Lorentzian => 0.5 * (-x).exp(),
    }
}

/// Δ_Ω(dt), units 1/time.
pub fn memory_kernel(spec: &KernelSpec, dt: f64) -> f64 {
    spec.omega * unit_kernel(spec.kind, spec.omega * dt)
}

/// Curvature shift 2ηΔ_Ω(0) generated by the bath.
pub fn counterterm_shift(spec: &KernelSpec) -> f64 {
    2.0 * spec.eta * memory_kernel(spec, 0.0)
}

fn check_order(kind: CutoffKind, n: usize) -> Result<()> {
    let max = kind.max_j_order();
    if n > max {
        return Err(Error::UnsupportedOrder { kind, order: n, max });
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// J_n(y) = ((−1)ⁿ/n!) ∫₀^y xⁿ k(x) dx. Closed forms are used for the
/// Lorentzian kernel; `y = ∞` is accepted where the integral converges.
pub fn j_coeff(spec: &KernelSpec, n: usize, y: f64) -> Result<f64> {
    j_coeff_kind(spec.kind, n, y)
}

/// As [`j_coeff`], for a bare cutoff kind.
pub fn j_coeff_kind(kind: CutoffKind, n: usize, y: f64) -> Result<f64> {
    check_order(kind, n)?;
    check_y(y)?;
    if kind == CutoffKind::Lorentzian {
        return Ok(lorentzian_j(n, y));
    }
    j_coeff_quadrature(kind, n, y)
}

fn check_y(y: f64) -> Result<()> {
    if y >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("J_n argument must be non-negative, got {y}")))
    }
}

/// Lorentzian J_n: ((−1)ⁿ/2)·[1 − e^{−y} Σ_{i≤n} yⁱ/i!].
fn lorentzian_j(n: usize, y: f64) -> f64 {
    if y.is_infinite() {
        return 0.5 * sign(n);
    }
    let mut term = 1.0;
    let mut partial = 1.0;
    for i in 1..=n {
        term *= y / i as f64;
        partial += term;
    }
    0.5 * sign(n) * (1.0 - (-y).exp() * partial)
}

/// J_n(y) by adaptive quadrature for any kind, bypassing closed forms.
pub fn j_coeff_quadrature(kind: CutoffKind, n: usize, y: f64) -> Result<f64> {
    check_order(kind, n)?;
    check_y(y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let pref = sign(n) / factorial(n);
    let integrand = move |x: f64| x.powi(n as i32) * unit_kernel(kind, x);
    let moment = if y.is_infinite() {
        match kind {
            CutoffKind::Sharp if n == 0 => quad::alternating_series(
                |k| {
                    let a = k as f64 * PI;
                    quad::integrate(integrand, a, a + PI, KERNEL_TOLERANCE)
                },
                KERNEL_TOLERANCE,
            )?,
            CutoffKind::Sharp | CutoffKind::ExponentialCut if n > 0 => {
                return Err(Error::Domain(format!(
                    "J_{n}(∞) diverges for the {kind} cutoff"
                )))
            }
            _ => quad::integrate_to_infinity(integrand, 0.0, KERNEL_TOLERANCE)?,
        }
    } else {
        let mut f = integrand;
        quad::integrate_with_breaks(&mut f, &breakpoints(kind, y), KERNEL_TOLERANCE)?
    };
    Ok(pref * moment)
}

/// Sub-range boundaries: zeros of sin for the sharp kernel, a geometric
/// ladder otherwise.
fn breakpoints(kind: CutoffKind, y: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    if kind == CutoffKind::Sharp {
        let mut k = 1.0;
        while k * PI < y {
            pts.push(k * PI);
            k += 1.0;
        }
    } else {
        let mut b = 1.0;
        while b < y {
            pts.push(b);
            b *= 2.0;
        }
    }
    pts.push(y);
    pts
}

/// One-sided Laplace transform Δ̃_δ(s) = ∫₀^∞ e^{−sτ} Δ_δ(τ) dτ, with
/// Δ_δ(τ) = (M/η) Δ_Ω(ατ). Substituting y = τ/δ gives ∫₀^∞ e^{−δ s y} k(y) dy.
pub fn laplace_kernel(spec: &KernelSpec, s: f64) -> Result<f64> {
    laplace_unit(spec.kind, spec.delta() * s)
}

/// ∫₀^∞ e^{−x y} k(y) dy for x ≥ 0.
pub fn laplace_unit(kind: CutoffKind, x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!(
            "Laplace argument must be finite and non-negative, got {x}"
        )));
    }
    let integrand = move |y: f64| (-x * y).exp() * unit_kernel(kind, y);
    match kind {
        CutoffKind::Lorentzian => Ok(0.5 / (1.0 + x)),
        CutoffKind::Sharp => quad::alternating_series(
            |k| {
                let a = k as f64 * PI;
                quad::integrate(integrand, a, a + PI, KERNEL_TOLERANCE)
            },
            KERNEL_TOLERANCE,
        ),
        _ => quad::integrate_to_infinity(integrand, 0.0, KERNEL_TOLERANCE),
    }
}

/// Taylor data of R(x) = 2Δ̃(x) − 1 and of its powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoeffs {
    n_max: usize,
    k_max: usize,
    /// r[j] = [x^j] R(x), j = 0..=k_max (r[0] = 0).
    taylor: Vec<f64>,
    /// Row n-1 holds R^{(n)}_{0,k} for k = 0..=k_max.
    table: Vec<Vec<f64>>,
}

impl SeriesCoeffs {
    fn from_taylor(taylor: Vec<f64>, n_max: usize) -> Self {
        let k_max = taylor.len() - 1;
        let mut table = Vec::with_capacity(n_max);
        let mut power = taylor.clone();
        for n in 1..=n_max {
            if n > 1 {
                let mut next = vec![0.0; k_max + 1];
                for (i, &a) in power.iter().enumerate() {
                    for (j, &b) in taylor.iter().enumerate().take(k_max + 1 - i) {
                        next[i + j] += a * b;
                    }
                }
                power = next;
            }
            table.push(
                power
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| factorial(k) * c)
                    .collect(),
            );
        }
        Self {
            n_max,
            k_max,
            taylor,
            table,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// R^{(n)}_{0,k}, the k-th derivative of Rⁿ at 0. Zero outside the table.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        if n == 0 || n > self.n_max || k > self.k_max {
            return 0.0;
        }
        self.table[n - 1][k]
    }

    /// [x^j] R(x).
    pub fn taylor(&self, j: usize) -> f64 {
        self.taylor.get(j).copied().unwrap_or(0.0)
    }

    /// Σ_{k≤k_max} R^{(n)}_{0,k} x^k / k!.
    pub fn eval_power(&self, n: usize, x: f64) -> f64 {
        (1..=self.k_max)
            .rev()
            .fold(0.0, |acc, k| acc * x + self.get(n, k) / factorial(k))
            * x
    }
}

/// R^{(n)}_{0,k} for 1 ≤ n ≤ n_max, 1 ≤ k ≤ k_max. The Taylor coefficients
/// of R are the kernel moments, r_j = 2 J_j(∞).
pub fn r_series(spec: &KernelSpec, n_max: usize, k_max: usize) -> Result<SeriesCoeffs> {
    r_series_kind(spec.kind, n_max, k_max)
}

pub fn r_series_kind(kind: CutoffKind, n_max: usize, k_max: usize) -> Result<SeriesCoeffs> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max", "must be at least 1"));
    }
    let mut taylor = vec![0.0; k_max + 1];
    match kind {
        CutoffKind::Lorentzian => {
            for (j, r) in taylor.iter_mut().enumerate().skip(1) {
                *r = sign(j);
            }
        }
        CutoffKind::Gaussian => {
            check_order(kind, k_max)?;
            for (j, r) in taylor.iter_mut().enumerate().skip(1) {
                *r = 2.0 * j_coeff_quadrature(kind, j, f64::INFINITY)?;
            }
        }
        CutoffKind::Sharp | CutoffKind::ExponentialCut => {
            return Err(Error::Unsupported(format!(
                "the {kind} kernel has divergent moments, so R(x) has no Taylor expansion at 0"
            )))
        }
    }
    Ok(SeriesCoeffs::from_taylor(taylor, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: CutoffKind, eta: f64, omega: f64) -> KernelSpec {
        KernelSpec::new(kind, eta, omega, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_f(CutoffKind::Sharp, 0.5).unwrap(), 1.0);
        assert_eq!(cutoff_f(CutoffKind::Sharp, 1.5).unwrap(), 0.0);
        assert_eq!(cutoff_f(CutoffKind::Lorentzian, 1.0).unwrap(), 0.5);
        for kind in CutoffKind::ALL {
            assert_eq!(cutoff_f(kind, 0.0).unwrap(), 1.0);
            assert!(matches!(cutoff_f(kind, -0.1), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn kernel_examples() {
        let l = spec(CutoffKind::Lorentzian, 1.0, 2.0);
        assert!((memory_kernel(&l, 0.0) - 1.0).abs() < 1e-15);
        let g = spec(CutoffKind::Gaussian, 1.0, 2.0);
        assert!((memory_kernel(&g, 0.0) - 1.0 / PI.sqrt()).abs() < 1e-15);
        let s = spec(CutoffKind::Sharp, 1.0, PI);
        assert!(memory_kernel(&s, 1.0).abs() < 1e-15);
        assert!((memory_kernel(&s, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counterterm_examples() {
        assert!((counterterm_shift(&spec(CutoffKind::Lorentzian, 1.0, 2.0)) - 2.0).abs() < 1e-15);
        let g = counterterm_shift(&spec(CutoffKind::Gaussian, 1.0, 2.0));
        assert!((g - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
        let e = counterterm_shift(&spec(CutoffKind::ExponentialCut, 1.0, PI));
        assert!((e - 2.0).abs() < 1e-15);
    }

    #[test]
    fn j_examples() {
        let l = spec(CutoffKind::Lorentzian, 1.0, 1.0);
        assert_eq!(j_coeff(&l, 0, f64::INFINITY).unwrap(), 0.5);
        assert!((j_coeff(&l, 1, 1.0).unwrap() + 0.132_120_558_828_557_68).abs() < 1e-12);
        for kind in CutoffKind::ALL {
            for n in 0..=kind.max_j_order() {
                assert_eq!(j_coeff_kind(kind, n, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn unsupported_orders_are_errors() {
        for kind in [CutoffKind::Sharp, CutoffKind::ExponentialCut] {
            assert!(matches!(
                j_coeff_kind(kind, 3, 1.0),
                Err(Error::UnsupportedOrder { order: 3, max: 2, .. })
            ));
            assert!(j_coeff_kind(kind, 1, f64::INFINITY).is_err());
        }
        assert!(j_coeff_kind(CutoffKind::Gaussian, 5, 1.0).is_err());
    }

    #[test]
    fn sharp_moments() {
        // ∫₀^∞ sin x/(πx) = 1/2 and ∫₀^y sin x/π = (1 − cos y)/π.
        let j0 = j_coeff_kind(CutoffKind::Sharp, 0, f64::INFINITY).unwrap();
        assert!((j0 - 0.5).abs() < 1e-9, "{j0}");
        let j1 = j_coeff_kind(CutoffKind::Sharp, 1, 7.0).unwrap();
        assert!((j1 + (1.0 - 7f64.cos()) / PI).abs() < 1e-10);
        let e0 = j_coeff_kind(CutoffKind::ExponentialCut, 0, 3.0).unwrap();
        assert!((e0 - 3f64.atan() / PI).abs() < 1e-10);
    }

    #[test]
    fn gaussian_moments_at_infinity() {
        let frozen = [
            0.5,
            -0.564_189_583_547_756_3,
            0.5,
            -0.376_126_389_031_837_5,
            0.25,
        ];
        for (n, want) in frozen.iter().enumerate() {
            let got = j_coeff_kind(CutoffKind::Gaussian, n, f64::INFINITY).unwrap();
            assert!((got - want).abs() < 1e-9, "n={n}: {got}");
        }
        assert!((j_coeff_kind(CutoffKind::Gaussian, 0, 50.0).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn laplace_examples() {
        let l = KernelSpec::from_delta(CutoffKind::Lorentzian, 0.5).unwrap();
        assert_eq!(laplace_kernel(&l, 0.0).unwrap(), 0.5);
        assert_eq!(laplace_kernel(&l, 2.0).unwrap(), 0.25);
        let g = KernelSpec::from_delta(CutoffKind::Gaussian, 0.3).unwrap();
        assert!((laplace_kernel(&g, 0.0).unwrap() - 0.5).abs() < 1e-9);
        // Sharp: ∫₀^∞ e^{−xy} sin y/(πy) dy = atan(1/x)/π.
        let x = 0.7;
        let s = laplace_unit(CutoffKind::Sharp, x).unwrap();
        assert!((s - (1.0 / x).atan() / PI).abs() < 1e-9);
        assert!(laplace_unit(CutoffKind::Gaussian, -1.0).is_err());
    }

    #[test]
    fn lorentzian_laplace_by_quadrature() {
        for x in [0.0, 0.3, 2.0] {
            let q = quad::integrate_to_infinity(
                |y| (-x * y).exp() * unit_kernel(CutoffKind::Lorentzian, y),
                0.0,
                KERNEL_TOLERANCE,
            )
            .unwrap();
            assert!((q - laplace_unit(CutoffKind::Lorentzian, x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn r_series_examples() {
        let c = r_series_kind(CutoffKind::Lorentzian, 3, 4).unwrap();
        assert_eq!(c.get(1, 1), -1.0);
        assert_eq!(c.get(1, 2), 2.0);
        for kind in [CutoffKind::Lorentzian, CutoffKind::Gaussian] {
            let c = r_series_kind(kind, 3, 4).unwrap();
            assert_eq!(c.get(2, 1), 0.0);
            for n in 1..=3 {
                for k in 0..n {
                    assert_eq!(c.get(n, k), 0.0);
                }
            }
        }
        assert!(r_series_kind(CutoffKind::Sharp, 1, 1).is_err());
        assert!(r_series_kind(CutoffKind::Lorentzian, 0, 1).is_err());
    }

    #[test]
    fn lorentzian_powers_are_binomial() {
        // [x^k](−x/(1+x))ⁿ = (−1)^k C(k−1, n−1).
        let c = r_series_kind(CutoffKind::Lorentzian, 4, 6).unwrap();
        let binom = |a: usize, b: usize| -> f64 {
            if b > a {
                return 0.0;
            }
            (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
        };
        for n in 1..=4 {
            for k in n..=6 {
                let want = sign(k) * binom(k - 1, n - 1) * factorial(k);
                assert_eq!(c.get(n, k), want, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn r_series_reproduces_r_at_small_x() {
        let c = r_series_kind(CutoffKind::Lorentzian, 1, 5).unwrap();
        let x: f64 = 0.1;
        let exact = -x / (1.0 + x);
        assert!((c.eval_power(1, x) - exact).abs() < 2.0 * x.powi(6));
    }

    #[test]
    fn gaussian_taylor_matches_finite_differences() {
        // Independent route: differentiate the quadrature Laplace transform.
        let c = r_series_kind(CutoffKind::Gaussian, 1, 2).unwrap();
        let h = 1e-3;
        let f = |x: f64| 2.0 * laplace_unit(CutoffKind::Gaussian, x).unwrap() - 1.0;
        // one-sided stencil since x ≥ 0
        let d1 = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
        assert!((d1 - c.taylor(1)).abs() < 1e-4, "{d1} vs {}", c.taylor(1));
    }

    #[test]
    fn parse_kinds() {
        for kind in CutoffKind::ALL {
            assert_eq!(kind.name().parse::<CutoffKind>().unwrap(), kind);
        }
        let err = "cauchy".parse::<CutoffKind>().unwrap_err();
        assert!(err.to_string().contains("sharp, exponential, gaussian, lorentzian"));
    }

    #[test]
    fn spec_validation_and_scales() {
        assert!(KernelSpec::new(CutoffKind::Gaussian, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(KernelSpec::new(CutoffKind::Gaussian, 1.0, 1.0, 1.0, -1.0).is_err());
        let s = KernelSpec::new(CutoffKind::Lorentzian, 2.0, 4.0, 1.0, 0.0).unwrap();
        assert_eq!(s.delta(), 0.5);
        assert_eq!(s.alpha(), 0.5);
        assert_eq!(s.tau(1.0), 2.0);
    }
}
