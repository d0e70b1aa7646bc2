//! Response functions and ⟨Q²⟩ for the free Brownian particle.
//!
//! Time is the dimensionless τ = t/α and ⟨Q²⟩ is reported in units of
//! 2MT/η². The Laplace-space responses are rational in s and inverted by
//! residues; the small-δ expansion is carried by [`ExpPoly`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expoly::ExpPoly;
use crate::kernels::{self, CutoffKind, KernelSpec, SeriesCoeffs};
use crate::quad::{self, Tolerance};

/// Tolerance of the outer ⟨Q²⟩ quadrature.
pub const Q2_TOLERANCE: Tolerance = Tolerance::new(1e-9, 1e-6);
const INNER_TOLERANCE: Tolerance = Tolerance::new(1e-13, 1e-10);

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be finite and non-negative, got {tau}")))
    }
}

fn check_delta(delta: f64, allow_zero: bool) -> Result<()> {
    let ok = delta.is_finite() && (delta > 0.0 || (allow_zero && delta == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("must be {}, got {delta}", if allow_zero { "non-negative" } else { "positive" })))
    }
}

/// F^{(n,k)}(τ) = (1/n!) d^{k−1}/dτ^{k−1} (τⁿ e^{−τ}).
pub fn f_nk_poly(n: usize, k: usize) -> ExpPoly {
    assert!(n >= 1 && k >= 1, "F^(n,k) needs n, k >= 1");
    ExpPoly::monomial(1.0 / factorial(n), n, 1).nth_derivative(k - 1)
}

pub fn f_nk(n: usize, k: usize, tau: f64) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("n, k", "F^(n,k) is defined for n, k >= 1"));
    }
    check_tau(tau)?;
    Ok(f_nk_poly(n, k).eval(tau))
}

/// Markovian response 1 − e^{−τ}.
pub fn markov_poly() -> ExpPoly {
    &ExpPoly::constant(1.0) - &ExpPoly::monomial(1.0, 0, 1)
}

/// Small-δ solution h(τ; δ) = (1 − e^{−τ}) + Σ_k δ^k h_k(τ), with
/// h_k = Σ_n ((−1)ⁿ/k!) R^{(n)}_{0,k} F^{(n,k)}.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    kind: CutoffKind,
    delta: f64,
    k_order: usize,
    n_order: usize,
    coeffs: SeriesCoeffs,
    /// kernels[k] = h_k; kernels[0] is the Markovian response.
    kernels: Vec<ExpPoly>,
}

impl SeriesSolution {
    pub fn new(kind: CutoffKind, delta: f64, k_order: usize, n_order: usize) -> Result<Self> {
        check_delta(delta, true)?;
        if k_order == 0 || n_order == 0 {
            return Err(Error::invalid("K, N", "series orders must be at least 1"));
        }
        let coeffs = kernels::r_series_kind(kind, n_order, k_order)?;
        let mut kernels = vec![markov_poly()];
        for k in 1..=k_order {
            let mut h = ExpPoly::zero();
            for n in 1..=n_order.min(k) {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let c = sign * coeffs.get(n, k) / factorial(k);
                h = &h + &f_nk_poly(n, k).scale(c);
            }
            kernels.push(h);
        }
        Ok(Self {
            kind,
            delta,
            k_order,
            n_order,
            coeffs,
            kernels,
        })
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_order(&self) -> usize {
        self.k_order
    }

    pub fn n_order(&self) -> usize {
        self.n_order
    }

    pub fn coeffs(&self) -> &SeriesCoeffs {
        &self.coeffs
    }

    /// h_k, the coefficient of δ^k (h_0 is the Markovian response).
    pub fn kernel(&self, k: usize) -> &ExpPoly {
        &self.kernels[k]
    }

    /// The truncated sum at this solution's δ.
    pub fn response_poly(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        let mut dk = 1.0;
        for h in &self.kernels {
            out = &out + &h.scale(dk);
            dk *= self.delta;
        }
        out
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let mut dk = 1.0;
        let mut sum = 0.0;
        for h in &self.kernels {
            sum += dk * h.eval(tau);
            dk *= self.delta;
        }
        sum
    }
}

pub fn series_response(spec: &KernelSpec, k_order: usize, n_order: usize) -> Result<SeriesSolution> {
    SeriesSolution::new(spec.kind, spec.delta(), k_order, n_order)
}

/// Inverse Laplace transform of N(s) / (s (a0 + a1 s + a2 s²)), stored as
/// a sum of terms c τ^m e^{pτ} with m ∈ {0, 1}.
#[derive(Debug, Clone, PartialEq)]
struct Residues {
    terms: Vec<(Complex64, Complex64, u8)>,
}

fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn poly_deriv_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (i, &c)| acc * s + c * i as f64)
}

/// Roots closer than this (relative) are merged into a double root.
const CONFLUENT: f64 = 1e-6;

impl Residues {
    fn new(num: &[f64], den: [f64; 3]) -> Result<Self> {
        let [a0, a1, a2] = den;
        if a0 == 0.0 {
            return Err(Error::Numeric("response has a double pole at s = 0".into()));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut terms = vec![(Complex64::new(num.first().copied().unwrap_or(0.0) / a0, 0.0), zero, 0)];
        if a2 == 0.0 {
            if a1 != 0.0 {
                let p = Complex64::new(-a0 / a1, 0.0);
                terms.push((poly_eval(num, p) / (p * a1), p, 0));
            }
            return Ok(Self { terms });
        }
        let disc = Complex64::new(a1 * a1 - 4.0 * a2 * a0, 0.0).sqrt();
        let q = -0.5 * (a1 + if a1 >= 0.0 { disc } else { -disc });
        let p1 = q / a2;
        let p2 = a0 / q;
        let mid = Complex64::new(-a1 / (2.0 * a2), 0.0);
        if (p1 - p2).norm() <= CONFLUENT * mid.norm() {
            // G(s) = N(s) e^{sτ}/(a2 s); the two-root residue sum tends to G′(m).
            let n = poly_eval(num, mid);
            let dn = poly_deriv_eval(num, mid);
            terms.push(((dn / mid - n / (mid * mid)) / a2, mid, 0));
            terms.push((n / (mid * a2), mid, 1));
        } else {
            terms.push((poly_eval(num, p1) / (p1 * a2 * (p1 - p2)), p1, 0));
            terms.push((poly_eval(num, p2) / (p2 * a2 * (p2 - p1)), p2, 0));
        }
        Ok(Self { terms })
    }

    /// n-th τ-derivative of the inverse transform.
    fn eval(&self, deriv: usize, tau: f64) -> f64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for &(c, p, m) in &self.terms {
            if p.norm() == 0.0 {
                if deriv == 0 && m == 0 {
                    sum += c;
                }
                continue;
            }
            let e = (p * tau).exp();
            let pn = p.powu(deriv as u32);
            sum += if m == 0 {
                c * pn * e
            } else {
                let lower = if deriv == 0 { Complex64::new(0.0, 0.0) } else { p.powu(deriv as u32 - 1) * deriv as f64 };
                c * (pn * tau + lower) * e
            };
        }
        sum.re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseForm {
    Markovian,
    Truncated { order: usize },
    ExactLorentzian,
    Series { k_order: usize },
}

/// A response g(τ) with g(0) = 0 and g(∞) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFunction {
    form: ResponseForm,
    delta: f64,
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Rational(Residues),
    Series(ExpPoly),
}

impl ResponseFunction {
    pub fn markovian() -> Self {
        Self {
            form: ResponseForm::Markovian,
            delta: 0.0,
            repr: Repr::Rational(Residues::new(&[1.0], [1.0, 1.0, 0.0]).expect("Markov response")),
        }
    }

    /// g̃(s) = (1 + δs) / (s (δs² + s + 1)).
    pub fn exact_lorentzian(delta: f64) -> Result<Self> {
        check_delta(delta, true)?;
        Ok(Self {
            form: ResponseForm::ExactLorentzian,
            delta,
            repr: Repr::Rational(Residues::new(&[1.0, delta], [1.0, 1.0, delta])?),
        })
    }

    /// Truncated derivative expansion with the Lorentzian constants:
    /// order 2 gives g̃(s) = 1 / (s (1 + (1−δ)s + δ²s²)).
    pub fn truncated(delta: f64, order: usize) -> Result<Self> {
        Self::truncated_kind(CutoffKind::Lorentzian, delta, order)
    }

    /// Truncated response for any kind with finite moments, using the
    /// asymptotic coefficients M̄/M = 1 + 2J₁δ and η₃ = 2J₂δ² (τ units).
    pub fn truncated_kind(kind: CutoffKind, delta: f64, order: usize) -> Result<Self> {
        check_delta(delta, true)?;
        let den = truncated_denominator(kind, delta, order)?;
        Ok(Self {
            form: ResponseForm::Truncated { order },
            delta,
            repr: Repr::Rational(Residues::new(&[1.0], den)?),
        })
    }

    pub fn series(solution: &SeriesSolution) -> Self {
        Self {
            form: ResponseForm::Series {
                k_order: solution.k_order(),
            },
            delta: solution.delta(),
            repr: Repr::Series(solution.response_poly()),
        }
    }

    pub fn form(&self) -> ResponseForm {
        self.form
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.derivative(0, tau)
    }

    /// n-th derivative in τ (for τ > 0).
    pub fn derivative(&self, n: usize, tau: f64) -> f64 {
        match &self.repr {
            Repr::Rational(r) => r.eval(n, tau),
            Repr::Series(p) => {
                if n == 0 {
                    p.eval(tau)
                } else {
                    p.nth_derivative(n).eval(tau)
                }
            }
        }
    }

    fn terms(&self) -> Option<&[(Complex64, Complex64, u8)]> {
        match &self.repr {
            Repr::Rational(r) => Some(&r.terms),
            Repr::Series(_) => None,
        }
    }
}

/// Denominator [a0, a1, a2] of s·g̃(s) for the truncated equation.
fn truncated_denominator(kind: CutoffKind, delta: f64, order: usize) -> Result<[f64; 3]> {
    let j = |n| kernels::j_coeff_kind(kind, n, f64::INFINITY);
    match order {
        0 => Ok([1.0, 1.0, 0.0]),
        1 | 2 => {
            let mass = 1.0 + 2.0 * j(1)? * delta;
            if mass <= 0.0 {
                return Err(Error::IllPosedTruncation {
                    time: f64::INFINITY,
                    delta,
                    reason: format!("effective mass ratio {mass} is not positive"),
                });
            }
            let top = if order == 2 { 2.0 * j(2)? * delta * delta } else { 0.0 };
            Ok([2.0 * j(0)?, mass, top])
        }
        3 => Err(Error::IllPosedTruncation {
            time: f64::INFINITY,
            delta,
            reason: "the fourth-derivative coefficient 2J₃δ³ is negative, so the truncated equation has a growing mode".into(),
        }),
        _ => Err(Error::invalid("order", "truncated responses exist for orders 0 to 2")),
    }
}

pub fn exact_response_lorentzian(delta: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(ResponseFunction::exact_lorentzian(delta)?.eval(tau))
}

pub fn truncated_response(delta: f64, order: usize, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(ResponseFunction::truncated(delta, order)?.eval(tau))
}

/// Deterministic Q(τ) from initial data, for the given response form.
/// Supported forms are Markovian, exact Lorentzian and truncated orders 1, 2
/// (Lorentzian constants, with Q̈(0) = 0).
pub fn homogeneous_solution(form: ResponseForm, delta: f64, q0: f64, v0: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_delta(delta, true)?;
    let (num, den): (Vec<f64>, [f64; 3]) = match form {
        ResponseForm::Markovian => (vec![v0 + q0, q0], [1.0, 1.0, 0.0]),
        ResponseForm::ExactLorentzian => (vec![v0 + q0, v0 * delta + q0, delta * q0], [1.0, 1.0, delta]),
        ResponseForm::Truncated { order: 1 } => {
            let m = 1.0 - delta;
            (vec![m * v0 + q0, m * q0], truncated_denominator(CutoffKind::Lorentzian, delta, 1)?)
        }
        ResponseForm::Truncated { order: 2 } => {
            let m = 1.0 - delta;
            let d2 = delta * delta;
            (
                vec![m * v0 + q0, d2 * v0 + m * q0, d2 * q0],
                truncated_denominator(CutoffKind::Lorentzian, delta, 2)?,
            )
        }
        other => {
            return Err(Error::Unsupported(format!(
                "no homogeneous solution for the {other:?} response"
            )))
        }
    };
    Ok(Residues::new(&num, den)?.eval(0, tau))
}

/// The three coefficient groups of the closed-form O(δ²) ⟨Q²⟩ expression,
/// as functions of τ (units 2MT/η²).
pub fn q2_series_coefficients() -> [ExpPoly; 3] {
    let m = ExpPoly::monomial;
    let c0 = [m(-1.5, 0, 0), m(1.0, 1, 0), m(2.0, 0, 1), m(-0.5, 0, 2)];
    let c1 = [m(2.0, 0, 0), m(-3.0, 0, 1), m(-2.0, 1, 1), m(1.0, 0, 2), m(1.0, 1, 2)];
    let c2 = [
        m(-0.75, 0, 0),
        m(1.0, 0, 1),
        m(3.0, 1, 1),
        m(-1.0, 2, 1),
        m(-0.25, 0, 2),
        m(-2.5, 1, 2),
        m(0.5, 2, 2),
    ];
    let sum = |ts: &[ExpPoly]| ts.iter().fold(ExpPoly::zero(), |acc, t| &acc + t);
    [sum(&c0), sum(&c1), sum(&c2)]
}

/// ⟨Q²⟩/(2MT/η²) from the closed-form O(δ²) expression, for v₀ = Q₀ = 0.
/// The brackets are summed order by order in δ, so each order cancels
/// exactly at τ = 0.
pub fn q2_series(delta: f64, tau: f64) -> f64 {
    let e1 = (-tau).exp();
    let e2 = (-2.0 * tau).exp();
    let c0 = -1.5 + tau + 2.0 * e1 - 0.5 * e2;
    let c1 = 2.0 - (3.0 + 2.0 * tau) * e1 + (1.0 + tau) * e2;
    let c2 = -0.75 + (1.0 + 3.0 * tau - tau * tau) * e1 - 0.25 * (1.0 + 10.0 * tau - 2.0 * tau * tau) * e2;
    c0 + delta * (c1 + delta * c2)
}

/// Coefficients c_j(τ) of ⟨Q²⟩ = Σ δ^j c_j from the double-integral
/// reduction: the response is expanded with [`SeriesSolution`] kernels and
/// the correlator with Σ_n κ_n δⁿ δ⁽ⁿ⁾, κ_n = (−1)ⁿ 2J_n(∞), giving
/// c_j = Σ_{n+a+b=j} κ_n ∫₀^τ h_a h_b⁽ⁿ⁾.
pub fn q2_reduction_coefficients(kind: CutoffKind, j_max: usize) -> Result<Vec<ExpPoly>> {
    let series = SeriesSolution::new(kind, 0.0, j_max.max(1), j_max.max(1))?;
    let mut kappa = Vec::with_capacity(j_max + 1);
    for n in 0..=j_max {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        kappa.push(sign * 2.0 * kernels::j_coeff_kind(kind, n, f64::INFINITY)?);
    }
    let mut out = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let mut c = ExpPoly::zero();
        for (n, &k) in kappa.iter().enumerate().take(j + 1) {
            for a in 0..=(j - n) {
                let b = j - n - a;
                let prod = series.kernel(a) * &series.kernel(b).nth_derivative(n);
                c = &c + &prod.integral().scale(k);
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// The closed-form O(δ²) ⟨Q²⟩ series truncated at `order` ∈ 0..=3. Order 3 adds
/// δ³ c₃ from [`q2_reduction_coefficients`] for the Lorentzian kernel.
#[derive(Debug, Clone)]
pub struct Q2Series {
    base: [ExpPoly; 3],
    c3: ExpPoly,
}

impl Q2Series {
    pub fn lorentzian() -> Self {
        let c3 = q2_reduction_coefficients(CutoffKind::Lorentzian, 3)
            .expect("Lorentzian moments are closed form")
            .pop()
            .expect("four coefficients");
        Self {
            base: q2_series_coefficients(),
            c3,
        }
    }

    pub fn coefficient(&self, j: usize) -> Option<&ExpPoly> {
        match j {
            0..=2 => Some(&self.base[j]),
            3 => Some(&self.c3),
            _ => None,
        }
    }

    pub fn eval(&self, order: usize, delta: f64, tau: f64) -> Result<f64> {
        if order > 3 {
            return Err(Error::invalid("order", "the ⟨Q²⟩ series is available up to order 3"));
        }
        check_tau(tau)?;
        let mut dj = 1.0;
        let mut sum = 0.0;
        for j in 0..=order {
            sum += dj * self.coefficient(j).expect("order checked").eval(tau);
            dj *= delta;
        }
        Ok(sum)
    }

    /// d⟨Q²⟩/dτ of the truncated series.
    pub fn slope(&self, order: usize, delta: f64, tau: f64) -> Result<f64> {
        if order > 3 {
            return Err(Error::invalid("order", "the ⟨Q²⟩ series is available up to order 3"));
        }
        let mut dj = 1.0;
        let mut sum = 0.0;
        for j in 0..=order {
            sum += dj * self.coefficient(j).expect("order checked").derivative().eval(tau);
            dj *= delta;
        }
        Ok(sum)
    }
}

pub fn q2_series_order(order: usize, delta: f64, tau: f64) -> Result<f64> {
    Q2Series::lorentzian().eval(order, delta, tau)
}

/// ∫₀^τ∫₀^τ g(u) g(w) Δ_δ(u − w) du dw in units of 2MT/η², where
/// Δ_δ(x) = k(x/δ)/δ is the kernel of `kind` at the response's δ. δ = 0
/// means white noise. Only the noise part is returned (Q₀ = v₀ = 0).
pub fn q2_numeric(kind: CutoffKind, response: &ResponseFunction, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let delta = response.delta();
    if delta == 0.0 {
        return quad::integrate(
            |u| {
                let g = response.eval(u);
                g * g
            },
            0.0,
            tau,
            Q2_TOLERANCE,
        );
    }
    let mut failure = None;
    let mut outer = |u: f64| {
        let inner = match (kind, response.terms()) {
            (CutoffKind::Lorentzian, Some(terms)) => lorentzian_inner(terms, delta, u),
            _ => None,
        };
        let inner = match inner {
            Some(v) => Ok(v),
            None => inner_quadrature(kind, response, delta, u),
        };
        match inner {
            Ok(v) => 2.0 * response.eval(u) * v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let result = quad::integrate_with_breaks(&mut outer, &[0.0, tau.min(1.0), tau], Q2_TOLERANCE);
    if let Some(e) = failure {
        return Err(e);
    }
    result
}

fn inner_quadrature(kind: CutoffKind, response: &ResponseFunction, delta: f64, u: f64) -> Result<f64> {
    let f = |w: f64| response.eval(w) * kernels::unit_kernel(kind, (u - w) / delta) / delta;
    let mut pts = vec![0.0];
    let step = if kind == CutoffKind::Sharp { std::f64::consts::PI * delta } else { 4.0 * delta };
    let mut edge = u - 64.0 * step;
    while edge < u {
        if edge > 0.0 {
            pts.push(edge);
        }
        edge += step;
    }
    pts.push(u);
    let mut f = f;
    quad::integrate_with_breaks(&mut f, &pts, INNER_TOLERANCE)
}

/// ∫₀^u g(w) e^{−(u−w)/δ}/(2δ) dw from the exponential terms of g.
fn lorentzian_inner(terms: &[(Complex64, Complex64, u8)], delta: f64, u: f64) -> Option<f64> {
    let decay = (-u / delta).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    for &(c, p, m) in terms {
        let q = p + 1.0 / delta;
        if q.norm() < 1e-8 / delta {
            return None;
        }
        let epu = (p * u).exp();
        sum += if m == 0 {
            c * (epu - decay) / q
        } else {
            c * (epu * (q * u - 1.0) + decay) / (q * q)
        };
    }
    Some(sum.re / (2.0 * delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Late,
    Early,
}

/// A limiting law with the window in which it is meant to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    /// ⟨Q²⟩ in physical units.
    pub value: f64,
    pub window: (f64, f64),
    /// False when `t` lies outside the window; the value is still returned.
    pub in_window: bool,
}

/// Late: ⟨Q²⟩ ≈ (2T/η) t for t ≫ M/η. Early: ⟨Q²⟩ ≈ δ (T/M) t² for
/// 1/Ω ≪ t ≪ M/η.
pub fn asymptotics(spec: &KernelSpec, regime: Regime, t: f64) -> Asymptotic {
    let (value, window) = match regime {
        Regime::Late => (2.0 * spec.temperature / spec.eta * t, (10.0 * spec.alpha(), f64::INFINITY)),
        Regime::Early => (
            spec.delta() * spec.temperature / spec.mass * t * t,
            (1.0 / spec.omega, spec.alpha()),
        ),
    };
    Asymptotic {
        value,
        window,
        in_window: t > window.0 && t < window.1,
    }
}

/// The same laws in units of 2MT/η² with τ as argument: τ (late) and
/// δτ²/2 (early).
pub fn asymptotic_q2(delta: f64, regime: Regime, tau: f64) -> f64 {
    match regime {
        Regime::Late => tau,
        Regime::Early => 0.5 * delta * tau * tau,
    }
}
