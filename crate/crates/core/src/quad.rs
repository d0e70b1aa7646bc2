//! Adaptive Gauss-Kronrod quadrature.
//!
//! A global adaptive G7/K15 scheme: the interval with the largest error
//! estimate is bisected until the summed estimate drops below
//! `max(abs, rel * |I|)`. Semi-infinite ranges are mapped onto `[0, 1)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Stopping tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

/// Tolerances used by the kernel catalog (J_n, Laplace transforms).
pub const KERNEL_TOLERANCE: Tolerance = Tolerance::new(1e-10, 1e-8);

const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_with_breaks(&mut f, &[a, b], tol)
}

/// Integrates over consecutive sub-ranges delimited by `points` (sorted),
/// which lets callers put kinks and peaks on segment boundaries.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    points: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let seg = kronrod(f, w[0], w[1]);
            total += seg.value;
            total_err += seg.error;
            heap.push(seg);
        }
    }
    let mut intervals = heap.len();
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Numeric("quadrature produced a non-finite value".into()));
        }
        if intervals >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not converge: estimate {total:e}, error {total_err:e}, {intervals} intervals"
            )));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            break;
        }
        let left = kronrod(f, worst.a, mid);
        let right = kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        intervals += 1;
    }
    if !total.is_finite() {
        return Err(Error::Numeric("quadrature produced a non-finite value".into()));
    }
    Ok(total)
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<f64> {
    let mut mapped = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_with_breaks(&mut mapped, &[0.0, 0.5, 0.9, 1.0], tol)
}

/// Sums an alternating series of panel integrals `panel(k)`, k = 0, 1, ...,
/// with repeated averaging of partial sums (Euler-van Wijngaarden).
pub fn alternating_series<F: FnMut(usize) -> Result<f64>>(mut panel: F, tol: Tolerance) -> Result<f64> {
    const TERMS: usize = 48;
    let mut partial = Vec::with_capacity(TERMS);
    let mut sum = 0.0;
    for k in 0..TERMS {
        sum += panel(k)?;
        partial.push(sum);
    }
    // Two averaging depths; their difference is the error estimate.
    let mut level = partial;
    let mut previous = f64::NAN;
    while level.len() > 1 {
        previous = level[level.len() - 1];
        level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let value = level[0];
    if (value - previous).abs() > 1e3 * tol.abs.max(tol.rel * value.abs()) {
        return Err(Error::Numeric(format!(
            "alternating series acceleration did not settle: {value:e} vs {previous:e}"
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: Tolerance = Tolerance::new(1e-13, 1e-12);

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, TIGHT).unwrap();
        assert!((v - (9.0 - 1.5 + 6.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_with_break() {
        let eps = 1e-3;
        let mut f = |x: f64| (-(x - 0.3).abs() / eps).exp() / (2.0 * eps);
        let v = integrate_with_breaks(&mut f, &[0.0, 0.3, 1.0], TIGHT).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_gaussian_and_algebraic_tails() {
        let g = integrate_to_infinity(|x| (-x * x).exp(), 0.0, TIGHT).unwrap();
        assert!((g - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
        let c = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, TIGHT).unwrap();
        assert!((c - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_integral_by_panels() {
        use std::f64::consts::PI;
        let v = alternating_series(
            |k| {
                let a = k as f64 * PI;
                integrate(|x| if x == 0.0 { 1.0 } else { x.sin() / x }, a, a + PI, TIGHT)
            },
            TIGHT,
        )
        .unwrap();
        assert!((v - PI / 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, TIGHT).is_err());
    }
}
