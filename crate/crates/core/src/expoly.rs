//! Exponential polynomials Σ_m P_m(τ) e^{−mτ} with integer decay rates.
//!
//! The response kernels of the exponential-kernel expansion and all the
//! ⟨Q²⟩ coefficients built from them live in this class, which is closed
//! under sums, products, derivatives and integration from 0.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpPoly {
    /// rate m -> polynomial coefficients, lowest power first.
    terms: BTreeMap<u32, Vec<f64>>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0, 0)
    }

    /// c · τ^power · e^{−rate τ}.
    pub fn monomial(c: f64, power: usize, rate: u32) -> Self {
        let mut poly = vec![0.0; power + 1];
        poly[power] = c;
        let mut terms = BTreeMap::new();
        terms.insert(rate, poly);
        Self { terms }.trimmed()
    }

    /// Coefficient of τ^power e^{−rate τ}.
    pub fn coefficient(&self, rate: u32, power: usize) -> f64 {
        self.terms
            .get(&rate)
            .and_then(|p| p.get(power))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&m, p)| {
                let poly = p.iter().rev().fold(0.0, |acc, &c| acc * tau + c);
                if m == 0 {
                    poly
                } else {
                    poly * (-(m as f64) * tau).exp()
                }
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&m, p)| (m, p.iter().map(|c| c * s).collect()))
            .collect();
        Self { terms }.trimmed()
    }

    /// d/dτ [P(τ) e^{−mτ}] = (P′ − mP) e^{−mτ}.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for (&m, p) in &self.terms {
            let mut d = vec![0.0; p.len()];
            for (i, &c) in p.iter().enumerate() {
                if i > 0 {
                    d[i - 1] += i as f64 * c;
                }
                d[i] -= m as f64 * c;
            }
            out.add_poly(m, &d);
        }
        out.trimmed()
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |acc, _| acc.derivative())
    }

    /// ∫₀^τ of the function, as a function of τ.
    pub fn integral(&self) -> Self {
        let mut out = Self::zero();
        for (&m, p) in &self.terms {
            for (j, &c) in p.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                if m == 0 {
                    out.add_poly(0, &monomial_coeffs(c / (j + 1) as f64, j + 1));
                    continue;
                }
                // ∫₀^τ u^j e^{−mu} du = j!/m^{j+1} − e^{−mτ} Σ_i (j!/i!) τ^i / m^{j−i+1}
                let mf = m as f64;
                let jfact: f64 = (1..=j).map(|i| i as f64).product();
                out.add_poly(0, &[c * jfact / mf.powi(j as i32 + 1)]);
                let mut tail = vec![0.0; j + 1];
                let mut ifact = 1.0;
                for (i, t) in tail.iter_mut().enumerate() {
                    if i > 0 {
                        ifact *= i as f64;
                    }
                    *t = -c * jfact / ifact / mf.powi((j - i) as i32 + 1);
                }
                out.add_poly(m, &tail);
            }
        }
        out.trimmed()
    }

    /// ∫₀^τ f(u) du evaluated at a single τ.
    pub fn integrate_to(&self, tau: f64) -> f64 {
        self.integral().eval(tau)
    }

    fn add_poly(&mut self, rate: u32, p: &[f64]) {
        let entry = self.terms.entry(rate).or_default();
        if entry.len() < p.len() {
            entry.resize(p.len(), 0.0);
        }
        for (e, &c) in entry.iter_mut().zip(p) {
            *e += c;
        }
    }

    fn trimmed(mut self) -> Self {
        for p in self.terms.values_mut() {
            while p.last() == Some(&0.0) {
                p.pop();
            }
        }
        self.terms.retain(|_, p| !p.is_empty());
        self
    }
}

fn monomial_coeffs(c: f64, power: usize) -> Vec<f64> {
    let mut v = vec![0.0; power + 1];
    v[power] = c;
    v
}

impl Add for &ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (&m, p) in &rhs.terms {
            out.add_poly(m, p);
        }
        out.trimmed()
    }
}

impl Sub for &ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: &ExpPoly) -> ExpPoly {
        self + &(-rhs)
    }
}

impl Neg for &ExpPoly {
    type Output = ExpPoly;
    fn neg(self) -> ExpPoly {
        self.scale(-1.0)
    }
}

impl Mul for &ExpPoly {
    type Output = ExpPoly;
    fn mul(self, rhs: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (&ma, pa) in &self.terms {
            for (&mb, pb) in &rhs.terms {
                let mut prod = vec![0.0; pa.len() + pb.len() - 1];
                for (i, &a) in pa.iter().enumerate() {
                    for (j, &b) in pb.iter().enumerate() {
                        prod[i + j] += a * b;
                    }
                }
                out.add_poly(ma + mb, &prod);
            }
        }
        out.trimmed()
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for ExpPoly {
            type Output = ExpPoly;
            fn $f(self, rhs: ExpPoly) -> ExpPoly {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);
