//! Gaussian noise with covariance 2ηT Δ_Ω(t − t′) on a uniform grid.
//!
//! Values live at step midpoints t_i = (i + ½) dt. Every path is drawn from
//! its own ChaCha8 stream selected by (seed, stream index).

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{memory_kernel, CutoffKind, KernelSpec};

/// Identifier of the generator recorded in every path.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Eigenvalues above `-CLIP_RELATIVE * max` are treated as round-off and
/// set to zero without complaint.
const CLIP_RELATIVE: f64 = 1e-10;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl NoiseGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive and finite, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(Self { dt, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt
    }

    /// Colored noise must resolve the kernel width: Ω dt ≤ 1/4.
    pub fn check_resolves(&self, spec: &KernelSpec) -> Result<()> {
        if spec.omega * self.dt > 0.25 + 1e-12 {
            return Err(Error::invalid(
                "dt",
                format!("colored noise needs dt <= 1/(4 omega) = {}, got {}", 0.25 / spec.omega, self.dt),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    White,
    OuRecursion,
    Circulant,
}

impl NoiseMethod {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMethod::White => "white",
            NoiseMethod::OuRecursion => "ou_recursion",
            NoiseMethod::Circulant => "circulant",
        }
    }

    /// The colored method used for a kernel kind.
    pub fn colored_for(kind: CutoffKind) -> Self {
        if kind == CutoffKind::Lorentzian {
            NoiseMethod::OuRecursion
        } else {
            NoiseMethod::Circulant
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub spec: KernelSpec,
    pub grid: NoiseGrid,
    pub method: NoiseMethod,
    pub algorithm: &'static str,
}

impl AsRef<[f64]> for NoisePath {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Options for the circulant embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculantOptions {
    /// The embedding size is the smallest power of two ≥ factor · n_steps.
    pub embedding_factor: usize,
    /// The size is doubled while negative eigenvalues remain, up to this
    /// many times the starting size.
    pub max_growth: usize,
    /// Zero out negative eigenvalues instead of failing.
    pub clip_negative: bool,
}

impl Default for CirculantOptions {
    fn default() -> Self {
        Self {
            embedding_factor: 2,
            max_growth: 16,
            clip_negative: false,
        }
    }
}

/// A reusable sampler; the set-up cost (eigenvalues, FFT plan) is paid once.
#[derive(Clone)]
pub struct NoiseGenerator {
    spec: KernelSpec,
    grid: NoiseGrid,
    kind: Sampler,
}

#[derive(Clone)]
enum Sampler {
    White {
        sigma: f64,
    },
    Ou {
        decay: f64,
        kick: f64,
        stationary_sd: f64,
    },
    Circulant {
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

impl std::fmt::Debug for NoiseGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseGenerator")
            .field("spec", &self.spec)
            .field("grid", &self.grid)
            .field("method", &self.method())
            .finish()
    }
}

impl NoiseGenerator {
    /// White noise with per-step variance 2ηT/dt.
    pub fn white(spec: &KernelSpec, grid: NoiseGrid) -> Result<Self> {
        spec.validate()?;
        let sigma = (2.0 * spec.eta * spec.temperature / grid.dt).sqrt();
        Ok(Self {
            spec: *spec,
            grid,
            kind: Sampler::White { sigma },
        })
    }

    /// Colored noise: OU recursion for the Lorentzian kernel, circulant
    /// embedding otherwise.
    pub fn colored(spec: &KernelSpec, grid: NoiseGrid) -> Result<Self> {
        Self::colored_with(spec, grid, CirculantOptions::default())
    }

    pub fn colored_with(spec: &KernelSpec, grid: NoiseGrid, options: CirculantOptions) -> Result<Self> {
        spec.validate()?;
        grid.check_resolves(spec)?;
        let kind = match NoiseMethod::colored_for(spec.kind) {
            NoiseMethod::OuRecursion => {
                let variance = spec.eta * spec.temperature * spec.omega;
                let decay = (-spec.omega * grid.dt).exp();
                Sampler::Ou {
                    decay,
                    kick: (variance * (1.0 - decay * decay)).sqrt(),
                    stationary_sd: variance.sqrt(),
                }
            }
            _ => circulant(spec, grid, options)?,
        };
        Ok(Self {
            spec: *spec,
            grid,
            kind,
        })
    }

    pub fn method(&self) -> NoiseMethod {
        match self.kind {
            Sampler::White { .. } => NoiseMethod::White,
            Sampler::Ou { .. } => NoiseMethod::OuRecursion,
            Sampler::Circulant { .. } => NoiseMethod::Circulant,
        }
    }

    pub fn grid(&self) -> NoiseGrid {
        self.grid
    }

    /// Fills `out` (length n_steps) from `rng`.
    pub fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid.n_steps);
        match &self.kind {
            Sampler::White { sigma } => {
                for v in out.iter_mut() {
                    *v = sigma * standard_normal(rng);
                }
            }
            Sampler::Ou {
                decay,
                kick,
                stationary_sd,
            } => {
                let mut x = stationary_sd * standard_normal(rng);
                for v in out.iter_mut() {
                    *v = x;
                    x = decay * x + kick * standard_normal(rng);
                }
            }
            Sampler::Circulant { scale, fft } => {
                let mut buf: Vec<Complex<f64>> = scale
                    .iter()
                    .map(|&s| {
                        let re = standard_normal(rng);
                        let im = standard_normal(rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                for (v, z) in out.iter_mut().zip(&buf) {
                    *v = z.re;
                }
            }
        }
    }

    pub fn sample(&self, seed: u64, stream: u64) -> NoisePath {
        let mut rng = rng_for(seed, stream);
        let mut values = vec![0.0; self.grid.n_steps];
        self.fill(&mut rng, &mut values);
        NoisePath {
            values,
            seed,
            stream,
            spec: self.spec,
            grid: self.grid,
            method: self.method(),
            algorithm: RNG_ALGORITHM,
        }
    }
}

fn circulant(spec: &KernelSpec, grid: NoiseGrid, options: CirculantOptions) -> Result<Sampler> {
    let factor = options.embedding_factor.max(2);
    let m0 = (factor * grid.n_steps).next_power_of_two();
    let amp = 2.0 * spec.eta * spec.temperature;
    let mut planner = FftPlanner::new();
    let mut m = m0;
    let (row, fft) = loop {
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = j.min(m - j) as f64 * grid.dt;
                Complex::new(amp * memory_kernel(spec, lag), 0.0)
            })
            .collect();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let min = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min >= -CLIP_RELATIVE * max || options.clip_negative {
            break (row, fft);
        }
        if m >= m0 * options.max_growth.max(1) {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
                size: m,
            });
        }
        m *= 2;
    };
    let scale = row.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect();
    Ok(Sampler::Circulant { scale, fft })
}

pub fn sample_white(spec: &KernelSpec, grid: NoiseGrid, seed: u64) -> Result<NoisePath> {
    Ok(NoiseGenerator::white(spec, grid)?.sample(seed, 0))
}

pub fn sample_colored(spec: &KernelSpec, grid: NoiseGrid, seed: u64) -> Result<NoisePath> {
    Ok(NoiseGenerator::colored(spec, grid)?.sample(seed, 0))
}

/// Cross-realization estimate of ⟨ξ(t) ξ(t + lag dt)⟩ with its jackknife
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Time-averages ξ_t ξ_{t+lag} within each path, then averages over paths.
pub fn empirical_covariance<P: AsRef<[f64]>>(paths: &[P], lag: usize) -> Result<CovarianceEstimate> {
    if paths.is_empty() {
        return Err(Error::Empty("no noise paths"));
    }
    if paths.len() < 2 {
        return Err(Error::invalid("paths", "at least two paths are needed for a standard error"));
    }
    let mut per_path = Vec::with_capacity(paths.len());
    for p in paths {
        let v = p.as_ref();
        if lag >= v.len() {
            return Err(Error::invalid("lag", format!("lag {lag} must be below the path length {}", v.len())));
        }
        let n = v.len() - lag;
        let s: f64 = v[..n].iter().zip(&v[lag..]).map(|(a, b)| a * b).sum();
        per_path.push(s / n as f64);
    }
    let p = per_path.len() as f64;
    let total: f64 = per_path.iter().sum();
    let estimate = total / p;
    let loo: Vec<f64> = per_path.iter().map(|x| (total - x) / (p - 1.0)).collect();
    let loo_mean = loo.iter().sum::<f64>() / p;
    let var = (p - 1.0) / p * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>();
    Ok(CovarianceEstimate {
        estimate,
        stderr: var.sqrt(),
    })
}

/// One row of a fluctuation-dissipation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdtRow {
    pub kind: CutoffKind,
    pub lag_time: f64,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z_score: f64,
}

/// Samples `n_paths` colored paths and compares the empirical covariance
/// with 2ηT Δ_Ω(lag) at each lag (in steps).
pub fn validate_fdt(
    spec: &KernelSpec,
    grid: NoiseGrid,
    n_paths: usize,
    seed: u64,
    lags: &[usize],
    exec: Execution,
) -> Result<Vec<FdtRow>> {
    let generator = NoiseGenerator::colored(spec, grid)?;
    let paths = exec.map(n_paths, |i| generator.sample(seed, i as u64).values);
    lags.iter()
        .map(|&lag| {
            let est = empirical_covariance(&paths, lag)?;
            let lag_time = lag as f64 * grid.dt;
            let target = 2.0 * spec.eta * spec.temperature * memory_kernel(spec, lag_time);
            Ok(FdtRow {
                kind: spec.kind,
                lag_time,
                target,
                estimate: est.estimate,
                stderr: est.stderr,
                z_score: (est.estimate - target) / est.stderr,
            })
        })
        .collect()
}

/// Lags of 0, 1/Ω and 2/Ω rounded to whole steps.
pub fn default_fdt_lags(spec: &KernelSpec, dt: f64) -> Vec<usize> {
    (0..3)
        .map(|k| (k as f64 / (spec.omega * dt)).round() as usize)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(kind: CutoffKind, omega: f64) -> KernelSpec {
        KernelSpec::new(kind, 1.0, omega, 1.0, 1.0).unwrap()
    }

    #[test]
    fn white_variance_and_mean() {
        let spec = unit(CutoffKind::Lorentzian, 1.0);
        let grid = NoiseGrid::new(0.01, 1_000_000).unwrap();
        let p = sample_white(&spec, grid, 7).unwrap();
        let n = p.values.len() as f64;
        let mean = p.values.iter().sum::<f64>() / n;
        let var = p.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 200.0).abs() < 1.0, "{var}");
        assert!(mean.abs() < 4.0 * (200.0 / n).sqrt());
        let kurt = p.values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
        assert!((kurt - 3.0).abs() < 0.1, "{kurt}");
    }

    #[test]
    fn same_seed_same_path() {
        let spec = unit(CutoffKind::Gaussian, 2.0);
        let grid = NoiseGrid::new(0.05, 300).unwrap();
        let a = sample_colored(&spec, grid, 42).unwrap();
        let b = sample_colored(&spec, grid, 42).unwrap();
        assert_eq!(a, b);
        let w1 = sample_white(&spec, grid, 42).unwrap();
        let w2 = sample_white(&spec, grid, 42).unwrap();
        assert_eq!(w1.values, w2.values);
        assert_ne!(a.values, sample_colored(&spec, grid, 43).unwrap().values);
        assert_eq!(a.method, NoiseMethod::Circulant);
        assert_eq!(a.algorithm, "chacha8");
    }

    #[test]
    fn ou_stationary_variance_and_correlation() {
        let spec = unit(CutoffKind::Lorentzian, 2.0);
        let grid = NoiseGrid::new(0.05, 100).unwrap();
        let g = NoiseGenerator::colored(&spec, grid).unwrap();
        let paths: Vec<_> = (0..10_000).map(|i| g.sample(3, i)).collect();
        let c0 = empirical_covariance(&paths, 0).unwrap();
        assert!((c0.estimate - 2.0).abs() < 5.0 * c0.stderr, "{c0:?}");
        let k = 4;
        let ck = empirical_covariance(&paths, k).unwrap();
        let want = 2.0 * (-2.0 * k as f64 * 0.05).exp();
        assert!((ck.estimate - want).abs() < 5.0 * ck.stderr, "{ck:?} vs {want}");
    }

    #[test]
    fn white_lags() {
        let spec = unit(CutoffKind::Lorentzian, 1.0);
        let grid = NoiseGrid::new(0.1, 200).unwrap();
        let g = NoiseGenerator::white(&spec, grid).unwrap();
        let paths: Vec<_> = (0..2000).map(|i| g.sample(5, i)).collect();
        let c0 = empirical_covariance(&paths, 0).unwrap();
        assert!((c0.estimate - 20.0).abs() < 5.0 * c0.stderr);
        for lag in [1, 3] {
            let c = empirical_covariance(&paths, lag).unwrap();
            assert!(c.estimate.abs() < 5.0 * c.stderr);
        }
    }

    #[test]
    fn coarse_grid_decorrelates() {
        // Ω dt ≫ 1 is rejected for colored noise, so the white limit is
        // probed with a Lorentzian at the coarsest allowed grid and lag 40.
        let spec = unit(CutoffKind::Lorentzian, 2.5);
        let grid = NoiseGrid::new(0.1, 400).unwrap();
        let g = NoiseGenerator::colored(&spec, grid).unwrap();
        let paths: Vec<_> = (0..500).map(|i| g.sample(9, i)).collect();
        let c = empirical_covariance(&paths, 40).unwrap();
        assert!(c.estimate.abs() < 5.0 * c.stderr);
    }

    #[test]
    fn grid_must_resolve_kernel() {
        let spec = unit(CutoffKind::Gaussian, 10.0);
        let grid = NoiseGrid::new(0.05, 10).unwrap();
        assert!(matches!(
            NoiseGenerator::colored(&spec, grid),
            Err(Error::InvalidParameter { name: "dt", .. })
        ));
        assert!(NoiseGrid::new(0.0, 10).is_err());
        assert!(NoiseGrid::new(0.1, 0).is_err());
    }

    #[test]
    fn sharp_embedding_reports_negative_eigenvalue() {
        let spec = unit(CutoffKind::Sharp, 2.0);
        let grid = NoiseGrid::new(0.1, 256).unwrap();
        match NoiseGenerator::colored(&spec, grid) {
            Err(Error::NotPositiveSemidefinite { min_eigenvalue, size }) => {
                // Gibbs ringing of the truncated sinc does not shrink with size
                assert!(min_eigenvalue < 0.0);
                assert_eq!(size, 512 * 16);
            }
            other => panic!("expected an embedding error, got {other:?}"),
        }
        let clipped = NoiseGenerator::colored_with(
            &spec,
            grid,
            CirculantOptions {
                clip_negative: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(clipped.sample(1, 0).values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn short_gaussian_paths_grow_the_embedding() {
        // At 128 points the kernel is cut at Ωt = 6.4, where e^{-x²/4} ≈ 4e-5.
        let spec = unit(CutoffKind::Gaussian, 2.0);
        let grid = NoiseGrid::new(0.05, 64).unwrap();
        let fixed = CirculantOptions {
            max_growth: 1,
            ..Default::default()
        };
        assert!(matches!(
            NoiseGenerator::colored_with(&spec, grid, fixed),
            Err(Error::NotPositiveSemidefinite { size: 128, .. })
        ));
        let g = NoiseGenerator::colored(&spec, grid).unwrap();
        assert_eq!(g.sample(4, 0).values.len(), 64);
    }

    #[test]
    fn covariance_errors() {
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(empirical_covariance(&empty, 0), Err(Error::Empty(_))));
        let two = vec![vec![1.0, 2.0], vec![0.5, 0.1]];
        assert!(empirical_covariance(&two, 2).is_err());
        assert!(empirical_covariance(&two[..1], 0).is_err());
    }

    #[test]
    fn fdt_lags() {
        let spec = unit(CutoffKind::Gaussian, 2.0);
        assert_eq!(default_fdt_lags(&spec, 0.05), vec![0, 10, 20]);
    }
}
