//! Exact sampling of a stationary-increment Gaussian process on a uniform grid.
//!
//! Increments are drawn as one stationary sequence by circulant embedding of
//! their autocovariance (Davies-Harte). Short sequences use a dense Cholesky
//! factor instead. The path is anchored at `X(0) = 0` by subtracting the
//! running sum at the anchor index.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedTrace;
use crate::variance::{increment_autocovariance, VarianceFunction};

/// Uniform grid `t_k = (k - n_left) h`, `k = 0..=n_left + n_right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub n_left: usize,
    pub n_right: usize,
}

impl GridSpec {
    pub fn new(h: f64, n_left: usize, n_right: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {h}")));
        }
        if n_right == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step right of 0".into()));
        }
        Ok(Self { h, n_left, n_right })
    }

    pub fn len(&self) -> usize {
        self.n_left + self.n_right + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn increments(&self) -> usize {
        self.n_left + self.n_right
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        (k as f64 - self.n_left as f64) * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }
}

/// Steps needed to cover `length` with step `h`; `length` must be a multiple of `h`.
pub fn steps_for(length: f64, h: f64) -> Result<usize> {
    let n = (length / h).round();
    if length < 0.0 || (n * h - length).abs() > 1e-9 * length.max(h) {
        return Err(Error::InvalidArgument(format!("{length} is not a multiple of the grid step {h}")));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub seed_trace: Option<SeedTrace>,
}

impl PathSample {
    /// Wraps deterministic values; requires one value per grid point and `X(0) = 0`.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values[grid.n_left] != 0.0 {
            return Err(Error::InvalidArgument("path must satisfy X(0) = 0".into()));
        }
        Ok(Self { grid, values, seed_trace: None })
    }

    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Circulant,
    Dense,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Circulant => "circulant",
            Method::Dense => "dense",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub embedding_size: usize,
    pub min_eigenvalue: f64,
    pub truncated_mass: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    /// Sequences of at most this many increments use the dense factorization.
    pub dense_threshold: usize,
    /// Largest tolerated fraction of clipped spectral mass.
    pub mass_ceiling: f64,
    /// How many times the embedding may be doubled looking for a nonnegative spectrum.
    pub max_padding_doublings: u32,
    /// Eigenvalues in `[-eig_tol * max|lambda|, 0)` count as rounding noise.
    pub eig_tol: f64,
    pub force_method: Option<Method>,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 512,
            mass_ceiling: 1e-6,
            max_padding_doublings: 3,
            eig_tol: 1e-10,
            force_method: None,
        }
    }
}

/// Eigenvalues of the circulant matrix with first row `(g_0, ..., g_m, g_{m-1}, ..., g_1)`.
pub fn embedding_spectrum(gamma: &[f64]) -> Vec<f64> {
    assert!(gamma.len() >= 2, "embedding needs gamma_0..gamma_m with m >= 1");
    let m = gamma.len() - 1;
    let size = 2 * m;
    let mut buf: Vec<Complex<f64>> = (0..size)
        .map(|j| Complex::new(if j <= m { gamma[j] } else { gamma[size - j] }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let scale = buf.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    debug_assert!(buf.iter().all(|z| z.im.abs() <= 1e-10 * scale));
    buf.into_iter().map(|z| z.re).collect()
}

/// Clipped-mass fraction and raw minimum of a spectrum, ignoring rounding noise.
fn spectrum_audit(eig: &[f64], eig_tol: f64) -> (f64, f64) {
    let total: f64 = eig.iter().map(|l| l.abs()).sum();
    let max_abs = eig.iter().map(|l| l.abs()).fold(0.0f64, f64::max);
    let clipped: f64 = eig.iter().filter(|&&l| l < -eig_tol * max_abs).map(|l| -l).sum::<f64>() + 0.0;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    (if total > 0.0 { clipped / total } else { 0.0 }, min)
}

enum Backend {
    Dense {
        // Row-packed lower Cholesky factor.
        factor: Vec<f64>,
    },
    Circulant {
        // sqrt(max(lambda_j, 0) / size) for j = 0..=m.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

/// Draws stationary Gaussian increment sequences of fixed length.
///
/// Setup (spectrum or factorization) happens once; `sample` is then cheap and
/// may be called concurrently with independent generators.
pub struct IncrementSampler {
    n: usize,
    backend: Backend,
    report: EmbeddingReport,
}

impl IncrementSampler {
    pub fn new<V: VarianceFunction>(model: &V, h: f64, n: usize, opts: SamplerOptions) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one increment".into()));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        let method = opts.force_method.unwrap_or(if n <= opts.dense_threshold {
            Method::Dense
        } else {
            Method::Circulant
        });
        if method == Method::Dense {
            if let Some(s) = Self::dense(model, h, n) {
                return Ok(s);
            }
        }
        Self::circulant(model, h, n, opts)
    }

    fn dense<V: VarianceFunction>(model: &V, h: f64, n: usize) -> Option<Self> {
        let gamma: Vec<f64> = (0..n).map(|k| increment_autocovariance(model, h, k)).collect();
        let cov = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
        let chol = cov.cholesky()?;
        let l = chol.l();
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                factor.push(l[(i, j)]);
            }
        }
        Some(Self {
            n,
            backend: Backend::Dense { factor },
            report: EmbeddingReport {
                embedding_size: n,
                min_eigenvalue: f64::NAN,
                truncated_mass: 0.0,
                method: Method::Dense,
            },
        })
    }

    fn circulant<V: VarianceFunction>(model: &V, h: f64, n: usize, opts: SamplerOptions) -> Result<Self> {
        let base = (n - 1).max(1).next_power_of_two();
        let mut best: Option<(usize, Vec<f64>, f64, f64)> = None;
        for d in 0..=opts.max_padding_doublings {
            let m = base << d;
            let gamma: Vec<f64> = (0..=m).map(|k| increment_autocovariance(model, h, k)).collect();
            let eig = embedding_spectrum(&gamma);
            let (mass, min) = spectrum_audit(&eig, opts.eig_tol);
            let better = best.as_ref().is_none_or(|b| mass < b.2);
            if better {
                best = Some((m, eig, mass, min));
            }
            if mass == 0.0 {
                break;
            }
        }
        let (m, eig, mass, min) = best.expect("at least one embedding tried");
        if mass > opts.mass_ceiling {
            return Err(Error::EmbeddingTruncation {
                model: model.describe(),
                h,
                n,
                mass,
                ceiling: opts.mass_ceiling,
            });
        }
        let size = 2 * m;
        let weights = eig[..=m].iter().map(|&l| (l.max(0.0) / size as f64).sqrt()).collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        Ok(Self {
            n,
            backend: Backend::Circulant { weights, fft },
            report: EmbeddingReport {
                embedding_size: size,
                min_eigenvalue: min,
                truncated_mass: mass,
                method: Method::Circulant,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn report(&self) -> EmbeddingReport {
        self.report
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.backend {
            Backend::Dense { factor } => {
                let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                let mut out = Vec::with_capacity(self.n);
                let mut row = 0;
                for i in 0..self.n {
                    let li = &factor[row..row + i + 1];
                    out.push(li.iter().zip(&z).map(|(a, b)| a * b).sum());
                    row += i + 1;
                }
                out
            }
            Backend::Circulant { weights, fft } => {
                let m = weights.len() - 1;
                let size = 2 * m;
                let mut buf = vec![Complex::new(0.0, 0.0); size];
                buf[0] = Complex::new(weights[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
                buf[m] = Complex::new(weights[m] * rng.sample::<f64, _>(StandardNormal), 0.0);
                let half = std::f64::consts::FRAC_1_SQRT_2;
                for j in 1..m {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let w = Complex::new(re, im) * (weights[j] * half);
                    buf[j] = w;
                    buf[size - j] = w.conj();
                }
                fft.process(&mut buf);
                buf[..self.n].iter().map(|z| z.re).collect()
            }
        }
    }
}

/// Draws one increment sequence of length `n` with step `h`.
pub fn sample_increments<V: VarianceFunction>(
    model: &V,
    h: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, EmbeddingReport)> {
    let sampler = IncrementSampler::new(model, h, n, SamplerOptions::default())?;
    let mut rng = SeedTrace::new(seed, &[0]).rng();
    Ok((sampler.sample(&mut rng), sampler.report()))
}

/// Turns increments `d_i = X(t_{i+1}) - X(t_i)` into a path anchored at `anchor`.
pub fn anchor_increments(increments: &[f64], anchor: usize) -> Vec<f64> {
    let mut running = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    running.push(acc);
    for d in increments {
        acc += d;
        running.push(acc);
    }
    let base = running[anchor];
    running.iter_mut().for_each(|v| *v -= base);
    running
}

/// Reusable sampler for whole paths on a fixed grid.
pub struct PathSampler {
    grid: GridSpec,
    increments: IncrementSampler,
}

impl PathSampler {
    pub fn new<V: VarianceFunction>(model: &V, grid: GridSpec, opts: SamplerOptions) -> Result<Self> {
        let increments = IncrementSampler::new(model, grid.h, grid.increments(), opts)?;
        Ok(Self { grid, increments })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn report(&self) -> EmbeddingReport {
        self.increments.report()
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        anchor_increments(&self.increments.sample(rng), self.grid.n_left)
    }

    pub fn sample(&self, trace: SeedTrace) -> PathSample {
        let values = self.sample_values(&mut trace.rng());
        PathSample { grid: self.grid, values, seed_trace: Some(trace) }
    }
}

pub fn sample_path<V: VarianceFunction>(model: &V, grid: GridSpec, seed: u64) -> Result<PathSample> {
    let sampler = PathSampler::new(model, grid, SamplerOptions::default())?;
    Ok(sampler.sample(SeedTrace::new(seed, &[0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variance::VarianceModel;

    #[test]
    fn white_noise_spectrum_is_flat() {
        let mut g = vec![0.0; 17];
        g[0] = 1.0;
        assert!(embedding_spectrum(&g).iter().all(|l| (l - 1.0).abs() < 1e-12));
        let bm = VarianceModel::fbm(0.5).unwrap();
        let h = 0.37;
        let g: Vec<f64> = (0..=32).map(|k| increment_autocovariance(&bm, h, k)).collect();
        assert!(embedding_spectrum(&g).iter().all(|l| (l - h).abs() < 1e-12));
    }

    #[test]
    fn fgn_spectrum_nonnegative() {
        let f = VarianceModel::fbm(0.7).unwrap();
        let g: Vec<f64> = (0..=64).map(|k| increment_autocovariance(&f, 1.0, k)).collect();
        let eig = embedding_spectrum(&g);
        // Independent check: direct O(n^2) DFT of the circulant row.
        let size = 128;
        let row: Vec<f64> = (0..size).map(|j| if j <= 64 { g[j] } else { g[size - j] }).collect();
        for (k, l) in eig.iter().enumerate() {
            let direct: f64 = row
                .iter()
                .enumerate()
                .map(|(j, c)| c * (2.0 * std::f64::consts::PI * (j * k) as f64 / size as f64).cos())
                .sum();
            assert!((direct - l).abs() < 1e-10);
        }
        assert!(eig.iter().copied().fold(f64::INFINITY, f64::min) >= 0.0);
    }

    #[test]
    fn single_increment_has_sigma2_variance() {
        let m = VarianceModel::power_sum(0.4, 0.7, 1.0, 1.0).unwrap();
        let s = IncrementSampler::new(&m, 0.5, 1, SamplerOptions::default()).unwrap();
        assert_eq!(s.report().method, Method::Dense);
        let n = 20_000;
        let mut rng = SeedTrace::new(3, &[]).rng();
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let target = m.sigma2(0.5);
        // Var of the sample variance estimate is 2 sigma^4 / n.
        let se = target * (2.0 / n as f64).sqrt();
        assert!((var - target).abs() < 4.0 * se, "{var} vs {target}");
    }

    #[test]
    fn brownian_increments_variance() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        let (xs, rep) = sample_increments(&bm, 0.01, 1000, 11).unwrap();
        assert_eq!(rep.method, Method::Circulant);
        assert_eq!(rep.truncated_mass, 0.0);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / 1000.0;
        let se = 0.01 * (2.0f64 / 1000.0).sqrt();
        assert!((var - 0.01).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn fgn_lag_one_correlation() {
        let f = VarianceModel::fbm(0.7).unwrap();
        let h = 0.1;
        let rho = increment_autocovariance(&f, h, 1) / increment_autocovariance(&f, h, 0);
        assert!((rho - (2f64.powf(0.4) - 1.0)).abs() < 1e-12);
        // Batch estimate over independent sequences: the spread of per-sequence
        // lag-1 correlations gives the standard error.
        let sampler = IncrementSampler::new(&f, h, 4096, SamplerOptions::default()).unwrap();
        let batches = 40;
        let est: Vec<f64> = (0..batches)
            .map(|b| {
                let x = sampler.sample(&mut SeedTrace::new(5, &[b]).rng());
                let c0: f64 = x.iter().map(|v| v * v).sum();
                let c1: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
                c1 / c0
            })
            .collect();
        let mean = est.iter().sum::<f64>() / batches as f64;
        let sd = (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (batches - 1) as f64).sqrt();
        let se = sd / (batches as f64).sqrt();
        assert!((mean - rho).abs() < 3.0 * se.max(1e-4), "{mean} vs {rho} (se {se})");
    }

    #[test]
    fn anchoring_and_determinism() {
        let m = VarianceModel::power_ratio(0.7, 0.4, 1.0, 1.0).unwrap();
        let grid = GridSpec::new(0.05, 700, 300).unwrap();
        let a = sample_path(&m, grid, 99).unwrap();
        let b = sample_path(&m, grid, 99).unwrap();
        assert_eq!(a.values[700], 0.0);
        assert_eq!(a.values.len(), 1001);
        assert_eq!(a.values, b.values);
        let c = sample_path(&m, grid, 100).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn minimal_path() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        let p = sample_path(&bm, GridSpec::new(0.25, 0, 1).unwrap(), 1).unwrap();
        assert_eq!(p.values.len(), 2);
        assert_eq!(p.values[0], 0.0);
    }

    #[test]
    fn anchor_increments_matches_outward_sums() {
        let d = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(anchor_increments(&d, 2), vec![1.0, 2.0, 0.0, 0.5, 3.5]);
    }

    #[test]
    fn steps_for_rejects_off_grid() {
        assert_eq!(steps_for(2.0, 0.25).unwrap(), 8);
        assert!(steps_for(2.1, 0.25).is_err());
    }
}
