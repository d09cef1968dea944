//! Growth (polynomial envelope) and modulus-of-continuity diagnostics for the
//! rescaled input `X(delta t) / sigma(delta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tag;
use crate::entropy::{grid_modulus, modulus_bound};
use crate::error::{Error, Result};
use crate::path::{GridSpec, PathSampler, SamplerOptions};
use crate::rng::SeedTrace;
use crate::scaling::{solve_delta, Regime, DEFAULT_TOL};
use crate::variance::{ModelSpec, VarianceFunction, VarianceModel};

fn default_eta() -> f64 {
    0.5
}
fn default_t_max() -> f64 {
    64.0
}
fn default_ppu() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaDecayConfig {
    pub model: ModelSpec,
    pub regime: Regime,
    pub c: f64,
    pub gamma: f64,
    /// Thresholds `T` at which `p_T` is reported.
    pub t_grid: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// The path is simulated on `[-t_max, t_max]` (rescaled units).
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_ppu")]
    pub points_per_unit: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaDecayReport {
    pub model: ModelSpec,
    pub c: f64,
    pub delta: f64,
    pub gamma: f64,
    /// `gamma > max(lambda, alpha)`; runs with `false` are negative controls.
    pub gamma_admissible: bool,
    pub eta: f64,
    pub t_grid: Vec<f64>,
    /// Fraction of paths with `sup_{T <= |t| <= t_max} |X(t)| / (1 + |t|^gamma) > eta`.
    pub p_t: Vec<f64>,
}

/// Empirical tail probabilities of the `Omega^gamma` envelope ratio.
pub fn run_omega_gamma_decay(cfg: &OmegaDecayConfig) -> Result<OmegaDecayReport> {
    let model = cfg.model.build()?;
    if cfg.t_grid.iter().any(|&t| !(t >= 0.0 && t <= cfg.t_max)) {
        return Err(Error::InvalidArgument("t_grid must lie in [0, t_max]".into()));
    }
    let delta = solve_delta(&model, cfg.c, DEFAULT_TOL)?.delta;
    let ppu = cfg.points_per_unit as f64;
    let half = ((cfg.t_max * ppu).round() as usize).max(1);
    let h = delta / ppu;
    let sampler = PathSampler::new(&model, GridSpec::new(h, half, half)?, SamplerOptions::default())?;
    let norm = model.sigma(delta);
    let t_idx: Vec<usize> = cfg.t_grid.iter().map(|&t| (t * ppu).ceil() as usize).collect();

    let hits: Vec<Vec<bool>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = SeedTrace::new(cfg.seed, &[tag::OMEGA, r as u64]).rng();
            let x = sampler.sample_values(&mut rng);
            // env[i]: largest envelope ratio at |t| = i / ppu over both sides.
            let env: Vec<f64> = (0..=half)
                .map(|i| {
                    let t = i as f64 / ppu;
                    let w = 1.0 + t.powf(cfg.gamma);
                    x[half + i].abs().max(x[half - i].abs()) / (norm * w)
                })
                .collect();
            let mut suffix = env.clone();
            for i in (0..half).rev() {
                suffix[i] = suffix[i].max(suffix[i + 1]);
            }
            t_idx.iter().map(|&i| suffix[i.min(half)] > cfg.eta).collect()
        })
        .collect();

    let p_t = (0..t_idx.len())
        .map(|j| hits.iter().filter(|h| h[j]).count() as f64 / cfg.replications as f64)
        .collect();
    Ok(OmegaDecayReport {
        model: model.spec(),
        c: cfg.c,
        delta,
        gamma: cfg.gamma,
        gamma_admissible: cfg.gamma > model.lambda0().max(model.alpha_inf()),
        eta: cfg.eta,
        t_grid: cfg.t_grid.clone(),
        p_t,
    })
}

fn default_horizon() -> f64 {
    1.0
}
fn default_modulus_ppu() -> usize {
    1024
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusConfig {
    pub model: ModelSpec,
    pub c: f64,
    /// Decreasing lag radii in rescaled time.
    pub zeta_grid: Vec<f64>,
    pub eta: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_modulus_ppu")]
    pub points_per_unit: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub model: ModelSpec,
    pub c: f64,
    pub delta: f64,
    pub eta: f64,
    pub zeta_grid: Vec<f64>,
    /// Fraction of paths with `sup_{|t-s| <= zeta} |X(t) - X(s)| >= eta` on `[0, horizon]`.
    pub probabilities: Vec<f64>,
    pub mean_modulus: Vec<f64>,
    /// Entropy bound at `d`-radius `min(2 zeta^lambda, sigma(horizon))`.
    pub entropy_bound: Vec<f64>,
}

pub fn run_modulus_diagnostic(cfg: &ModulusConfig) -> Result<ModulusReport> {
    let model = cfg.model.build()?;
    if cfg.zeta_grid.windows(2).any(|w| w[1] > w[0]) || cfg.zeta_grid.iter().any(|z| !(*z > 0.0)) {
        return Err(Error::InvalidArgument("zeta_grid must be positive and decreasing".into()));
    }
    let delta = solve_delta(&model, cfg.c, DEFAULT_TOL)?.delta;
    let ppu = cfg.points_per_unit as f64;
    let n = ((cfg.horizon * ppu).round() as usize).max(1);
    let sampler = PathSampler::new(&model, GridSpec::new(delta / ppu, 0, n)?, SamplerOptions::default())?;
    let norm = model.sigma(delta);
    let windows: Vec<usize> = cfg.zeta_grid.iter().map(|&z| (z * ppu + 1e-9).floor() as usize).collect();

    let moduli: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = SeedTrace::new(cfg.seed, &[tag::MODULUS, r as u64]).rng();
            let x: Vec<f64> = sampler.sample_values(&mut rng).into_iter().map(|v| v / norm).collect();
            windows.iter().map(|&w| grid_modulus(&x, w)).collect()
        })
        .collect();

    let reps = cfg.replications as f64;
    let probabilities = (0..windows.len())
        .map(|j| moduli.iter().filter(|m| m[j] >= cfg.eta).count() as f64 / reps)
        .collect();
    let mean_modulus = (0..windows.len()).map(|j| moduli.iter().map(|m| m[j]).sum::<f64>() / reps).collect();
    let cap = model.sigma(cfg.horizon);
    let lambda = model.lambda0();
    let entropy_bound = cfg
        .zeta_grid
        .iter()
        .map(|&z| modulus_bound(&model, cfg.horizon, (2.0 * z.powf(lambda)).min(cap)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModulusReport {
        model: model.spec(),
        c: cfg.c,
        delta,
        eta: cfg.eta,
        zeta_grid: cfg.zeta_grid.clone(),
        probabilities,
        mean_modulus,
        entropy_bound,
    })
}

impl OmegaDecayConfig {
    pub fn new(model: &VarianceModel, c: f64, gamma: f64, t_grid: Vec<f64>, replications: usize) -> Self {
        Self {
            model: model.spec(),
            regime: Regime::Heavy,
            c,
            gamma,
            t_grid,
            eta: default_eta(),
            t_max: default_t_max(),
            points_per_unit: default_ppu(),
            replications,
            seed: 0,
        }
    }
}

impl ModulusConfig {
    pub fn new(model: &VarianceModel, c: f64, zeta_grid: Vec<f64>, eta: f64, replications: usize) -> Self {
        Self {
            model: model.spec(),
            c,
            zeta_grid,
            eta,
            horizon: default_horizon(),
            points_per_unit: default_modulus_ppu(),
            replications,
            seed: 0,
        }
    }
}
