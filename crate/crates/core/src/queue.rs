//! Stationary workload of a fluid queue fed by a Gaussian input path.
//!
//! `Q(0)` comes from the supremum over the lookback window `[-S, 0]`, and
//! `Q(t)` for `t > 0` follows from
//! `Q(t) = Q(0) + X(t) - ct + max(0, sup_{0<s<=t} (-Q(0) - (X(s) - cs)))`,
//! evaluated with a running maximum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{steps_for, GridSpec, PathSample, PathSampler, SamplerOptions};
use crate::rng::SeedTrace;
use crate::variance::VarianceFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueConfig {
    /// Drain rate.
    pub c: f64,
    /// Lookback horizon for the initial supremum.
    pub truncation_s: f64,
}

impl QueueConfig {
    pub fn new(c: f64, truncation_s: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("drain rate must be positive, got {c}")));
        }
        if !(truncation_s > 0.0 && truncation_s.is_finite()) {
            return Err(Error::InvalidArgument(format!("lookback must be positive, got {truncation_s}")));
        }
        Ok(Self { c, truncation_s })
    }
}

/// Workload on the grid `0, h, ..., n h`.
#[derive(Debug, Clone, Serialize)]
pub struct WorkloadPath {
    pub h: f64,
    pub q_values: Vec<f64>,
    pub q_zero: f64,
    pub argmax_location: f64,
    pub truncation_flag: bool,
}

impl WorkloadPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.q_values.len()).map(move |k| k as f64 * self.h)
    }
}

/// `max_{s in [-S, 0]} (-X(s) + c s)` over the grid and the earliest maximizer.
pub fn reich_q0(path: &PathSample, c: f64) -> (f64, f64) {
    let grid = path.grid;
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0.0;
    for k in 0..=grid.n_left {
        let s = grid.t(k);
        let v = -path.values[k] + c * s;
        if v > best {
            best = v;
            arg = s;
        }
    }
    // s = 0 contributes exactly 0.
    (best.max(0.0), arg)
}

/// Forward evolution from `q0` over the nonnegative part of the grid.
pub fn forward_workload(path: &PathSample, c: f64, q0: f64) -> WorkloadPath {
    let grid = path.grid;
    let mut q = Vec::with_capacity(grid.n_right + 1);
    let mut running = f64::NEG_INFINITY;
    for k in grid.n_left..grid.len() {
        let net = path.values[k] - c * grid.t(k);
        if k > grid.n_left {
            running = running.max(-q0 - net);
        }
        q.push((q0 + net + running.max(0.0)).max(0.0));
    }
    WorkloadPath {
        h: grid.h,
        q_values: q,
        q_zero: q0,
        argmax_location: 0.0,
        truncation_flag: false,
    }
}

/// Workload with the initial supremum taken over the path's left window.
pub fn workload_from_path(path: &PathSample, cfg: &QueueConfig) -> WorkloadPath {
    let (q0, arg) = reich_q0(path, cfg.c);
    let mut w = forward_workload(path, cfg.c, q0);
    w.argmax_location = arg;
    w.truncation_flag = arg < -0.9 * cfg.truncation_s;
    w
}

/// Precomputed sampler producing independent stationary workload paths.
pub struct WorkloadSimulator {
    cfg: QueueConfig,
    sampler: PathSampler,
}

impl WorkloadSimulator {
    pub fn new<V: VarianceFunction>(model: &V, cfg: QueueConfig, horizon: f64, h: f64) -> Result<Self> {
        Self::with_options(model, cfg, horizon, h, SamplerOptions::default())
    }

    pub fn with_options<V: VarianceFunction>(
        model: &V,
        cfg: QueueConfig,
        horizon: f64,
        h: f64,
        opts: SamplerOptions,
    ) -> Result<Self> {
        let n_left = steps_for(cfg.truncation_s, h)?;
        let n_right = steps_for(horizon, h)?.max(1);
        let grid = GridSpec::new(h, n_left, n_right)?;
        Ok(Self { cfg, sampler: PathSampler::new(model, grid, opts)? })
    }

    pub fn sampler(&self) -> &PathSampler {
        &self.sampler
    }

    pub fn config(&self) -> QueueConfig {
        self.cfg
    }

    pub fn simulate(&self, trace: SeedTrace) -> WorkloadPath {
        workload_from_path(&self.sampler.sample(trace), &self.cfg)
    }
}

/// One stationary workload path on `[0, horizon]`.
pub fn stationary_workload<V: VarianceFunction>(
    model: &V,
    cfg: QueueConfig,
    horizon: f64,
    h: f64,
    seed: u64,
) -> Result<WorkloadPath> {
    Ok(WorkloadSimulator::new(model, cfg, horizon, h)?.simulate(SeedTrace::new(seed, &[0])))
}

/// `max_{t in [0, horizon]} (X(t) - ct)` on a grid path with `n_left = 0`
/// (or the right half of any anchored path).
pub fn one_sided_sup(path: &PathSample, c: f64) -> f64 {
    let grid = path.grid;
    (grid.n_left..grid.len())
        .map(|k| path.values[k] - c * grid.t(k))
        .fold(0.0, f64::max)
}

/// Draws `Q(0)` through the time-reversed supremum `sup_{t >= 0} (X(t) - ct)`.
pub fn one_sided_sup_q0<V: VarianceFunction>(
    model: &V,
    c: f64,
    horizon: f64,
    h: f64,
    seed: u64,
) -> Result<f64> {
    let grid = GridSpec::new(h, 0, steps_for(horizon, h)?.max(1))?;
    let sampler = PathSampler::new(model, grid, SamplerOptions::default())?;
    Ok(one_sided_sup(&sampler.sample(SeedTrace::new(seed, &[0])), c))
}

/// Direct enumeration of the forward representation; the inner supremum is
/// recomputed from scratch at every `k`.
pub fn forward_workload_bruteforce(path: &PathSample, c: f64, q0: f64) -> Vec<f64> {
    let grid = path.grid;
    let net = |k: usize| path.values[k] - c * grid.t(k);
    (grid.n_left..grid.len())
        .map(|k| {
            let inner = (grid.n_left + 1..=k)
                .map(|j| -q0 - net(j))
                .fold(f64::NEG_INFINITY, f64::max);
            (q0 + net(k) + inner.max(0.0)).max(0.0)
        })
        .collect()
}
