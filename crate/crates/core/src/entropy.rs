//! Metric entropy of an interval under `d(s, t) = sigma(|t - s|)` and the
//! Dudley-type integrals built from it.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{GridSpec, PathSampler, SamplerOptions};
use crate::rng::SeedTrace;
use crate::stats::logspace;
use crate::variance::VarianceFunction;

pub const NODES_PER_DECADE: usize = 64;
/// Decades covered below the upper limit before the tail estimate takes over.
pub const DECADES: usize = 6;
const REFINEMENT_TOL: f64 = 0.005;
const TAIL_TOL: f64 = 0.001;
/// Jumps of the covering number placed exactly in the quadrature.
const MAX_BREAKS: usize = 4096;

/// `x` with `sigma(x) = theta`, to relative tolerance `1e-10`.
pub fn sigma_inverse<V: VarianceFunction>(model: &V, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::ThetaOutOfRange { theta });
    }
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let mut steps = 0;
    while model.sigma(lo) > theta {
        lo *= 0.5;
        steps += 1;
        if lo == 0.0 || steps > 2100 {
            return Err(Error::ThetaOutOfRange { theta });
        }
    }
    while model.sigma(hi) < theta {
        hi *= 2.0;
        steps += 1;
        if !hi.is_finite() || steps > 2100 {
            return Err(Error::ThetaOutOfRange { theta });
        }
    }
    if lo == hi {
        return Ok(lo);
    }
    for _ in 0..400 {
        let mid = if hi / lo > 1.0 + 1e-3 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        let s = model.sigma(mid);
        if (s - theta).abs() <= 1e-10 * theta || mid == lo || mid == hi {
            return Ok(mid);
        }
        if s < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Size of the net with centers every `2 sigma^{-1}(theta)` on `[0, L]`.
///
/// Saturates at `u64::MAX` when the radius underflows.
pub fn covering_number<V: VarianceFunction>(model: &V, l: f64, theta: f64) -> u64 {
    match sigma_inverse(model, theta) {
        Ok(r) if r >= l / 2.0 => 1,
        Ok(r) if r > 0.0 => {
            // Shave bisection noise so exact ratios do not round up.
            let k = (l / (2.0 * r) * (1.0 - 1e-9)).ceil();
            if k >= u64::MAX as f64 { u64::MAX } else { k as u64 + 1 }
        }
        // theta beyond the range of sigma: one ball covers everything.
        Err(_) if theta > 0.0 && model.sigma(l) <= theta => 1,
        _ => u64::MAX,
    }
}

/// `log N(theta)` computed in floating point so huge counts stay finite.
pub fn metric_entropy<V: VarianceFunction>(model: &V, l: f64, theta: f64) -> f64 {
    if model.sigma(l / 2.0) <= theta {
        return 0.0;
    }
    match sigma_inverse(model, theta) {
        Ok(r) if r >= l / 2.0 => 0.0,
        Ok(r) if r > 0.0 => ((l / (2.0 * r) * (1.0 - 1e-9)).ceil() + 1.0).ln(),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated contribution of `(0, lowest node]` relative to the total.
    pub tail_fraction: f64,
}

/// Log-spaced quadrature of `int_0^upper sqrt(log N(theta)) dtheta` down to
/// `upper 10^-DECADES`, plus a rectangle for the tail.
///
/// The integrand is a step function that jumps at `theta_j = sigma(L / 2j)`.
/// The first `MAX_BREAKS` jumps are merged into the node set and each segment
/// is evaluated at its midpoint, so segments of constant `N` are exact.
pub fn entropy_quadrature<V: VarianceFunction>(
    model: &V,
    l: f64,
    upper: f64,
    nodes_per_decade: usize,
) -> Quadrature {
    if upper <= 0.0 {
        return Quadrature { value: 0.0, tail_fraction: 0.0 };
    }
    let n = DECADES * nodes_per_decade;
    let f = |theta: f64| metric_entropy(model, l, theta).sqrt();
    let bottom = upper * 10f64.powf(-(DECADES as f64));
    let mut nodes: Vec<f64> = (0..=n)
        .map(|i| upper * 10f64.powf(-(i as f64) / nodes_per_decade as f64))
        .collect();
    nodes.extend(
        (1..=MAX_BREAKS)
            .map(|j| model.sigma(l / (2.0 * j as f64)))
            .take_while(|&t| t > bottom)
            .filter(|&t| t < upper),
    );
    nodes.sort_by(|a, b| b.total_cmp(a));
    nodes.dedup();
    let body: f64 = nodes.windows(2).map(|t| (t[0] - t[1]) * f(0.5 * (t[0] + t[1]))).sum();
    let tail = bottom * f(bottom);
    let value = body + tail;
    Quadrature {
        value,
        tail_fraction: if value > 0.0 { tail / value } else { 0.0 },
    }
}

fn converged_integral<V: VarianceFunction>(model: &V, l: f64, upper: f64) -> Result<f64> {
    if upper == 0.0 {
        return Ok(0.0);
    }
    let coarse = entropy_quadrature(model, l, upper, NODES_PER_DECADE);
    let fine = entropy_quadrature(model, l, upper, 2 * NODES_PER_DECADE);
    let ok = coarse.value.is_finite()
        && fine.value.is_finite()
        && (fine.value - coarse.value).abs() <= REFINEMENT_TOL * fine.value.abs()
        && fine.tail_fraction < TAIL_TOL;
    if ok {
        Ok(fine.value)
    } else {
        Err(Error::QuadratureNotConverged { coarse: coarse.value, refined: fine.value })
    }
}

/// `int_0^upper sqrt(H_d([0, L], theta)) dtheta`; the usual choice of `upper`
/// is half the `d`-diameter, `sigma(L) / 2`.
pub fn dudley_integral<V: VarianceFunction>(model: &V, l: f64, upper: f64) -> Result<f64> {
    if !(l > 0.0) || !(upper >= 0.0) || upper > model.sigma(l) * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "need L > 0 and 0 <= upper <= sigma(L); got L = {l}, upper = {upper}"
        )));
    }
    converged_integral(model, l, upper)
}

/// Entropy integral up to `zeta`: the bound on the expected modulus of continuity
/// at `d`-radius `zeta`.
pub fn modulus_bound<V: VarianceFunction>(model: &V, l: f64, zeta: f64) -> Result<f64> {
    if !(l > 0.0) || !(zeta >= 0.0) || zeta > model.sigma(l) * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "need L > 0 and 0 <= zeta <= sigma(L); got L = {l}, zeta = {zeta}"
        )));
    }
    converged_integral(model, l, zeta)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyProfile {
    pub interval_length: f64,
    pub theta_grid: Vec<f64>,
    pub covering_numbers: Vec<u64>,
    pub entropy_values: Vec<f64>,
    pub dudley_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus_bound: Option<f64>,
}

pub fn entropy_profile<V: VarianceFunction>(model: &V, l: f64, zeta: Option<f64>) -> Result<EntropyProfile> {
    let upper = model.sigma(l) / 2.0;
    let mut theta_grid = logspace(upper * 1e-6, upper, 6 * 4 + 1);
    theta_grid.reverse();
    let covering_numbers = theta_grid.iter().map(|&t| covering_number(model, l, t)).collect();
    let entropy_values = theta_grid.iter().map(|&t| metric_entropy(model, l, t)).collect();
    let dudley_value = dudley_integral(model, l, upper)?;
    let modulus_bound = zeta.map(|z| modulus_bound(model, l, z)).transpose()?;
    Ok(EntropyProfile {
        interval_length: l,
        theta_grid,
        covering_numbers,
        entropy_values,
        dudley_value,
        zeta,
        modulus_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupRatioReport {
    pub lengths: Vec<f64>,
    pub expected_sup: Vec<f64>,
    pub std_error: Vec<f64>,
    pub dudley: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub const SUP_GRID_STEPS: usize = 2048;

/// Monte Carlo `E sup_{[0, L]} X` (grid `h = L / 2048`) over the Dudley
/// integral at `sigma(L) / 2`, for each `L`.
pub fn expected_sup_ratio<V: VarianceFunction>(
    model: &V,
    l_grid: &[f64],
    replications: usize,
    seed: u64,
) -> Result<SupRatioReport> {
    if replications < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 replications, got {replications}")));
    }
    let mut out = SupRatioReport {
        lengths: l_grid.to_vec(),
        expected_sup: vec![],
        std_error: vec![],
        dudley: vec![],
        ratios: vec![],
    };
    for (li, &l) in l_grid.iter().enumerate() {
        let grid = GridSpec::new(l / SUP_GRID_STEPS as f64, 0, SUP_GRID_STEPS)?;
        let sampler = PathSampler::new(model, grid, SamplerOptions::default())?;
        let sups: Vec<f64> = (0..replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = SeedTrace::new(seed, &[li as u64, r as u64]).rng();
                sampler.sample_values(&mut rng).into_iter().fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let n = sups.len() as f64;
        let mean = sups.iter().sum::<f64>() / n;
        let var = sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let dudley = dudley_integral(model, l, model.sigma(l) / 2.0)?;
        out.expected_sup.push(mean);
        out.std_error.push((var / n).sqrt());
        out.dudley.push(dudley);
        out.ratios.push(mean / dudley);
    }
    Ok(out)
}

/// `max |x_k - x_j|` over index pairs with `|k - j| <= window`, in linear time.
pub fn grid_modulus(values: &[f64], window: usize) -> f64 {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (k, &x) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&j| values[j] <= x) {
            maxq.pop_back();
        }
        maxq.push_back(k);
        while minq.back().is_some_and(|&j| values[j] >= x) {
            minq.pop_back();
        }
        minq.push_back(k);
        let start = k.saturating_sub(window);
        while maxq.front().is_some_and(|&j| j < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < start) {
            minq.pop_front();
        }
        let hi = values[*maxq.front().unwrap()];
        let lo = values[*minq.front().unwrap()];
        best = best.max(hi - x).max(x - lo);
    }
    best
}
