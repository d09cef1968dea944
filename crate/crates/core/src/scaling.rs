//! The normalizing time scale `delta(c)`, defined by `c delta / sigma(delta) = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::loglog_slope;
use crate::variance::{VarianceFunction, VarianceModel};

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: u32 = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `c -> 0`
    Heavy,
    /// `c -> infinity`
    Light,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Heavy => "heavy",
            Regime::Light => "light",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heavy" => Ok(Regime::Heavy),
            "light" => Ok(Regime::Light),
            _ => Err(Error::InvalidArgument(format!("unknown regime {s:?}"))),
        }
    }
}

impl Regime {
    /// Hurst index of the limiting fBm queue: `alpha` (heavy) or `lambda` (light).
    pub fn limit_hurst(&self, model: &VarianceModel) -> f64 {
        match self {
            Regime::Heavy => model.alpha_inf(),
            Regime::Light => model.lambda0(),
        }
    }

    /// Regular-variation index of `delta` towards the regime's limit of `c`.
    pub fn delta_exponent(&self, model: &VarianceModel) -> f64 {
        1.0 / (self.limit_hurst(model) - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSolution {
    pub c: f64,
    pub delta: f64,
    /// `c delta / sigma(delta) - 1`
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
}

/// Smallest positive root of `x / sigma(x) = 1 / c`.
///
/// Expands geometrically from `x = 1` until the sign of
/// `g(x) = c x / sigma(x) - 1` flips, then bisects in log space. `g` is
/// checked to be monotone along the expansion.
pub fn solve_delta<V: VarianceFunction>(model: &V, c: f64, tol: f64) -> Result<DeltaSolution> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("drain rate must be positive, got {c}")));
    }
    let g = |x: f64| c * x / model.sigma(x) - 1.0;

    let mut x = 1.0;
    let mut gx = g(x);
    if gx == 0.0 {
        return Ok(DeltaSolution { c, delta: 1.0, residual: 0.0, bracket: (1.0, 1.0), iterations: 0 });
    }
    // g increasing: g(1) < 0 means the root is to the right.
    let step = if gx < 0.0 { 2.0 } else { 0.5 };
    let mut found = None;
    for _ in 0..MAX_DOUBLINGS {
        let nx = x * step;
        let ng = g(nx);
        if !ng.is_finite() {
            break;
        }
        let increasing = if step > 1.0 { ng >= gx } else { ng <= gx };
        if !increasing {
            return Err(Error::NonMonotone { at: nx });
        }
        if ng == 0.0 {
            return Ok(DeltaSolution { c, delta: nx, residual: 0.0, bracket: (nx, nx), iterations: 0 });
        }
        if (ng > 0.0) != (gx > 0.0) {
            found = Some(if step > 1.0 { (x, nx) } else { (nx, x) });
            break;
        }
        x = nx;
        gx = ng;
    }
    let (mut lo, mut hi) = found.ok_or(Error::BracketNotFound { c, doublings: MAX_DOUBLINGS })?;
    let bracket = (lo, hi);

    let mut iterations = 0;
    let mut mid = lo;
    let mut res = g(lo);
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        mid = if hi / lo > 1.0 + 1e-3 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        res = g(mid);
        if res.abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if res < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if res.abs() > tol {
        // Pick the better endpoint if floating point stalls the bisection.
        for cand in [lo, hi] {
            let r = g(cand);
            if r.abs() < res.abs() {
                mid = cand;
                res = r;
            }
        }
    }
    Ok(DeltaSolution { c, delta: mid, residual: res, bracket, iterations })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentAudit {
    pub regime: Regime,
    pub c_grid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    pub passed: bool,
}

/// Log-log slope of `delta(c)` along `c_grid` against the predicted index
/// `1/(alpha - 1)` (heavy) or `1/(lambda - 1)` (light); 5% relative tolerance.
pub fn delta_exponent_audit(model: &VarianceModel, regime: Regime, c_grid: &[f64]) -> Result<ExponentAudit> {
    let deltas = c_grid
        .iter()
        .map(|&c| solve_delta(model, c, DEFAULT_TOL).map(|s| s.delta))
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(c_grid, &deltas)?;
    let expected = regime.delta_exponent(model);
    Ok(ExponentAudit {
        regime,
        c_grid: c_grid.to_vec(),
        deltas,
        slope,
        expected,
        passed: (slope - expected).abs() <= 0.05 * expected.abs(),
    })
}

/// Three-decade default grids: `10^-5..10^-2` (heavy), `10^2..10^5` (light).
pub fn default_c_grid(regime: Regime) -> Vec<f64> {
    match regime {
        Regime::Heavy => crate::stats::logspace(1e-5, 1e-2, 16),
        Regime::Light => crate::stats::logspace(1e2, 1e5, 16),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fbm_closed_form_examples() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        assert!(rel(solve_delta(&bm, 4.0, DEFAULT_TOL).unwrap().delta, 1.0 / 16.0) < 1e-9);
        assert!(rel(solve_delta(&bm, 0.25, DEFAULT_TOL).unwrap().delta, 16.0) < 1e-9);
        let f7 = VarianceModel::fbm(0.7).unwrap();
        let d = solve_delta(&f7, 10.0, DEFAULT_TOL).unwrap();
        assert!(rel(d.delta, 10f64.powf(-10.0 / 3.0)) < 1e-9);
        assert!((d.delta - 4.6416e-4).abs() < 1e-7);
    }

    #[test]
    fn fbm_closed_form_grid() {
        for h in [0.3, 0.5, 0.7, 0.9] {
            let m = VarianceModel::fbm(h).unwrap();
            for c in [0.01, 1.0, 100.0] {
                let s = solve_delta(&m, c, DEFAULT_TOL).unwrap();
                assert!(rel(s.delta, c.powf(1.0 / (h - 1.0))) < 1e-9, "H={h} c={c}: {s:?}");
                assert!(s.residual.abs() <= DEFAULT_TOL);
                assert!(s.bracket.0 <= s.delta && s.delta <= s.bracket.1);
            }
        }
    }

    #[test]
    fn power_sum_root_matches_scan() {
        let m = VarianceModel::power_sum(0.4, 0.7, 1.0, 1.0).unwrap();
        let s = solve_delta(&m, 2.0, DEFAULT_TOL).unwrap();
        let d = s.delta;
        assert!((d / (d.powf(0.8) + d.powf(1.4)).sqrt() - 0.5).abs() < 1e-10);
        // Independent sign-change scan on a fine log grid.
        let g = |x: f64| x / (x.powf(0.8) + x.powf(1.4)).sqrt() - 0.5;
        let grid = crate::stats::logspace(1e-3, 1e3, 60_001);
        let k = grid.windows(2).position(|w| g(w[0]) < 0.0 && g(w[1]) >= 0.0).unwrap();
        assert!(grid[k] <= d && d <= grid[k + 1]);
    }

    #[test]
    fn extreme_drain_rates() {
        for m in crate::variance::builtin_models() {
            for c in [1e-6, 1e-3, 1e3, 1e6] {
                let s = solve_delta(&m, c, DEFAULT_TOL).unwrap();
                assert!(s.residual.abs() <= DEFAULT_TOL, "{m} c={c}: {s:?}");
            }
        }
    }

    #[test]
    fn rejects_non_monotone() {
        struct Wobble;
        impl VarianceFunction for Wobble {
            // x / sigma(x) dips between 2 and 8.
            fn sigma2(&self, t: f64) -> f64 {
                let t = t.abs();
                let bump = if (2.0..8.0).contains(&t) { 40.0 } else { 0.0 };
                t + bump * t
            }
        }
        assert!(matches!(solve_delta(&Wobble, 0.1, DEFAULT_TOL), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn rejects_bad_c() {
        let m = VarianceModel::fbm(0.5).unwrap();
        assert!(solve_delta(&m, 0.0, DEFAULT_TOL).is_err());
        assert!(solve_delta(&m, f64::NAN, DEFAULT_TOL).is_err());
    }

    #[test]
    fn bracket_failure_for_flat_ratio() {
        // sigma(x) = x: x / sigma(x) = 1 never equals 1/c for c != 1.
        struct Linear;
        impl VarianceFunction for Linear {
            fn sigma2(&self, t: f64) -> f64 {
                t * t
            }
        }
        assert!(matches!(
            solve_delta(&Linear, 2.0, DEFAULT_TOL),
            Err(Error::BracketNotFound { .. })
        ));
    }

    #[test]
    fn exponent_audits() {
        let bm = VarianceModel::fbm(0.5).unwrap();
        for r in [Regime::Heavy, Regime::Light] {
            let a = delta_exponent_audit(&bm, r, &default_c_grid(r)).unwrap();
            assert!((a.slope + 2.0).abs() < 1e-9 && a.expected == -2.0 && a.passed);
        }
        let ps = VarianceModel::power_sum(0.4, 0.7, 1.0, 1.0).unwrap();
        let h = delta_exponent_audit(&ps, Regime::Heavy, &default_c_grid(Regime::Heavy)).unwrap();
        assert!(h.passed, "{h:?}");
        assert!((h.expected + 10.0 / 3.0).abs() < 1e-12);
        let l = delta_exponent_audit(&ps, Regime::Light, &default_c_grid(Regime::Light)).unwrap();
        assert!(l.passed, "{l:?}");
        assert!((l.expected + 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn delta_strictly_decreasing() {
        for m in crate::variance::builtin_models() {
            let ds: Vec<f64> = crate::stats::logspace(1e-3, 1e3, 40)
                .into_iter()
                .map(|c| solve_delta(&m, c, DEFAULT_TOL).unwrap().delta)
                .collect();
            assert!(ds.windows(2).all(|w| w[1] < w[0]), "{m}");
        }
    }
}
