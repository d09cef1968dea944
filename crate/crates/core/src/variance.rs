//! Variance functions of centered Gaussian processes with stationary
//! increments, the covariances they induce, and numeric checks of the
//! regularity conditions used by the scaling limits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{logspace, loglog_slope};

/// Anything that can serve as `sigma^2(.)` of a stationary-increment process.
///
/// Implementations must be even in `t` (only `|t|` is ever meaningful) and
/// vanish at zero.
pub trait VarianceFunction: Sync {
    fn sigma2(&self, t: f64) -> f64;

    fn sigma(&self, t: f64) -> f64 {
        self.sigma2(t).sqrt()
    }

    /// Human-readable label used in diagnostics.
    fn describe(&self) -> String {
        "custom variance function".to_string()
    }
}

impl<V: VarianceFunction + ?Sized> VarianceFunction for &V {
    fn sigma2(&self, t: f64) -> f64 {
        (**self).sigma2(t)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fbm,
    PowerSum,
    PowerRatio,
}

/// A validated parametric variance function.
///
/// * `Fbm`: `|t|^{2H}`
/// * `PowerSum`: `a t^{2 lambda} + b t^{2 alpha}`, requires `lambda <= alpha`
/// * `PowerRatio`: `a t^{2 lambda} / (1 + b t^{2 (lambda - alpha)})`, requires `lambda > alpha`
///
/// `lambda` is the regular-variation index of `sigma` at zero and `alpha` the
/// index at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceModel {
    kind: ModelKind,
    lambda0: f64,
    alpha_inf: f64,
    a: f64,
    b: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")))
    }
}

impl VarianceModel {
    pub fn fbm(hurst: f64) -> Result<Self> {
        check_unit("hurst", hurst)?;
        Ok(Self { kind: ModelKind::Fbm, lambda0: hurst, alpha_inf: hurst, a: 1.0, b: 0.0 })
    }

    pub fn power_sum(lambda0: f64, alpha_inf: f64, a: f64, b: f64) -> Result<Self> {
        check_unit("lambda0", lambda0)?;
        check_unit("alpha_inf", alpha_inf)?;
        check_positive("a", a)?;
        check_positive("b", b)?;
        if lambda0 > alpha_inf {
            return Err(Error::InvalidModel(format!(
                "power_sum needs lambda0 <= alpha_inf (got {lambda0} > {alpha_inf}); use power_ratio"
            )));
        }
        Ok(Self { kind: ModelKind::PowerSum, lambda0, alpha_inf, a, b })
    }

    pub fn power_ratio(lambda0: f64, alpha_inf: f64, a: f64, b: f64) -> Result<Self> {
        check_unit("lambda0", lambda0)?;
        check_unit("alpha_inf", alpha_inf)?;
        check_positive("a", a)?;
        check_positive("b", b)?;
        if lambda0 <= alpha_inf {
            return Err(Error::InvalidModel(format!(
                "power_ratio needs lambda0 > alpha_inf (got {lambda0} <= {alpha_inf}); use power_sum"
            )));
        }
        Ok(Self { kind: ModelKind::PowerRatio, lambda0, alpha_inf, a, b })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Hurst parameter, only for fBm.
    pub fn hurst(&self) -> Option<f64> {
        (self.kind == ModelKind::Fbm).then_some(self.lambda0)
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha_inf(&self) -> f64 {
        self.alpha_inf
    }

    pub fn coeffs(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Whether this model is exactly self-similar (fBm).
    pub fn is_self_similar(&self) -> bool {
        self.kind == ModelKind::Fbm
    }

    pub fn spec(&self) -> ModelSpec {
        let fbm = self.kind == ModelKind::Fbm;
        ModelSpec {
            kind: self.kind,
            hurst: fbm.then_some(self.lambda0),
            lambda0: (!fbm).then_some(self.lambda0),
            alpha_inf: (!fbm).then_some(self.alpha_inf),
            a: (!fbm).then_some(self.a),
            b: (!fbm).then_some(self.b),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(s)?;
        spec.build()
    }
}

impl VarianceFunction for VarianceModel {
    #[inline]
    fn sigma2(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::Fbm => t.powf(2.0 * self.lambda0),
            ModelKind::PowerSum => {
                self.a * t.powf(2.0 * self.lambda0) + self.b * t.powf(2.0 * self.alpha_inf)
            }
            ModelKind::PowerRatio => {
                self.a * t.powf(2.0 * self.lambda0)
                    / (1.0 + self.b * t.powf(2.0 * (self.lambda0 - self.alpha_inf)))
            }
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Fbm => write!(f, "fbm(H={})", self.lambda0),
            ModelKind::PowerSum => write!(
                f,
                "power_sum(lambda0={}, alpha_inf={}, a={}, b={})",
                self.lambda0, self.alpha_inf, self.a, self.b
            ),
            ModelKind::PowerRatio => write!(
                f,
                "power_ratio(lambda0={}, alpha_inf={}, a={}, b={})",
                self.lambda0, self.alpha_inf, self.a, self.b
            ),
        }
    }
}

/// On-disk form of a model: `{"kind": "fbm"|"power_sum"|"power_ratio", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<VarianceModel> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidModel(format!("{:?} model requires \"{name}\"", self.kind)))
        };
        match self.kind {
            ModelKind::Fbm => {
                let h = match (self.hurst, self.lambda0, self.alpha_inf) {
                    (Some(h), _, _) => h,
                    (None, Some(l), Some(a)) if l == a => l,
                    _ => need("hurst", None)?,
                };
                VarianceModel::fbm(h)
            }
            ModelKind::PowerSum => VarianceModel::power_sum(
                need("lambda0", self.lambda0)?,
                need("alpha_inf", self.alpha_inf)?,
                self.a.unwrap_or(1.0),
                self.b.unwrap_or(1.0),
            ),
            ModelKind::PowerRatio => VarianceModel::power_ratio(
                need("lambda0", self.lambda0)?,
                need("alpha_inf", self.alpha_inf)?,
                self.a.unwrap_or(1.0),
                self.b.unwrap_or(1.0),
            ),
        }
    }
}

impl TryFrom<ModelSpec> for VarianceModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        spec.build()
    }
}

/// Process `X(delta t) / sigma(delta)`: variance `sigma^2(delta t) / sigma^2(delta)`.
#[derive(Debug, Clone, Copy)]
pub struct Rescaled<V> {
    inner: V,
    delta: f64,
    norm2: f64,
}

impl<V: VarianceFunction> Rescaled<V> {
    pub fn new(inner: V, delta: f64) -> Self {
        let norm2 = inner.sigma2(delta);
        Self { inner, delta, norm2 }
    }
}

impl<V: VarianceFunction> VarianceFunction for Rescaled<V> {
    fn sigma2(&self, t: f64) -> f64 {
        self.inner.sigma2(self.delta * t) / self.norm2
    }
    fn describe(&self) -> String {
        format!("{} rescaled by delta={}", self.inner.describe(), self.delta)
    }
}

pub fn sigma2<V: VarianceFunction>(model: &V, t: f64) -> f64 {
    model.sigma2(t)
}

/// `Cov(X(s), X(t)) = (sigma^2(|s|) + sigma^2(|t|) - sigma^2(|t - s|)) / 2`.
pub fn covariance<V: VarianceFunction>(model: &V, s: f64, t: f64) -> f64 {
    0.5 * (model.sigma2(s.abs()) + model.sigma2(t.abs()) - model.sigma2((t - s).abs()))
}

/// Lag-`k` autocovariance of the increments `X((j+1)h) - X(jh)`.
pub fn increment_autocovariance<V: VarianceFunction>(model: &V, h: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * (model.sigma2((k + 1.0) * h) - 2.0 * model.sigma2(k * h) + model.sigma2((k - 1.0).abs() * h))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCReport {
    pub epsilon: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub limit_estimate: f64,
    pub passed: bool,
}

impl fmt::Display for ConditionCReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "condition C, epsilon = {}", self.epsilon)?;
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            writeln!(f, "  t = {t:.3e}  sigma^2 |log t|^(1+eps) = {v:.6e}")?;
        }
        writeln!(f, "  limit estimate: {:.6e}", self.limit_estimate)?;
        write!(f, "  verdict: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Default grid for condition C: `10^-1 .. 10^-12`, eight points per decade.
pub fn default_condition_c_grid() -> Vec<f64> {
    let mut g = logspace(1e-12, 1e-1, 89);
    g.reverse();
    g
}

/// Evaluates `sigma^2(t) |log t|^{1 + epsilon}` along a grid decreasing to 0.
///
/// Passes when every value is finite and the spread over the last quarter of
/// the grid is below `0.05 (1 + max)`.
pub fn check_condition_c<V: VarianceFunction>(
    model: &V,
    epsilon: f64,
    t_grid: &[f64],
) -> ConditionCReport {
    let values: Vec<f64> = t_grid
        .iter()
        .map(|&t| model.sigma2(t) * t.ln().abs().powf(1.0 + epsilon))
        .collect();
    let finite = !values.is_empty() && values.iter().all(|v| v.is_finite());
    let passed = finite && {
        let max_all = values.iter().copied().fold(f64::MIN, f64::max);
        let tail = &values[values.len() - values.len().div_ceil(4)..];
        let hi = tail.iter().copied().fold(f64::MIN, f64::max);
        let lo = tail.iter().copied().fold(f64::MAX, f64::min);
        hi - lo < 0.05 * (1.0 + max_all)
    };
    ConditionCReport {
        epsilon,
        t_grid: t_grid.to_vec(),
        limit_estimate: values.last().copied().unwrap_or(f64::NAN),
        values,
        passed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Zero,
    Infinity,
}

/// Three decades, sixteen points: `10^-6..10^-3` at zero, `10^3..10^6` at infinity.
pub fn default_rv_grid(end: End) -> Vec<f64> {
    match end {
        End::Zero => logspace(1e-6, 1e-3, 16),
        End::Infinity => logspace(1e3, 1e6, 16),
    }
}

/// Log-log slope of `sigma` over `x_grid`; estimates the RV index at the
/// chosen end. `end` only documents intent, the grid decides.
pub fn estimate_rv_index<V: VarianceFunction>(model: &V, _end: End, x_grid: &[f64]) -> Result<f64> {
    let ys: Vec<f64> = x_grid.iter().map(|&x| model.sigma(x)).collect();
    loglog_slope(x_grid, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct PotterReport {
    pub epsilon: f64,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    pub max_ratio_excess: f64,
    pub c_fitted: f64,
    pub c_refined: f64,
    pub passed: bool,
}

fn potter_sup<V: VarianceFunction>(model: &V, lo: f64, up: f64, t_grid: &[f64], x_grid: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    for &x in x_grid {
        let sx = model.sigma(x);
        for &t in t_grid {
            let env = t.powf(lo).max(t.powf(up));
            let r = model.sigma(t * x) / (sx * env);
            sup = if r.is_nan() { f64::INFINITY } else { sup.max(r) };
        }
    }
    sup
}

fn refine(grid: &[f64], extend: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len() + 2);
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        out.push(w[0]);
        out.push((w[0] * w[1]).sqrt());
    }
    if let Some(&last) = sorted.last() {
        out.push(last);
    }
    if extend && sorted.len() >= 2 {
        out.insert(0, sorted[0] / 10.0);
        out.push(sorted[sorted.len() - 1] * 10.0);
    }
    out
}

/// Numeric check of the Potter-type bound
/// `sigma(t x) / sigma(x) <= C max(t^l, t^u)` for `x <= a`, with
/// `l = min(lambda - eps, alpha + eps)` and `u = max(alpha + eps, lambda + eps)`.
///
/// The fitted `C` is the grid supremum; the check passes when it is finite and
/// moves by less than 10% when both grids are refined and extended by a decade
/// (the `x` grid only towards zero, so it stays inside `(0, a]`).
pub fn potter_check(
    model: &VarianceModel,
    epsilon: f64,
    a: f64,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<PotterReport> {
    potter_check_indices(model, model.lambda0(), model.alpha_inf(), epsilon, a, t_grid, x_grid)
}

/// Same check for an arbitrary variance function with declared indices `(lam, alp)`.
pub fn potter_check_indices<V: VarianceFunction>(
    model: &V,
    lam: f64,
    alp: f64,
    epsilon: f64,
    a: f64,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<PotterReport> {
    if !(epsilon > 0.0 && epsilon < lam) {
        return Err(Error::InvalidArgument(format!(
            "potter_check needs 0 < epsilon < lambda0, got epsilon = {epsilon}"
        )));
    }
    if x_grid.iter().any(|&x| !(x > 0.0 && x <= a)) {
        return Err(Error::InvalidArgument(format!("x grid must lie in (0, {a}]")));
    }
    let lo = (lam - epsilon).min(alp + epsilon);
    let up = (alp + epsilon).max(lam + epsilon);

    let c_fitted = potter_sup(model, lo, up, t_grid, x_grid);
    let t_fine = refine(t_grid, true);
    let mut x_fine = refine(x_grid, true);
    x_fine.pop();
    let c_refined = potter_sup(model, lo, up, &t_fine, &x_fine);

    let passed = c_fitted.is_finite()
        && c_refined.is_finite()
        && (c_refined - c_fitted).abs() <= 0.1 * c_fitted;
    Ok(PotterReport {
        epsilon,
        lower_exponent: lo,
        upper_exponent: up,
        max_ratio_excess: (c_refined.max(c_fitted) - 1.0).max(0.0),
        c_fitted,
        c_refined,
        passed,
    })
}

/// Default Potter grids: `t` over `10^-4..10^4`, `x` over `a 10^-6 .. a`.
pub fn default_potter_grids(a: f64) -> (Vec<f64>, Vec<f64>) {
    (logspace(1e-4, 1e4, 65), logspace(a * 1e-6, a, 49))
}

/// The built-in families at the parameter points used throughout the tests
/// and the CLI's `model-info`.
pub fn builtin_models() -> Vec<VarianceModel> {
    vec![
        VarianceModel::fbm(0.3).unwrap(),
        VarianceModel::fbm(0.5).unwrap(),
        VarianceModel::fbm(0.7).unwrap(),
        VarianceModel::fbm(0.9).unwrap(),
        VarianceModel::power_sum(0.4, 0.7, 1.0, 1.0).unwrap(),
        VarianceModel::power_ratio(0.7, 0.4, 1.0, 1.0).unwrap(),
    ]
}
