//! Empirical-distribution utilities: ECDF comparisons, Kolmogorov-Smirnov
//! statistics, DKW thresholds and log-log regression.

use crate::error::{Error, Result};

/// A sample with a cached ascending view.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl EmpiricalSample {
    /// Rejects empty input and NaNs.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance; zero for a single observation.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Right-continuous ECDF evaluated at `x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Type-7 (linear interpolation) quantile, `p` in [0, 1].
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let pos = p * (self.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        self.sorted[lo] * (1.0 - w) + self.sorted[hi] * w
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
///
/// Exact merged sweep; every copy of a tied value is consumed from both
/// samples before the ECDFs are compared.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // One sample is exhausted; the remaining gap is maximal right here.
    d.max((i as f64 / na - j as f64 / nb).abs())
}

/// Convenience wrapper over raw slices.
pub fn ks_two_sample_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = EmpiricalSample::new(a.to_vec())?;
    let b = EmpiricalSample::new(b.to_vec())?;
    Ok(ks_two_sample(&a, &b))
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &EmpiricalSample, cdf: F) -> f64 {
    let n = a.len() as f64;
    a.sorted()
        .iter()
        .enumerate()
        .fold(0.0f64, |d, (i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            d.max(above).max(below)
        })
}

/// KS statistic of `a` against Exponential(`rate`).
pub fn ks_one_sample_exponential(a: &EmpiricalSample, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {rate}")));
    }
    if let Some(&v) = a.sorted().first().filter(|v| **v < 0.0) {
        return Err(Error::NegativeValue(v));
    }
    Ok(ks_one_sample(a, |x| -(-rate * x).exp_m1()))
}

/// Two-sample rejection threshold `sqrt(-ln(alpha/2) (n + m) / (2 n m))`.
pub fn dkw_threshold(n: usize, m: usize, alpha_level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha_level / 2.0).ln() * (n + m) / (2.0 * n * m)).sqrt()
}

/// One-sample DKW band half-width `sqrt(ln(2/alpha) / (2 n))`.
pub fn dkw_one_sample(n: usize, alpha_level: f64) -> f64 {
    ((2.0 / alpha_level).ln() / (2.0 * n as f64)).sqrt()
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// OLS slope of `ln ys` against `ln xs`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "size mismatch: {} x values, {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 4 {
        return Err(Error::GridTooShort { required: 4, got: xs.len() });
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("log-log regression needs positive finite values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(ols_slope(&lx, &ly))
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
