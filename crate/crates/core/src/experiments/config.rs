use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::Regime;
use crate::variance::{ModelSpec, VarianceModel};

fn default_time_points() -> Vec<f64> {
    vec![0.0, 1.0]
}
fn default_replications() -> usize {
    2000
}
fn default_points_per_unit() -> usize {
    16
}
fn default_kappa() -> f64 {
    30.0
}
fn default_alpha_level() -> f64 {
    0.01
}

/// One convergence experiment along a sequence of drain rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub regime: Regime,
    /// Ordered towards the regime's limit: decreasing (heavy) or increasing (light).
    pub c_values: Vec<f64>,
    /// Rescaled times at which marginals are compared; must contain 0.
    #[serde(default = "default_time_points")]
    pub time_points: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Grid points per rescaled time unit: `h = delta(c) / points_per_unit`.
    #[serde(default = "default_points_per_unit")]
    pub points_per_unit: usize,
    /// Lookback multiplier: `S = kappa delta(c) (1 + max t)`.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_alpha_level")]
    pub alpha_level: f64,
}

impl ExperimentConfig {
    pub fn new(model: &VarianceModel, regime: Regime, c_values: Vec<f64>) -> Self {
        Self {
            model: model.spec(),
            regime,
            c_values,
            time_points: default_time_points(),
            replications: default_replications(),
            points_per_unit: default_points_per_unit(),
            kappa: default_kappa(),
            gamma: None,
            master_seed: 0,
            alpha_level: default_alpha_level(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_model(&self) -> Result<VarianceModel> {
        self.model.build()
    }

    pub fn max_time(&self) -> f64 {
        self.time_points.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.build_model()?;
        if self.c_values.is_empty() || self.c_values.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return bad("c_values must be a nonempty list of positive numbers".into());
        }
        let toward_limit = self.c_values.windows(2).all(|w| match self.regime {
            Regime::Heavy => w[1] < w[0],
            Regime::Light => w[1] > w[0],
        });
        if !toward_limit {
            return bad(format!("c_values must move towards the {} traffic limit", self.regime));
        }
        if !self.time_points.contains(&0.0) {
            return bad("time_points must include 0".into());
        }
        if self.time_points.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
            || self.time_points.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("time_points must be nonnegative and strictly increasing".into());
        }
        if self.points_per_unit < 16 {
            return bad(format!("points_per_unit must be at least 16, got {}", self.points_per_unit));
        }
        for &t in &self.time_points {
            let k = t * self.points_per_unit as f64;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return bad(format!("time point {t} is not on the 1/{} grid", self.points_per_unit));
            }
        }
        if self.replications == 0 {
            return bad("replications must be positive".into());
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive".into());
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return bad("alpha_level must lie in (0, 1)".into());
        }
        Ok(())
    }
}
