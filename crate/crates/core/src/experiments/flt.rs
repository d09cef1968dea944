//! Functional-limit experiments: the rescaled input `X(delta t) / sigma(delta)`
//! against fBm, and the rescaled workload `Q(delta t) / sigma(delta)` against
//! the fBm queue drained at unit rate.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{tag, validate_regime, ASYMPTOTIC_INFLATION, MAX_TRUNCATION_RATE, MONOTONE_SLACK};
use crate::error::{Error, Result};
use crate::path::{EmbeddingReport, GridSpec, PathSampler, SamplerOptions};
use crate::queue::{QueueConfig, WorkloadSimulator};
use crate::rng::SeedTrace;
use crate::scaling::{solve_delta, DeltaSolution, Regime, DEFAULT_TOL};
use crate::stats::{dkw_threshold, ks_two_sample, EmpiricalSample};
use crate::variance::{ModelSpec, VarianceFunction, VarianceModel};

/// Sampling parameters in rescaled time units.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingPlan {
    pub time_points: Vec<f64>,
    pub replications: usize,
    pub points_per_unit: usize,
    pub kappa: f64,
}

impl SamplingPlan {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            time_points: cfg.time_points.clone(),
            replications: cfg.replications,
            points_per_unit: cfg.points_per_unit,
            kappa: cfg.kappa,
        }
    }

    fn max_time(&self) -> f64 {
        self.time_points.iter().copied().fold(0.0, f64::max)
    }

    fn index(&self, t: f64) -> usize {
        (t * self.points_per_unit as f64).round() as usize
    }

    fn right_steps(&self) -> usize {
        self.index(self.max_time()).max(1)
    }

    fn left_steps(&self) -> usize {
        ((self.kappa * self.points_per_unit as f64 * (1.0 + self.max_time())).round() as usize).max(1)
    }
}

/// Replicated samples of `Q(delta t_j) / sigma(delta)` at the plan's time points.
#[derive(Debug, Clone, Serialize)]
pub struct WorkloadSamples {
    pub c: f64,
    pub delta: DeltaSolution,
    pub time_points: Vec<f64>,
    /// `marginals[j][r]`: replication `r` at `time_points[j]`.
    pub marginals: Vec<Vec<f64>>,
    /// `Q(t_max) - Q(0)` per replication, rescaled.
    pub increments: Vec<f64>,
    pub truncation_rate: f64,
    pub embedding: EmbeddingReport,
}

fn checked_delta<V: VarianceFunction>(model: &V, c: f64) -> Result<DeltaSolution> {
    let sol = solve_delta(model, c, DEFAULT_TOL)?;
    let identity = c * sol.delta / model.sigma(sol.delta) - 1.0;
    if identity.abs() > DEFAULT_TOL {
        return Err(Error::InvalidArgument(format!(
            "normalization identity violated at c = {c}: residual {identity:e}"
        )));
    }
    Ok(sol)
}

fn transpose(rows: Vec<Vec<f64>>, width: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(rows.len()); width];
    for row in rows {
        for (j, v) in row.into_iter().enumerate() {
            cols[j].push(v);
        }
    }
    cols
}

/// Simulates the rescaled stationary workload for drain rate `c`.
///
/// Grid step `h = delta / points_per_unit` and lookback
/// `S = kappa delta (1 + max t)`; replication `r` uses the stream
/// `(master, coords[0], coords[1], r)`.
pub fn rescaled_workload_samples<V: VarianceFunction>(
    model: &V,
    c: f64,
    plan: &SamplingPlan,
    master: u64,
    coords: [u64; 2],
) -> Result<WorkloadSamples> {
    let delta = checked_delta(model, c)?;
    let h = delta.delta / plan.points_per_unit as f64;
    let cfg = QueueConfig::new(c, plan.left_steps() as f64 * h)?;
    let sim = WorkloadSimulator::new(model, cfg, plan.right_steps() as f64 * h, h)?;
    let norm = model.sigma(delta.delta);
    let idx: Vec<usize> = plan.time_points.iter().map(|&t| plan.index(t)).collect();

    let draws: Vec<(Vec<f64>, bool)> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let w = sim.simulate(SeedTrace::new(master, &[coords[0], coords[1], r as u64]));
            (idx.iter().map(|&k| w.q_values[k] / norm).collect(), w.truncation_flag)
        })
        .collect();

    let flagged = draws.iter().filter(|d| d.1).count();
    let marginals = transpose(draws.into_iter().map(|d| d.0).collect(), idx.len());
    let first = plan.time_points.iter().position(|&t| t == 0.0).unwrap_or(0);
    let last = plan.time_points.len() - 1;
    let increments = marginals[last].iter().zip(&marginals[first]).map(|(a, b)| a - b).collect();
    Ok(WorkloadSamples {
        c,
        delta,
        time_points: plan.time_points.clone(),
        marginals,
        increments,
        truncation_rate: flagged as f64 / plan.replications as f64,
        embedding: sim.sampler().report(),
    })
}

/// Samples of the limiting queue `Q^{(1)}_{B_H}` at unit drain, grid
/// `h = 1 / points_per_unit`, lookback `kappa (1 + max t)`.
pub fn reference_fbm_queue_samples(
    hurst: f64,
    time_points: &[f64],
    replications: usize,
    points_per_unit: usize,
    kappa: f64,
    seed: u64,
) -> Result<WorkloadSamples> {
    let plan = SamplingPlan {
        time_points: time_points.to_vec(),
        replications,
        points_per_unit,
        kappa,
    };
    rescaled_workload_samples(&VarianceModel::fbm(hurst)?, 1.0, &plan, seed, [tag::REFERENCE, 0])
}

#[derive(Debug, Clone, Serialize)]
pub struct KsEntry {
    /// `t=<value>` for marginals, `inc:<a>-<b>` for increments.
    pub label: String,
    pub ks: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftCheck {
    pub t: f64,
    /// Mean of `(X(delta t) - c delta t) / sigma(delta)`; should be `-t`.
    pub drift_mean: f64,
    pub std_error: f64,
    /// Sample variance of the rescaled input at `t = 1`, when 1 is a time point.
    pub unit_variance: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub c: f64,
    pub delta: f64,
    pub residual: f64,
    pub ks_by_timepoint: Vec<KsEntry>,
    pub threshold: f64,
    pub passed: bool,
    pub truncation_rate: f64,
    pub embedding_truncated_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSummary {
    pub h_used: f64,
    pub time_points: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub model: ModelSpec,
    pub regime: Regime,
    /// The input is fBm, so every comparison is exact rather than asymptotic.
    pub exact: bool,
    pub replications: usize,
    pub per_c: Vec<CellReport>,
    pub reference_summary: ReferenceSummary,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub c: f64,
    pub delta: f64,
    pub t: String,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.per_c
            .iter()
            .flat_map(|cell| {
                cell.ks_by_timepoint.iter().map(move |e| CsvRow {
                    c: cell.c,
                    delta: cell.delta,
                    t: e.label.trim_start_matches("t=").to_string(),
                    ks: e.ks,
                    threshold: cell.threshold,
                    pass: e.ks <= cell.threshold,
                })
            })
            .collect()
    }

    /// KS values for one label along the c-sequence.
    pub fn series(&self, label: &str) -> Vec<f64> {
        self.per_c
            .iter()
            .filter_map(|cell| cell.ks_by_timepoint.iter().find(|e| e.label == label).map(|e| e.ks))
            .collect()
    }

    fn decide(&mut self) {
        self.verdict = if self.exact {
            self.per_c.iter().all(|c| c.passed)
        } else {
            let last_ok = self.per_c.last().is_some_and(|c| c.passed);
            let labels: Vec<String> = self
                .per_c
                .first()
                .map(|c| c.ks_by_timepoint.iter().map(|e| e.label.clone()).collect())
                .unwrap_or_default();
            let monotone = labels.iter().all(|l| {
                self.series(l).windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK)
            });
            last_ok && monotone
        };
        self.verdict &= self.per_c.iter().all(|c| c.drift.as_ref().is_none_or(|d| d.passed));
    }
}

fn ks(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(ks_two_sample(&EmpiricalSample::new(a.to_vec())?, &EmpiricalSample::new(b.to_vec())?))
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

fn summarize(h: f64, time_points: &[f64], marginals: &[Vec<f64>]) -> ReferenceSummary {
    let (mut means, mut variances) = (vec![], vec![]);
    for m in marginals {
        let s = EmpiricalSample::new(m.clone()).expect("nonempty reference");
        means.push(s.mean());
        variances.push(s.variance());
    }
    ReferenceSummary { h_used: h, time_points: time_points.to_vec(), means, variances }
}

fn threshold(n: usize, exact: bool, alpha: f64) -> f64 {
    let t = dkw_threshold(n, n, alpha);
    if exact { t } else { ASYMPTOTIC_INFLATION * t }
}

/// Workload scaling limit along `config.c_values`: each rescaled marginal and
/// the increment `Q(t_max) - Q(0)` against the fBm queue with `H = alpha`
/// (heavy) or `H = lambda` (light).
pub fn run_workload_flt(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let model = config.build_model()?;
    validate_regime(&model, config.regime)?;
    let hurst = config.regime.limit_hurst(&model);
    let plan = SamplingPlan::from_config(config);
    let exact = model.is_self_similar();
    let reference = rescaled_workload_samples(
        &VarianceModel::fbm(hurst)?,
        1.0,
        &plan,
        config.master_seed,
        [tag::REFERENCE, 0],
    )?;
    let thr = threshold(config.replications, exact, config.alpha_level);

    let mut per_c = vec![];
    for (ci, &c) in config.c_values.iter().enumerate() {
        let s = rescaled_workload_samples(&model, c, &plan, config.master_seed, [tag::WORKLOAD, ci as u64])?;
        if s.truncation_rate > MAX_TRUNCATION_RATE {
            return Err(Error::TruncationRate { c, rate: s.truncation_rate, limit: MAX_TRUNCATION_RATE });
        }
        let mut entries = vec![];
        for (j, &t) in plan.time_points.iter().enumerate() {
            entries.push(KsEntry {
                label: format!("t={}", fmt_t(t)),
                ks: ks(&s.marginals[j], &reference.marginals[j])?,
            });
        }
        if plan.max_time() > 0.0 {
            entries.push(KsEntry {
                label: format!("inc:0-{}", fmt_t(plan.max_time())),
                ks: ks(&s.increments, &reference.increments)?,
            });
        }
        per_c.push(CellReport {
            c,
            delta: s.delta.delta,
            residual: s.delta.residual,
            passed: entries.iter().all(|e| e.ks <= thr),
            ks_by_timepoint: entries,
            threshold: thr,
            truncation_rate: s.truncation_rate,
            embedding_truncated_mass: s.embedding.truncated_mass,
            drift: None,
        });
    }
    let mut report = ConvergenceReport {
        experiment: "flt-workload".into(),
        model: model.spec(),
        regime: config.regime,
        exact,
        replications: config.replications,
        per_c,
        reference_summary: summarize(1.0 / plan.points_per_unit as f64, &plan.time_points, &reference.marginals),
        verdict: false,
    };
    report.decide();
    Ok(report)
}

struct InputSamples {
    marginals: Vec<Vec<f64>>,
    drift: Vec<f64>,
    embedding: EmbeddingReport,
}

fn rescaled_input_samples<V: VarianceFunction>(
    model: &V,
    delta: f64,
    c: f64,
    plan: &SamplingPlan,
    master: u64,
    coords: [u64; 2],
) -> Result<InputSamples> {
    let h = delta / plan.points_per_unit as f64;
    let sampler = PathSampler::new(model, GridSpec::new(h, 0, plan.right_steps())?, SamplerOptions::default())?;
    let norm = model.sigma(delta);
    let tmax = plan.max_time();
    let drift_at = c * delta * tmax / norm;
    let idx: Vec<usize> = plan.time_points.iter().map(|&t| plan.index(t)).collect();
    let kmax = plan.index(tmax);
    let rows: Vec<(Vec<f64>, f64)> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = SeedTrace::new(master, &[coords[0], coords[1], r as u64]).rng();
            let x = sampler.sample_values(&mut rng);
            (idx.iter().map(|&k| x[k] / norm).collect(), x[kmax] / norm - drift_at)
        })
        .collect();
    let drift = rows.iter().map(|r| r.1).collect();
    Ok(InputSamples {
        marginals: transpose(rows.into_iter().map(|r| r.0).collect(), idx.len()),
        drift,
        embedding: sampler.report(),
    })
}

/// Input-process scaling limit: `X(delta t) / sigma(delta)` against `B_H` at
/// the positive time points and over consecutive increments, plus the drift
/// identity `E (X(delta t) - c delta t) / sigma(delta) = -t`.
pub fn run_input_flt(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let model = config.build_model()?;
    let hurst = config.regime.limit_hurst(&model);
    let plan = SamplingPlan::from_config(config);
    let exact = model.is_self_similar();
    let fbm = VarianceModel::fbm(hurst)?;
    let reference = rescaled_input_samples(&fbm, 1.0, 1.0, &plan, config.master_seed, [tag::INPUT_REFERENCE, 0])?;
    let thr = threshold(config.replications, exact, config.alpha_level);
    let tp = &plan.time_points;

    let mut per_c = vec![];
    for (ci, &c) in config.c_values.iter().enumerate() {
        let delta = checked_delta(&model, c)?;
        let s = rescaled_input_samples(&model, delta.delta, c, &plan, config.master_seed, [tag::INPUT, ci as u64])?;
        let mut entries = vec![];
        for (j, &t) in tp.iter().enumerate() {
            if t > 0.0 {
                entries.push(KsEntry {
                    label: format!("t={}", fmt_t(t)),
                    ks: ks(&s.marginals[j], &reference.marginals[j])?,
                });
            }
        }
        for j in 1..tp.len() {
            if tp[j - 1] > 0.0 {
                let inc = |m: &[Vec<f64>]| -> Vec<f64> { m[j].iter().zip(&m[j - 1]).map(|(a, b)| a - b).collect() };
                entries.push(KsEntry {
                    label: format!("inc:{}-{}", fmt_t(tp[j - 1]), fmt_t(tp[j])),
                    ks: ks(&inc(&s.marginals), &inc(&reference.marginals))?,
                });
            }
        }
        let tmax = plan.max_time();
        let drift_sample = EmpiricalSample::new(s.drift)?;
        let se = (drift_sample.variance() / drift_sample.len() as f64).sqrt();
        let unit_variance = tp
            .iter()
            .position(|&t| t == 1.0)
            .map(|j| EmpiricalSample::new(s.marginals[j].clone()).map(|e| e.variance()))
            .transpose()?;
        let drift = DriftCheck {
            t: tmax,
            drift_mean: drift_sample.mean(),
            std_error: se,
            unit_variance,
            passed: (drift_sample.mean() + tmax).abs() <= 4.0 * se.max(1e-12),
        };
        per_c.push(CellReport {
            c,
            delta: delta.delta,
            residual: delta.residual,
            passed: entries.iter().all(|e| e.ks <= thr),
            ks_by_timepoint: entries,
            threshold: thr,
            truncation_rate: 0.0,
            embedding_truncated_mass: s.embedding.truncated_mass,
            drift: Some(drift),
        });
    }
    let mut report = ConvergenceReport {
        experiment: "flt-input".into(),
        model: model.spec(),
        regime: config.regime,
        exact,
        replications: config.replications,
        per_c,
        reference_summary: summarize(1.0 / plan.points_per_unit as f64, tp, &reference.marginals),
        verdict: false,
    };
    report.decide();
    Ok(report)
}
