use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gfq_core::entropy::entropy_profile;
use gfq_core::experiments::{
    run_input_flt, run_modulus_diagnostic, run_omega_gamma_decay, run_workload_flt, ConvergenceReport,
    ExperimentConfig, ModulusConfig, OmegaDecayConfig,
};
use gfq_core::path::{sample_path, GridSpec, PathSampler, SamplerOptions};
use gfq_core::queue::{QueueConfig, WorkloadSimulator};
use gfq_core::scaling::{default_c_grid, delta_exponent_audit, solve_delta, Regime, DEFAULT_TOL};
use gfq_core::stats::logspace;
use gfq_core::variance::{
    check_condition_c, default_condition_c_grid, default_potter_grids, default_rv_grid, estimate_rv_index,
    potter_check, End, VarianceFunction, VarianceModel,
};
use gfq_core::SeedTrace;

#[derive(Parser)]
#[command(name = "gfq", version, about = "Gaussian fluid queues and their traffic scaling limits")]
struct Cli {
    /// JSON configuration file (experiment subcommands).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed / master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; files are written here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Model JSON file, or an inline JSON object.
    #[arg(long)]
    model: String,
}

impl ModelArg {
    fn load(&self) -> Result<VarianceModel> {
        let src = self.model.as_str();
        let text = if src.trim_start().starts_with('{') {
            src.to_string()
        } else {
            fs::read_to_string(src).with_context(|| format!("reading model file {src}"))?
        };
        Ok(VarianceModel::from_json(&text)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a model's variance function and validate its regularity conditions.
    ModelInfo {
        #[command(flatten)]
        model: ModelArg,
        /// Emit the JSON verdict on stdout instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Solve c delta / sigma(delta) = 1.
    Delta {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Regress log delta(c) on log c and compare with the predicted index.
    DeltaAudit {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        regime: Regime,
        /// `lo:hi:n` (log-spaced) or a comma-separated list; defaults to three decades.
        #[arg(long)]
        c_grid: Option<String>,
    },
    /// Sample the input process on a grid; CSV `t,x`.
    SimulatePath {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        n_left: usize,
        #[arg(long)]
        n_right: usize,
        /// Write the embedding report as JSON to stderr.
        #[arg(long)]
        report: bool,
    },
    /// Simulate one stationary workload path; CSV `t,q` plus a JSON sidecar.
    SimulateQueue {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        c: f64,
        #[arg(long = "S")]
        lookback: f64,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        h: f64,
    },
    /// Metric entropy profile and Dudley integral on [0, L].
    Entropy {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long = "L")]
        length: f64,
        #[arg(long)]
        zeta: Option<f64>,
    },
    /// Scaling limit of the rescaled input process.
    FltInput,
    /// Scaling limit of the rescaled workload.
    FltWorkload,
    /// Tail probabilities of the polynomial-envelope ratio.
    OmegaDecay,
    /// Modulus-of-continuity probabilities along a zeta grid.
    Modulus,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].parse()?;
        let hi: f64 = parts[1].parse()?;
        let n: usize = parts[2].parse()?;
        return Ok(logspace(lo, hi, n));
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad grid value {s:?}")))
        .collect()
}

fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let p = dir.join(name);
            fs::write(&p, content).with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn read_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<T> {
    let path = cli.config.as_ref().context("--config <json file> is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct ModelVerdict {
    model: gfq_core::ModelSpec,
    condition_c: bool,
    rv_zero: f64,
    rv_infinity: f64,
    rv_matches_declared: bool,
    potter: bool,
    passed: bool,
}

fn model_info(m: &VarianceModel, as_json: bool, out: Option<&Path>) -> Result<bool> {
    let c = check_condition_c(m, 0.5, &default_condition_c_grid());
    let z = estimate_rv_index(m, End::Zero, &default_rv_grid(End::Zero))?;
    let i = estimate_rv_index(m, End::Infinity, &default_rv_grid(End::Infinity))?;
    let (tg, xg) = default_potter_grids(1.0);
    let eps = (0.05f64).min(m.lambda0() / 2.0);
    let potter = potter_check(m, eps, 1.0, &tg, &xg)?;
    let rv_ok = (z - m.lambda0()).abs() <= 0.02 && (i - m.alpha_inf()).abs() <= 0.02;
    let verdict = ModelVerdict {
        model: m.spec(),
        condition_c: c.passed,
        rv_zero: z,
        rv_infinity: i,
        rv_matches_declared: rv_ok,
        potter: potter.passed,
        passed: c.passed && rv_ok && potter.passed,
    };
    let mut text = format!("model: {m}\n\nsigma^2(t):\n");
    for t in [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1000.0] {
        text.push_str(&format!("  t = {t:>8}  {:.6e}\n", m.sigma2(t)));
    }
    text.push_str(&format!("\n{c}\n\n"));
    text.push_str(&format!("RV index at zero:     {z:.4} (declared {})\n", m.lambda0()));
    text.push_str(&format!("RV index at infinity: {i:.4} (declared {})\n", m.alpha_inf()));
    text.push_str(&format!(
        "Potter bound (eps = {eps}): C = {:.4}, refined {:.4} -> {}\n",
        potter.c_fitted,
        potter.c_refined,
        if potter.passed { "PASS" } else { "FAIL" }
    ));
    text.push_str(&format!("\nverdict: {}\n", if verdict.passed { "PASS" } else { "FAIL" }));
    if let Some(dir) = out {
        emit(Some(dir), "model-info.txt", &text)?;
        emit(Some(dir), "model-info.json", &json(&verdict)?)?;
    } else if as_json {
        emit(None, "", &json(&verdict)?)?;
    } else {
        emit(None, "", &text)?;
    }
    Ok(verdict.passed)
}

fn convergence_outputs(report: &ConvergenceReport, out: Option<&Path>, stem: &str) -> Result<()> {
    let csv = csv_string(report.csv_rows())?;
    match out {
        Some(dir) => {
            emit(Some(dir), &format!("{stem}.csv"), &csv)?;
            emit(Some(dir), &format!("{stem}.json"), &json(report)?)?;
        }
        None => {
            emit(None, "", &csv)?;
            eprintln!("{}", json(report)?);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::ModelInfo { model, json: as_json } => {
            return model_info(&model.load()?, *as_json, out);
        }
        Command::Delta { model, c, tol } => {
            let sol = solve_delta(&model.load()?, *c, *tol)?;
            emit(out, "delta.json", &json(&sol)?)?;
        }
        Command::DeltaAudit { model, regime, c_grid } => {
            let m = model.load()?;
            let grid = match c_grid {
                Some(s) => parse_grid(s)?,
                None => default_c_grid(*regime),
            };
            let audit = delta_exponent_audit(&m, *regime, &grid)?;
            emit(out, "delta-audit.json", &json(&audit)?)?;
            return Ok(audit.passed);
        }
        Command::SimulatePath { model, h, n_left, n_right, report } => {
            let m = model.load()?;
            let grid = GridSpec::new(*h, *n_left, *n_right)?;
            let path = sample_path(&m, grid, seed)?;
            let rows = grid.times().into_iter().zip(path.values).map(|(t, x)| PathRow { t, x });
            emit(out, "path.csv", &csv_string(rows)?)?;
            if *report {
                let sampler = PathSampler::new(&m, grid, SamplerOptions::default())?;
                eprintln!("{}", json(&sampler.report())?);
            }
        }
        Command::SimulateQueue { model, c, lookback, horizon, h } => {
            let m = model.load()?;
            let cfg = QueueConfig::new(*c, *lookback)?;
            let w = WorkloadSimulator::new(&m, cfg, *horizon, *h)?.simulate(SeedTrace::new(seed, &[0]));
            let rows: Vec<QueueRow> = w.times().zip(&w.q_values).map(|(t, &q)| QueueRow { t, q }).collect();
            let sidecar = json(&Sidecar {
                q0: w.q_zero,
                argmax_location: w.argmax_location,
                truncation_flag: w.truncation_flag,
            })?;
            emit(out, "queue.csv", &csv_string(rows)?)?;
            match out {
                Some(_) => emit(out, "queue.json", &sidecar)?,
                None => eprintln!("{sidecar}"),
            }
        }
        Command::Entropy { model, length, zeta } => {
            let profile = entropy_profile(&model.load()?, *length, *zeta)?;
            emit(out, "entropy.json", &json(&profile)?)?;
        }
        Command::FltInput | Command::FltWorkload => {
            let mut cfg: ExperimentConfig = read_config(cli)?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let (report, stem) = if matches!(cli.command, Command::FltInput) {
                (run_input_flt(&cfg)?, "flt-input")
            } else {
                (run_workload_flt(&cfg)?, "flt-workload")
            };
            convergence_outputs(&report, out, stem)?;
            return Ok(report.verdict);
        }
        Command::OmegaDecay => {
            let mut cfg: OmegaDecayConfig = read_config(cli)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let r = run_omega_gamma_decay(&cfg)?;
            emit(out, "omega-decay.json", &json(&r)?)?;
        }
        Command::Modulus => {
            let mut cfg: ModulusConfig = read_config(cli)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let r = run_modulus_diagnostic(&cfg)?;
            emit(out, "modulus.json", &json(&r)?)?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct PathRow {
    t: f64,
    x: f64,
}

#[derive(Serialize)]
struct QueueRow {
    t: f64,
    q: f64,
}

#[derive(Serialize)]
struct Sidecar {
    q0: f64,
    argmax_location: f64,
    truncation_flag: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
