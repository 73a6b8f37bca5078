//! Maps each command onto the library operations.

use std::path::Path;

use heavytail::convergence::{
    default_gamma, run_convergence, ConvergenceConfig, ConvergencePoint, NoiseModel, StepsizeRule,
};
use heavytail::metastability::{expected_exit_time, generator_matrix};
use heavytail::nn::data::load_mnist_dir;
use heavytail::nn::{
    noise_scale_sweep, synthetic_blobs, train_with_tail_logging, DatasetSplit, Init, LossKind, MlpModel, NoiseSource,
    SweepGrid, TrainConfig,
};
use heavytail::objective::{double_well, power_norm, quadratic, Objective};
use heavytail::report::CsvRecord;
use heavytail::sde::{
    first_exit_replicates, summarize_exits, transition_replicates, ExitTimeRecord, LevyNormalization, SdeConfig,
    TransitionRecord,
};
use heavytail::stability::{BlockRule, StabilityTest};
use heavytail::stable::{sample_sas, StableParams};
use heavytail::tail_index::{estimate_alpha, estimate_alpha_auto};
use heavytail::RngStream;
use serde_json::{json, Value as Json};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;

/// A rectangular result with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn from_records<R: CsvRecord>(records: &[R], fallback: &[&str]) -> Self {
        match records.first() {
            None => Table::new(fallback),
            Some(first) => Table {
                header: first.csv_header(),
                rows: records.iter().map(CsvRecord::csv_fields).collect(),
            },
        }
    }
}

/// Secondary file written next to the main result.
#[derive(Debug)]
pub struct ExtraTable {
    pub path: String,
    pub table: Table,
}

#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    pub json: Json,
    pub extra: Option<ExtraTable>,
    /// Fraction of replicates, cells or runs that diverged.
    pub diverged_fraction: f64,
}

impl Outcome {
    fn new(table: Table, json: Json) -> Self {
        Outcome {
            table,
            json,
            extra: None,
            diverged_fraction: 0.0,
        }
    }
}

fn seed(cfg: &ExperimentConfig) -> RngStream {
    RngStream::new(cfg.opt_u64("seed").unwrap_or(0))
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Sample => sample(cfg),
        Command::Estimate => estimate(cfg),
        Command::Stability => stability(cfg),
        Command::ExitTime => exit_time(cfg),
        Command::Transition => transition(cfg),
        Command::Metastability => metastability(cfg),
        Command::Converge => converge(cfg),
        Command::Train => train(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn sample(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let params = StableParams::new(cfg.f64("alpha"), cfg.f64("sigma"))?;
    let x = sample_sas(params, cfg.usize("n"), &seed(cfg))?;
    let mut table = Table::new(&["x"]);
    table.rows = x.iter().map(|v| vec![v.to_string()]).collect();
    Ok(Outcome::new(table, json!({ "samples": x })))
}

fn read_numbers(path: &str) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let x: f64 = tok.parse().map_err(|_| {
                CliError::config("input", format!("{path}:{}: `{tok}` is not a number", lineno + 1))
            })?;
            out.push(x);
        }
    }
    Ok(out)
}

/// Samples from `input` or fresh SaS draws, exactly one of the two.
fn sample_source(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    match (cfg.opt_text("input"), cfg.opt_f64("alpha")) {
        (Some(_), Some(_)) => Err(CliError::config("input", "give either `input` or `alpha`, not both")),
        (Some(path), None) => read_numbers(path),
        (None, Some(alpha)) => {
            let params = StableParams::new(alpha, cfg.f64("sigma"))?;
            Ok(sample_sas(params, cfg.usize("n"), &seed(cfg).substream(0))?)
        }
        (None, None) => Err(CliError::config("alpha", "missing required key (or give `input`)")),
    }
}

fn estimate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let x = sample_source(cfg)?;
    let est = match cfg.opt_u64("k1") {
        Some(k1) => estimate_alpha(&x, k1 as usize)?,
        None => estimate_alpha_auto(&x)?,
    };
    let table = Table::from_records(&[est], &[]);
    Ok(Outcome::new(table, json!(est)))
}

fn stability(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let x = sample_source(cfg)?;
    let test = StabilityTest {
        block_rule: BlockRule::Fixed(cfg.usize("k1")),
        threshold: cfg.f64("threshold"),
    };
    let report = test.run(&x, &seed(cfg).substream(1))?;
    let mut out = Outcome::new(Table::from_records(&[report], &[]), json!(report));
    out.json["pass"] = json!(report.passes());
    Ok(out)
}

fn normalization(cfg: &ExperimentConfig) -> LevyNormalization {
    match cfg.text("normalization") {
        "characteristic" => LevyNormalization::Characteristic,
        _ => LevyNormalization::UnitJumpDensity,
    }
}

fn sde_config(cfg: &ExperimentConfig, w0: Vec<f64>, max_steps: u64) -> SdeConfig {
    SdeConfig {
        eta: cfg.f64("eta"),
        epsilon: cfg.f64("eps"),
        sigma_brownian: cfg.f64("sigma_brownian"),
        alpha: cfg.f64("alpha"),
        dim: w0.len(),
        w0,
        max_steps,
        normalization: normalization(cfg),
    }
}

fn exit_objective(cfg: &ExperimentConfig) -> Result<(Objective, Vec<f64>), CliError> {
    let dim = cfg.usize("dim");
    let (obj, center) = match cfg.text("objective") {
        "double-well" => {
            if dim != 1 {
                return Err(CliError::config("dim", "the double well is one-dimensional"));
            }
            (double_well(cfg.f64("m1"), cfg.f64("m2"), 1.0)?, vec![cfg.f64("m1")])
        }
        "power-norm" => (power_norm(dim, cfg.f64("gamma"))?, vec![0.0; dim]),
        _ => (quadratic(dim)?, vec![0.0; dim]),
    };
    let center = match cfg.opt_f64_list("center") {
        Some(c) if c.len() != dim => {
            return Err(CliError::config("center", format!("expected {dim} coordinates, got {}", c.len())))
        }
        Some(c) => c.to_vec(),
        None => center,
    };
    Ok((obj, center))
}

fn exit_time(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (obj, center) = exit_objective(cfg)?;
    let sde = sde_config(cfg, center.clone(), cfg.u64("max_steps"));
    sde.validate()?;
    let (a, alpha, eps) = (cfg.f64("a"), cfg.f64("alpha"), cfg.f64("eps"));
    let records = first_exit_replicates(&sde, &obj, &center, a, cfg.f64("xi"), &seed(cfg), cfg.u64("reps"))?;
    let summary = summarize_exits(&records);
    let predicted = if alpha < 2.0 && eps > 0.0 {
        Some(expected_exit_time(a, eps, alpha) / sde.normalization.rate_factor(alpha)?)
    } else {
        None
    };
    let mut table = Table::new(&[
        "replicates",
        "exited",
        "diverged",
        "censored",
        "mean_exit_time",
        "stderr_exit_time",
        "predicted_mean_exit_time",
    ]);
    table.rows.push(vec![
        summary.replicates.to_string(),
        summary.exited.to_string(),
        summary.diverged.to_string(),
        summary.censored.to_string(),
        summary.mean_exit_time.to_string(),
        summary.stderr_exit_time.to_string(),
        predicted.map(|p| p.to_string()).unwrap_or_default(),
    ]);
    let json = json!({
        "summary": summary,
        "predicted_mean_exit_time": predicted,
        "records": records,
    });
    let mut out = Outcome::new(table, json);
    out.diverged_fraction = summary.diverged_fraction();
    out.extra = cfg.opt_text("records").map(|path| ExtraTable {
        path: path.to_string(),
        table: Table::from_records::<ExitTimeRecord>(&records, &[]),
    });
    Ok(out)
}

fn transition(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let obj = double_well(cfg.f64("m1"), cfg.f64("m2"), 1.0)?;
    let w0 = cfg.opt_f64("w0").unwrap_or(cfg.f64("m1"));
    let sde = sde_config(cfg, vec![w0], cfg.u64("steps"));
    sde.validate()?;
    let reps = cfg.u64("reps");
    let traces = transition_replicates(&sde, &obj, cfg.f64("delta"), &seed(cfg), reps)?;
    let records: Vec<TransitionRecord> = traces.iter().flat_map(|t| t.records.iter().cloned()).collect();
    let table = Table::from_records(
        &records,
        &["replicate", "start_basin", "end_basin", "transition_step", "transition_time"],
    );
    let diverged = traces.iter().filter(|t| t.diverged_at.is_some()).count();
    let json = json!({
        "records": records,
        "diverged_at": traces.iter().map(|t| t.diverged_at).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new(table, json);
    out.diverged_fraction = diverged as f64 / reps.max(1) as f64;
    Ok(out)
}

fn metastability(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = generator_matrix(cfg.f64_list("minima"), cfg.f64_list("saddles"), cfg.f64("alpha"))?.with_stationary()?;
    let r = model.states();
    let mut header = vec!["state".to_string(), "minimum".to_string(), "pi".to_string()];
    header.extend((0..r).map(|j| format!("q_{j}")));
    let pi = model.pi.clone().unwrap_or_default();
    let rows = (0..r)
        .map(|i| {
            let mut row = vec![i.to_string(), model.minima[i].to_string(), pi[i].to_string()];
            row.extend((0..r).map(|j| model.rate(i, j).to_string()));
            row
        })
        .collect();
    Ok(Outcome::new(Table { header, rows }, json!(model)))
}

fn converge(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dim = cfg.usize("dim");
    let noise = match cfg.text("noise") {
        "gaussian" => NoiseModel::Gaussian { std: cfg.f64("scale") },
        "none" => NoiseModel::None,
        _ => NoiseModel::Stable {
            alpha: cfg.f64("alpha"),
            scale: cfg.f64("scale"),
        },
    };
    let gamma = cfg.opt_f64("gamma").unwrap_or(match noise {
        NoiseModel::Stable { alpha, .. } => default_gamma(alpha),
        _ => 1.0,
    });
    let power = cfg.text("objective") == "power-norm";
    let obj = if power { power_norm(dim, gamma)? } else { quadratic(dim)? };
    let holder_m = cfg.opt_f64("holder_m").unwrap_or(if power { 2f64.powf(1.0 - gamma) } else { 1.0 });
    let ks: Vec<u64> = cfg.usize_list("ks").into_iter().map(|k| k as u64).collect();
    let mut conv = ConvergenceConfig::new(gamma, holder_m, ks, vec![cfg.f64("w0"); dim]);
    conv.stepsize_rule = match (cfg.opt_f64("eta"), cfg.opt_f64("c")) {
        (Some(_), Some(_)) => return Err(CliError::config("eta", "give either `eta` or `c`, not both")),
        (Some(eta), None) => StepsizeRule::Constant { eta },
        (None, c) => StepsizeRule::Scaled { c },
    };
    conv.sigma_gamma = cfg.opt_f64("sigma_gamma");
    conv.replicates = cfg.usize("reps");
    conv.sigma_draws = cfg.usize("sigma_draws");
    let points = run_convergence(&obj, &noise, &conv, &seed(cfg))?;
    let mut out = Outcome::new(
        Table::from_records::<ConvergencePoint>(&points, &[]),
        json!({ "points": points, "gamma": gamma, "holder_m": holder_m }),
    );
    out.diverged_fraction = points.iter().map(|p| p.diverged_fraction).fold(0.0, f64::max);
    Ok(out)
}

fn load_data(cfg: &ExperimentConfig, stream: &RngStream) -> Result<DatasetSplit, CliError> {
    match cfg.text("data") {
        "blobs" => Ok(synthetic_blobs(
            cfg.usize("blobs_n"),
            cfg.usize("blobs_dim"),
            cfg.usize("blobs_classes"),
            cfg.f64("blobs_spread"),
            stream,
        )?),
        dir if Path::new(dir).is_dir() => Ok(load_mnist_dir(dir)?),
        dir => Err(CliError::config("data", format!("`{dir}` is neither `blobs` nor a directory"))),
    }
}

fn init(cfg: &ExperimentConfig) -> Init {
    match cfg.text("init") {
        "unit-gaussian" => Init::UnitGaussianScaled,
        _ => Init::FanIn,
    }
}

fn loss(cfg: &ExperimentConfig) -> LossKind {
    match cfg.text("loss") {
        "hinge" => LossKind::LinearHinge,
        _ => LossKind::Nll,
    }
}

fn train(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let root = seed(cfg);
    let data = load_data(cfg, &root.substream(0))?;
    let mut model = MlpModel::fully_connected(
        data.input_dim(),
        cfg.usize("width"),
        cfg.usize("depth"),
        data.n_classes,
        init(cfg),
        &root.substream(1),
    )?;
    let mut tc = TrainConfig::new(cfg.usize("batch"), cfg.f64("eta"), cfg.usize("iters"));
    tc.log_every = cfg.usize("log_every");
    tc.loss = loss(cfg);
    tc.k1 = cfg.opt_u64("k1").map(|k| k as usize);
    tc.stability = cfg.bool("stability");
    tc.stop_at_full_accuracy = cfg.bool("stop_at_full_accuracy");
    if let Some(alpha) = cfg.opt_f64("inject_alpha") {
        tc.noise_source = NoiseSource::Injected { alpha };
    }
    let rows = train_with_tail_logging(&mut model, &data, &tc, &root.substream(2))?;
    let diverged = rows.last().is_some_and(|r| !r.loss.is_finite());
    let mut out = Outcome::new(Table::from_records(&rows, &[]), json!({ "rows": rows }));
    out.diverged_fraction = if diverged { 1.0 } else { 0.0 };
    Ok(out)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let root = seed(cfg);
    let data = load_data(cfg, &root.substream(0))?;
    let grid = SweepGrid {
        widths: cfg.usize_list("widths"),
        depths: cfg.usize_list("depths"),
        batch_sizes: cfg.usize_list("batch_sizes"),
        etas: cfg.f64_list("etas").to_vec(),
        iters: cfg.usize("iters"),
        log_every: cfg.usize("log_every"),
        loss: loss(cfg),
        init: init(cfg),
    };
    let (cells, rows) = noise_scale_sweep(&grid, &data, &root.substream(1))?;
    let diverged = cells.iter().filter(|c| c.diverged).count();
    let mut out = Outcome::new(
        Table::from_records(&rows, &["eta_over_b", "cells", "diverged_cells", "test_error", "alpha_hat"]),
        json!({ "rows": rows, "cells": cells }),
    );
    out.diverged_fraction = diverged as f64 / cells.len().max(1) as f64;
    Ok(out)
}
