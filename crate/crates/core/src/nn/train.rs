//! Plain SGD with periodic gradient-noise tail measurement.
//!
//! At each logging iteration the training set is split into disjoint
//! minibatches of size `b`; the full gradient and every minibatch gradient
//! are evaluated at the current iterate, before that iteration's update. The
//! noise pool is the concatenation of `grad_i - grad_full` over the complete
//! minibatches; a short remainder batch contributes to the full gradient but
//! not to the pool.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::data::{DataPart, DatasetSplit};
use crate::nn::mlp::{LossKind, MlpModel};
use crate::report::{fmt_opt, CsvRecord};
use crate::rng::RngStream;
use crate::stability::stability_condition;
use crate::stable::{sample_sas, StableParams};
use crate::tail_index::{estimate_alpha, estimate_alpha_auto, TailEstimate};

/// Where the logged noise comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSource {
    #[default]
    Minibatch,
    /// Replace the measured pool by i.i.d. `SaS(1)` draws of the same shape.
    /// Exercises the logging path against a known answer.
    Injected { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub eta: f64,
    pub iters: usize,
    pub log_every: usize,
    pub loss: LossKind,
    pub noise_source: NoiseSource,
    /// Block size of the tail estimator; chosen from the pool size when absent.
    pub k1: Option<usize>,
    /// Also run the stability test on the whole pool.
    pub stability: bool,
    pub stop_at_full_accuracy: bool,
}

impl TrainConfig {
    pub fn new(batch_size: usize, eta: f64, iters: usize) -> Self {
        TrainConfig {
            batch_size,
            eta,
            iters,
            log_every: 100,
            loss: LossKind::Nll,
            noise_source: NoiseSource::Minibatch,
            k1: None,
            stability: false,
            stop_at_full_accuracy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub loss: f64,
    pub alpha_whole: Option<f64>,
    /// Layers `1..=depth`; `None` where the estimate was unreliable.
    pub alpha_layers: Vec<Option<f64>>,
    pub c_st: Option<f64>,
}

impl CsvRecord for TrainLogRow {
    fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["iteration", "train_acc", "test_acc", "loss", "alpha_whole"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((1..=self.alpha_layers.len()).map(|l| format!("alpha_layer_{l}")));
        h.push("c_st".into());
        h
    }

    fn csv_fields(&self) -> Vec<String> {
        let mut f = vec![
            self.iteration.to_string(),
            self.train_acc.to_string(),
            self.test_acc.to_string(),
            self.loss.to_string(),
            fmt_opt(self.alpha_whole),
        ];
        f.extend(self.alpha_layers.iter().map(|a| fmt_opt(*a)));
        f.push(fmt_opt(self.c_st));
        f
    }
}

/// Minibatch gradient noise vectors stored batch-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePool {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl NoisePool {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "pool of {} values is not a whole number of {dim}-vectors",
                values.len()
            )));
        }
        Ok(NoisePool { dim, values })
    }

    pub fn batches(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Entries owned by `range`, gathered across all noise vectors.
    pub fn gather(&self, range: &Range<usize>) -> Vec<f64> {
        self.values.chunks_exact(self.dim).flat_map(|v| v[range.clone()].iter().copied()).collect()
    }

    /// Componentwise mean of the noise vectors.
    pub fn mean_vector(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for v in self.values.chunks_exact(self.dim) {
            m.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        let n = self.batches() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }
}

/// Full-data loss and gradient together with the minibatch noise pool.
#[derive(Debug, Clone)]
pub struct GradientSnapshot {
    pub loss: f64,
    pub full_gradient: Vec<f64>,
    pub pool: NoisePool,
}

/// Evaluate every minibatch of the partition given by `order` at the current
/// parameters.
pub fn gradient_snapshot(model: &MlpModel, data: &DataPart, order: &[usize], batch_size: usize, loss: LossKind) -> Result<GradientSnapshot> {
    let n = order.len();
    if batch_size == 0 || batch_size > n {
        return Err(Error::InvalidParameter(format!("batch size {batch_size} must lie in 1..={n}")));
    }
    let results: Vec<(usize, f64, Vec<f64>)> = order
        .par_chunks(batch_size)
        .map(|idx| {
            let batch = data.select(idx);
            let (l, g) = model.forward_backward(batch.x.view(), &batch.y, loss);
            (idx.len(), l, g)
        })
        .collect();
    let d = model.parameter_count();
    let mut full = vec![0.0; d];
    let mut total_loss = 0.0;
    for (size, l, g) in &results {
        let w = *size as f64 / n as f64;
        total_loss += w * l;
        full.iter_mut().zip(g).for_each(|(f, gi)| *f += w * gi);
    }
    let complete = n / batch_size;
    let mut values = Vec::with_capacity(complete * d);
    for (_, _, g) in results.iter().take(complete) {
        values.extend(g.iter().zip(&full).map(|(gi, f)| gi - f));
    }
    Ok(GradientSnapshot {
        loss: total_loss,
        full_gradient: full,
        pool: NoisePool { dim: d, values },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAlpha {
    /// 0 is the whole network, `1..=depth` the layers.
    pub layer: usize,
    pub estimate: Option<TailEstimate>,
    /// False when estimation failed or fewer than 10 blocks were available.
    pub reliable: bool,
}

impl LayerAlpha {
    pub fn alpha(&self) -> Option<f64> {
        self.estimate.as_ref().filter(|_| self.reliable).map(|e| e.alpha_hat)
    }
}

fn estimate(samples: &[f64], k1: Option<usize>) -> Result<TailEstimate> {
    match k1 {
        Some(k1) => estimate_alpha(samples, k1),
        None => estimate_alpha_auto(samples),
    }
}

fn layer_alpha(layer: usize, samples: &[f64], k1: Option<usize>) -> LayerAlpha {
    match estimate(samples, k1) {
        Ok(e) => LayerAlpha {
            layer,
            reliable: e.k2 >= 10,
            estimate: Some(e),
        },
        Err(_) => LayerAlpha {
            layer,
            estimate: None,
            reliable: false,
        },
    }
}

/// Tail-index of the whole pool (index 0) and of each layer's slice.
pub fn layerwise_alpha(pool: &NoisePool, layer_ranges: &[Range<usize>], k1: Option<usize>) -> Vec<LayerAlpha> {
    let mut out = vec![layer_alpha(0, &pool.values, k1)];
    out.extend(
        layer_ranges
            .par_iter()
            .enumerate()
            .map(|(l, r)| layer_alpha(l + 1, &pool.gather(r), k1))
            .collect::<Vec<_>>(),
    );
    out
}

/// Cycles through shuffled passes over the training set; a short tail of one
/// pass is topped up from the next.
struct EpochSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl EpochSampler {
    fn new(n: usize, rng: ChaCha8Rng) -> Self {
        let mut s = EpochSampler {
            order: (0..n).collect(),
            cursor: n,
            rng,
        };
        s.reshuffle_if_spent();
        s
    }

    fn reshuffle_if_spent(&mut self) {
        if self.cursor >= self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
    }

    fn next_batch(&mut self, b: usize, out: &mut Vec<usize>) {
        out.clear();
        while out.len() < b {
            self.reshuffle_if_spent();
            let take = (b - out.len()).min(self.order.len() - self.cursor);
            out.extend_from_slice(&self.order[self.cursor..self.cursor + take]);
            self.cursor += take;
        }
    }
}

/// Train with plain SGD for `config.iters` iterations, logging every
/// `config.log_every` iterations starting at 0. Training stops early once a
/// logged iterate has 100% training accuracy, or when the loss stops being
/// finite (the last row then carries the non-finite loss).
///
/// Streams: substream 0 orders the training minibatches, substream `1 + i`
/// drives the partition and any injected noise at the `i`-th log.
pub fn train_with_tail_logging(
    model: &mut MlpModel,
    data: &DatasetSplit,
    config: &TrainConfig,
    stream: &RngStream,
) -> Result<Vec<TrainLogRow>> {
    let n = data.n_train();
    if config.batch_size == 0 || config.batch_size > n {
        return Err(Error::InvalidParameter(format!(
            "batch size {} must lie in 1..={n}",
            config.batch_size
        )));
    }
    if !(config.eta > 0.0 && config.eta.is_finite()) {
        return Err(Error::domain("eta", config.eta, "eta > 0"));
    }
    if config.log_every == 0 {
        return Err(Error::InvalidParameter("log_every must be at least 1".into()));
    }
    if model.layer_sizes()[0] != data.input_dim() || *model.layer_sizes().last().expect("sizes") != data.n_classes {
        return Err(Error::InvalidParameter("model input/output sizes do not match the dataset".into()));
    }
    let ranges = model.layer_ranges();
    let mut sampler = EpochSampler::new(n, stream.substream(0).rng());
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut rows = Vec::new();

    for it in 0..config.iters {
        if it % config.log_every == 0 {
            let log_stream = stream.substream(1 + (it / config.log_every) as u64);
            let row = log_row(model, data, config, &ranges, it, &log_stream)?;
            let stop = (config.stop_at_full_accuracy && row.train_acc == 1.0) || !row.loss.is_finite();
            log::debug!("iteration {it}: loss {} alpha {:?}", row.loss, row.alpha_whole);
            rows.push(row);
            if stop {
                break;
            }
        }
        sampler.next_batch(config.batch_size, &mut batch);
        let mb = data.train.select(&batch);
        let (_, g) = model.forward_backward(mb.x.view(), &mb.y, config.loss);
        model.params.iter_mut().zip(&g).for_each(|(p, gi)| *p -= config.eta * gi);
    }
    Ok(rows)
}

fn log_row(
    model: &MlpModel,
    data: &DatasetSplit,
    config: &TrainConfig,
    ranges: &[Range<usize>],
    iteration: usize,
    stream: &RngStream,
) -> Result<TrainLogRow> {
    let mut order: Vec<usize> = (0..data.n_train()).collect();
    order.shuffle(&mut stream.rng());
    let snap = gradient_snapshot(model, &data.train, &order, config.batch_size, config.loss)?;
    let mut row = TrainLogRow {
        iteration,
        train_acc: model.accuracy(data.train.x.view(), &data.train.y),
        test_acc: model.accuracy(data.test.x.view(), &data.test.y),
        loss: snap.loss,
        alpha_whole: None,
        alpha_layers: vec![None; ranges.len()],
        c_st: None,
    };
    if !snap.loss.is_finite() {
        return Ok(row);
    }
    let mut pool = snap.pool;
    if let NoiseSource::Injected { alpha } = config.noise_source {
        pool.values = sample_sas(StableParams::standard(alpha)?, pool.values.len(), &stream.substream(0))?;
    }
    if pool.values.is_empty() {
        return Ok(row);
    }
    let alphas = layerwise_alpha(&pool, ranges, config.k1);
    row.alpha_whole = alphas[0].alpha();
    row.alpha_layers = alphas[1..].iter().map(LayerAlpha::alpha).collect();
    if config.stability {
        row.c_st = stability_condition(&pool.values, &stream.substream(1)).ok().map(|r| r.c_st);
    }
    Ok(row)
}
