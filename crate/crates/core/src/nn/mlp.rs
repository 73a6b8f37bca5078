//! Rectifier MLP with exact backpropagation.

use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Weights `N(0, 1 / fan_in)`, zero biases.
    #[default]
    FanIn,
    /// Weights `N(0, 1)`, zero biases, and each layer's input multiplied by
    /// `1 / fan_in`.
    UnitGaussianScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Cross-entropy of the softmax outputs.
    #[default]
    Nll,
    /// `sum_{c != y} max(0, 1 + s_c - s_y)`.
    LinearHinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    /// Multiplier on each layer's input.
    input_scale: Vec<f64>,
    pub params: Vec<f64>,
}

impl MlpModel {
    /// `layer_sizes = [input, hidden..., output]`; rectifiers on every hidden
    /// layer, raw scores at the output.
    pub fn new(layer_sizes: &[usize], init: Init, stream: &RngStream) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "layer sizes need an input and an output, all non-zero".into(),
            ));
        }
        let mut rng = stream.rng();
        let mut params = Vec::new();
        let mut input_scale = Vec::new();
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let (std, scale) = match init {
                Init::FanIn => (1.0 / (fan_in as f64).sqrt(), 1.0),
                Init::UnitGaussianScaled => (1.0, 1.0 / fan_in as f64),
            };
            params.extend((0..fan_in * fan_out).map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std * z
            }));
            params.extend(std::iter::repeat_n(0.0, fan_out));
            input_scale.push(scale);
        }
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            input_scale,
            params,
        })
    }

    /// `depth` weight layers of `width` units between `input` and `output`.
    pub fn fully_connected(input: usize, width: usize, depth: usize, output: usize, init: Init, stream: &RngStream) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(width, depth - 1));
        sizes.push(output);
        Self::new(&sizes, init, stream)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    /// Parameter index ranges of layers `1..=depth`, in order.
    pub fn layer_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let len = w[0] * w[1] + w[1];
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }

    fn layer<'p>(&self, params: &'p [f64], l: usize, range: &Range<usize>) -> (ArrayView2<'p, f64>, ArrayView1<'p, f64>) {
        let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let p = &params[range.clone()];
        let w = ArrayView2::from_shape((fan_out, fan_in), &p[..fan_in * fan_out]).expect("layer shape");
        (w, ArrayView1::from(&p[fan_in * fan_out..]))
    }

    /// Output scores, one row per input row.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let ranges = self.layer_ranges();
        let mut h = x.to_owned();
        for (l, r) in ranges.iter().enumerate() {
            let (w, b) = self.layer(&self.params, l, r);
            let mut z = h.dot(&w.t()) * self.input_scale[l] + b;
            if l + 1 < ranges.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            h = z;
        }
        h
    }

    /// Batch-averaged loss and its exact gradient over all parameters.
    pub fn forward_backward(&self, x: ArrayView2<f64>, y: &[usize], loss: LossKind) -> (f64, Vec<f64>) {
        assert!(!y.is_empty() && x.nrows() == y.len(), "batch must be non-empty and labelled");
        let ranges = self.layer_ranges();
        let depth = ranges.len();
        let layers: Vec<_> = ranges.iter().enumerate().map(|(l, r)| self.layer(&self.params, l, r)).collect();

        // Inputs to each layer (post-rectifier activations).
        let mut acts = vec![x.to_owned()];
        for (l, (w, b)) in layers.iter().enumerate() {
            let mut z = acts[l].dot(&w.t()) * self.input_scale[l] + b;
            if l + 1 < depth {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        let scores = acts.pop().expect("output layer");
        let (value, mut delta) = loss_and_score_grad(&scores, y, loss);

        let mut grad = vec![0.0; self.params.len()];
        for l in (0..depth).rev() {
            let (w, _) = &layers[l];
            let s = self.input_scale[l];
            let input = &acts[l];
            let gw = delta.t().dot(input) * s;
            let gb = delta.sum_axis(Axis(0));
            let r = &ranges[l];
            let split = r.start + w.len();
            grad[r.start..split].copy_from_slice(gw.as_slice().expect("standard layout"));
            grad[split..r.end].copy_from_slice(gb.as_slice().expect("standard layout"));
            if l > 0 {
                let mut back = delta.dot(w) * s;
                ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (value, grad)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.forward(x)
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect()
    }

    pub fn accuracy(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        if y.is_empty() {
            return f64::NAN;
        }
        let hits = self.predict(x).iter().zip(y).filter(|(p, t)| p == t).count();
        hits as f64 / y.len() as f64
    }
}

/// Mean loss over the batch and its gradient with respect to the scores.
fn loss_and_score_grad(scores: &Array2<f64>, y: &[usize], loss: LossKind) -> (f64, Array2<f64>) {
    let n = y.len() as f64;
    let mut grad = Array2::zeros(scores.raw_dim());
    let mut total = 0.0;
    for ((row, mut g), &label) in scores.rows().into_iter().zip(grad.rows_mut()).zip(y) {
        match loss {
            LossKind::Nll => {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
                let log_z = max + sum.ln();
                total += log_z - row[label];
                for (gc, &v) in g.iter_mut().zip(row) {
                    *gc = (v - log_z).exp() / n;
                }
                g[label] -= 1.0 / n;
            }
            LossKind::LinearHinge => {
                let correct = row[label];
                for (c, &v) in row.iter().enumerate() {
                    if c == label {
                        continue;
                    }
                    let margin = 1.0 + v - correct;
                    if margin > 0.0 {
                        total += margin;
                        g[c] += 1.0 / n;
                        g[label] -= 1.0 / n;
                    }
                }
            }
        }
    }
    (total / n, grad)
}
