//! Grid sweep over width, depth, batch size and step size, grouped by the
//! noise scale `eta / b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::data::DatasetSplit;
use crate::nn::mlp::{Init, LossKind, MlpModel};
use crate::nn::train::{train_with_tail_logging, TrainConfig};
use crate::report::{fmt_opt, header, CsvRecord};
use crate::rng::RngStream;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub etas: Vec<f64>,
    pub iters: usize,
    pub log_every: usize,
    pub loss: LossKind,
    pub init: Init,
}

impl SweepGrid {
    fn cells(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for &w in &self.widths {
            for &d in &self.depths {
                for &b in &self.batch_sizes {
                    for &eta in &self.etas {
                        out.push((w, d, b, eta));
                    }
                }
            }
        }
        out
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub width: usize,
    pub depth: usize,
    pub batch_size: usize,
    pub eta: f64,
    pub test_error: f64,
    pub alpha_hat: Option<f64>,
    pub diverged: bool,
}

/// Averages over the non-divergent cells sharing one `eta / b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta_over_b: f64,
    pub cells: usize,
    pub diverged_cells: usize,
    pub test_error: Option<f64>,
    pub alpha_hat: Option<f64>,
}

impl CsvRecord for SweepRow {
    fn csv_header(&self) -> Vec<String> {
        header(&["eta_over_b", "cells", "diverged_cells", "test_error", "alpha_hat"])
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.eta_over_b.to_string(),
            self.cells.to_string(),
            self.diverged_cells.to_string(),
            fmt_opt(self.test_error),
            fmt_opt(self.alpha_hat),
        ]
    }
}

fn same_ratio(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Group cells by `eta / b` (relative tolerance 1e-12), ascending.
pub fn group_by_noise_scale(cells: &[SweepCell]) -> Vec<SweepRow> {
    let mut ratios: Vec<f64> = Vec::new();
    for c in cells {
        let r = c.eta / c.batch_size as f64;
        if !ratios.iter().any(|&x| same_ratio(x, r)) {
            ratios.push(r);
        }
    }
    ratios.sort_by(f64::total_cmp);
    ratios
        .into_iter()
        .map(|r| {
            let group: Vec<&SweepCell> = cells
                .iter()
                .filter(|c| same_ratio(c.eta / c.batch_size as f64, r))
                .collect();
            let ok: Vec<&&SweepCell> = group.iter().filter(|c| !c.diverged).collect();
            let errors: Vec<f64> = ok.iter().map(|c| c.test_error).collect();
            let alphas: Vec<f64> = ok.iter().filter_map(|c| c.alpha_hat).collect();
            SweepRow {
                eta_over_b: r,
                cells: group.len(),
                diverged_cells: group.len() - ok.len(),
                test_error: (!errors.is_empty()).then(|| stats::mean(&errors)),
                alpha_hat: (!alphas.is_empty()).then(|| stats::mean(&alphas)),
            }
        })
        .collect()
}

/// Train every grid cell and report the final logged iterate. Cell `i` uses
/// `stream.substream(i)` for initialisation and training.
pub fn noise_scale_sweep(grid: &SweepGrid, data: &DatasetSplit, stream: &RngStream) -> Result<(Vec<SweepCell>, Vec<SweepRow>)> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::InvalidParameter("sweep grid has no cells".into()));
    }
    let mut out = Vec::with_capacity(cells.len());
    for (i, (width, depth, b, eta)) in cells.into_iter().enumerate() {
        let cell_stream = stream.substream(i as u64);
        let mut model = MlpModel::fully_connected(
            data.input_dim(),
            width,
            depth,
            data.n_classes,
            grid.init,
            &cell_stream.substream(0),
        )?;
        let mut cfg = TrainConfig::new(b, eta, grid.iters);
        cfg.log_every = grid.log_every;
        cfg.loss = grid.loss;
        cfg.stop_at_full_accuracy = false;
        let rows = train_with_tail_logging(&mut model, data, &cfg, &cell_stream.substream(1))?;
        let last = rows.last().expect("at least one log row");
        let diverged = !last.loss.is_finite() || model.params.iter().any(|p| !p.is_finite());
        out.push(SweepCell {
            width,
            depth,
            batch_size: b,
            eta,
            test_error: 1.0 - model.accuracy(data.test.x.view(), &data.test.y),
            alpha_hat: last.alpha_whole,
            diverged,
        });
    }
    let groups = group_by_noise_scale(&out);
    Ok((out, groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(b: usize, eta: f64, err: f64) -> SweepCell {
        SweepCell {
            width: 4,
            depth: 2,
            batch_size: b,
            eta,
            test_error: err,
            alpha_hat: Some(1.5),
            diverged: false,
        }
    }

    #[test]
    fn equal_ratios_merge() {
        let rows = group_by_noise_scale(&[cell(24, 0.9375, 0.1), cell(48, 1.875, 0.3), cell(24, 1.875, 0.2)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].cells, 2);
        assert!((rows[0].test_error.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn diverged_cells_are_counted_not_averaged() {
        let mut bad = cell(24, 0.9375, f64::NAN);
        bad.diverged = true;
        let rows = group_by_noise_scale(&[cell(24, 0.9375, 0.1), bad]);
        assert_eq!(rows[0].diverged_cells, 1);
        assert_eq!(rows[0].test_error, Some(0.1));
    }
}
