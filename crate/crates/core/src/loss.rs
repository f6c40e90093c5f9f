//! Junction and heat-map losses with analytic gradients, and the
//! positive/negative cell sampler.
//!
//! The junction loss is the weighted sum of four terms:
//!
//! * center confidence: mean cross-entropy over the sampled cells;
//! * center location: mean over ground-truth junctions of the squared
//!   displacement error of the owning cell;
//! * branch confidence: mean cross-entropy over ground-truth cells and all
//!   `K` bins;
//! * branch location: mean over ground-truth junctions of the mean squared
//!   residual error over that junction's occupied bins.
//!
//! Location terms are plain (positive) squared errors.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Junction;
use crate::gridcodec::{encode, GridEncoding};
use crate::raster::{BinaryMask, HeatMap};

/// Confidences are clamped to `[CONF_EPS, 1 - CONF_EPS]` before taking logs.
pub const CONF_EPS: f64 = 1e-7;

/// Default cap on the negative:positive cell ratio.
pub const DEFAULT_R_MAX: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub conf_c: f64,
    pub loc_c: f64,
    pub conf_b: f64,
    pub loc_b: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            conf_c: 1.0,
            loc_c: 0.1,
            conf_b: 1.0,
            loc_b: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.conf_c, self.loc_c, self.conf_b, self.loc_b];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "loss weights must be finite and >= 0",
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            conf_c: self.conf_c * s,
            loc_c: self.loc_c * s,
            conf_b: self.conf_b * s,
            loc_b: self.loc_b * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub total: f64,
    pub conf_c: f64,
    pub loc_c: f64,
    pub conf_b: f64,
    pub loc_b: f64,
}

/// Binary cross-entropy of a predicted probability against a label.
pub fn cross_entropy(pred: f64, label: f64) -> f64 {
    let p = pred.clamp(CONF_EPS, 1.0 - CONF_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// d/dpred of [`cross_entropy`]; zero where the clamp is active.
pub fn cross_entropy_grad(pred: f64, label: f64) -> f64 {
    if !(CONF_EPS..=1.0 - CONF_EPS).contains(&pred) {
        return 0.0;
    }
    -label / pred + (1.0 - label) / (1.0 - pred)
}

/// Wraps an angle difference into `[-180, 180]`.
fn wrap_degrees(d: f64) -> f64 {
    d - 360.0 * (d / 360.0).round()
}

fn check_mask(pred: &GridEncoding, mask: &BinaryMask) -> Result<()> {
    if mask.width != pred.config.grid_w || mask.height != pred.config.grid_h {
        return Err(Error::ConfigMismatch);
    }
    Ok(())
}

fn evaluate(
    pred: &GridEncoding,
    gt: &[Junction],
    weights: &LossWeights,
    mask: &BinaryMask,
    mut grad: Option<&mut GridEncoding>,
) -> Result<LossReport> {
    pred.validate()?;
    weights.validate()?;
    check_mask(pred, mask)?;
    let target = encode(gt, &pred.config)?;
    let k = pred.config.bins;

    let masked = mask.count();
    let mut conf_c = 0.0;
    if masked > 0 {
        let scale = 1.0 / masked as f64;
        for (i, (p, t)) in pred.cells.iter().zip(&target.cells).enumerate() {
            if !mask.bits[i] {
                continue;
            }
            conf_c += cross_entropy(p.center_conf, t.center_conf);
            if let Some(g) = grad.as_deref_mut() {
                g.cells[i].center_conf =
                    weights.conf_c * scale * cross_entropy_grad(p.center_conf, t.center_conf);
            }
        }
        conf_c *= scale;
    }

    let positives: Vec<usize> = target
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.center_conf == 1.0)
        .map(|(i, _)| i)
        .collect();
    let n = positives.len();
    let (mut loc_c, mut conf_b, mut loc_b) = (0.0, 0.0, 0.0);
    if n > 0 {
        let inv_n = 1.0 / n as f64;
        let inv_nk = inv_n / k as f64;
        for &i in &positives {
            let (p, t) = (&pred.cells[i], &target.cells[i]);
            let (ex, ey) = (p.dx - t.dx, p.dy - t.dy);
            loc_c += ex * ex + ey * ey;

            let occupied: Vec<usize> = (0..k).filter(|&b| t.bin_conf[b] == 1.0).collect();
            let inv_r = if occupied.is_empty() {
                0.0
            } else {
                1.0 / occupied.len() as f64
            };
            let mut junction_loc_b = 0.0;
            for &b in &occupied {
                let e = wrap_degrees(p.bin_residual[b] - t.bin_residual[b]);
                junction_loc_b += e * e;
            }
            loc_b += junction_loc_b * inv_r;

            for b in 0..k {
                conf_b += cross_entropy(p.bin_conf[b], t.bin_conf[b]);
            }

            if let Some(g) = grad.as_deref_mut() {
                let gc = &mut g.cells[i];
                gc.dx = weights.loc_c * inv_n * 2.0 * ex;
                gc.dy = weights.loc_c * inv_n * 2.0 * ey;
                for b in 0..k {
                    gc.bin_conf[b] =
                        weights.conf_b * inv_nk * cross_entropy_grad(p.bin_conf[b], t.bin_conf[b]);
                }
                for &b in &occupied {
                    let e = wrap_degrees(p.bin_residual[b] - t.bin_residual[b]);
                    gc.bin_residual[b] = weights.loc_b * inv_n * inv_r * 2.0 * e;
                }
            }
        }
        loc_c *= inv_n;
        conf_b *= inv_nk;
        loc_b *= inv_n;
    }

    let total = weights.conf_c * conf_c
        + weights.loc_c * loc_c
        + weights.conf_b * conf_b
        + weights.loc_b * loc_b;
    Ok(LossReport {
        total,
        conf_c,
        loc_c,
        conf_b,
        loc_b,
    })
}

/// Junction loss of `pred` against ground-truth junctions.
///
/// `mask` is a `grid_w x grid_h` selection of the cells that take part in
/// the center-confidence term (see [`sample_cells`]).
pub fn junction_loss(
    pred: &GridEncoding,
    gt: &[Junction],
    weights: &LossWeights,
    mask: &BinaryMask,
) -> Result<LossReport> {
    evaluate(pred, gt, weights, mask, None)
}

/// Gradient of the total junction loss with respect to every prediction
/// field, laid out like `pred`.
pub fn junction_loss_grad(
    pred: &GridEncoding,
    gt: &[Junction],
    weights: &LossWeights,
    mask: &BinaryMask,
) -> Result<GridEncoding> {
    junction_loss_with_grad(pred, gt, weights, mask).map(|(_, g)| g)
}

pub fn junction_loss_with_grad(
    pred: &GridEncoding,
    gt: &[Junction],
    weights: &LossWeights,
    mask: &BinaryMask,
) -> Result<(LossReport, GridEncoding)> {
    let mut grad = GridEncoding::zeros(pred.config);
    let report = evaluate(pred, gt, weights, mask, Some(&mut grad))?;
    Ok((report, grad))
}

/// Sum of squared per-pixel differences and its gradient with respect to
/// the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapLoss {
    pub loss: f64,
    /// Row-major `2 * (pred - target)`.
    pub grad: Vec<f64>,
}

pub fn heatmap_l2_loss(pred: &HeatMap, target: &HeatMap) -> Result<HeatmapLoss> {
    target.same_shape(pred)?;
    let mut loss = 0.0;
    let grad = pred
        .values
        .iter()
        .zip(&target.values)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d
        })
        .collect();
    Ok(HeatmapLoss { loss, grad })
}

/// Selects the cells used by the center-confidence term.
///
/// Every positive cell is kept, plus a seeded uniform sample of
/// `min(#neg, floor(r_max * #pos))` negative cells. An infinite `r_max`, or
/// a grid without positives, selects every cell. Negative or NaN `r_max`
/// keeps positives only.
pub fn sample_cells(gt: &GridEncoding, r_max: f64, seed: u64) -> BinaryMask {
    let cfg = &gt.config;
    let mut mask = BinaryMask::new(cfg.grid_w, cfg.grid_h);
    let mut negatives = Vec::new();
    for (i, c) in gt.cells.iter().enumerate() {
        if c.center_conf >= 0.5 {
            mask.bits[i] = true;
        } else {
            negatives.push(i);
        }
    }
    let positives = gt.cells.len() - negatives.len();
    if positives == 0 || r_max == f64::INFINITY {
        return BinaryMask::full(cfg.grid_w, cfg.grid_h);
    }
    let r = if r_max >= 0.0 { r_max } else { 0.0 };
    let budget = (r * positives as f64).floor();
    let take = if budget >= negatives.len() as f64 {
        negatives.len()
    } else {
        budget as usize
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in rand::seq::index::sample(&mut rng, negatives.len(), take) {
        mask.bits[negatives[idx]] = true;
    }
    mask
}

/// Mask selecting every cell of a grid.
pub fn full_mask(gt: &GridEncoding) -> BinaryMask {
    BinaryMask::full(gt.config.grid_w, gt.config.grid_h)
}
