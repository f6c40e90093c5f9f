//! Tolerance-based precision / recall for junctions and line pixels.
//!
//! Junctions are matched one-to-one: candidate `(gt, pred)` pairs within the
//! tolerance are accepted greedily in order of increasing distance. Line
//! pixels are matched by coverage: a predicted pixel counts when some
//! ground-truth pixel lies within the tolerance and vice versa, using a
//! squared Euclidean distance transform of each rasterized set.
//!
//! By convention precision is 1 when nothing is predicted and recall is 1
//! when there is no ground truth.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::AddAssign;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Junction, Point, Segment};
use crate::raster::{rasterize_segment, BinaryMask};

pub const DEFAULT_TOLERANCE_FRAC: f64 = 0.01;

/// Largest prediction set the exhaustive matcher accepts.
pub const EXHAUSTIVE_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Match tolerance as a fraction of the image diagonal.
    pub tolerance_frac: f64,
    /// Strictly increasing thresholds for PR sweeps.
    pub sweep: Vec<f64>,
}

/// `0.1, 0.2, ..., 0.9`.
pub fn default_sweep() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tolerance_frac: DEFAULT_TOLERANCE_FRAC,
            sweep: default_sweep(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_frac > 0.0 && self.tolerance_frac.is_finite()) {
            return Err(Error::InvalidParameter("tolerance fraction must be > 0"));
        }
        if self.sweep.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("sweep must be strictly increasing"));
        }
        Ok(())
    }

    /// Tolerance in pixels for a `width x height` image.
    pub fn tolerance_px(&self, width: usize, height: usize) -> f64 {
        self.tolerance_frac * image_diagonal(width, height)
    }
}

pub fn image_diagonal(width: usize, height: usize) -> f64 {
    (width as f64).hypot(height as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

pub type PrCurve = Vec<PrPoint>;

/// Anything that yields a precision / recall pair.
pub trait PrCounts {
    fn precision(&self) -> f64;
    fn recall(&self) -> f64;

    fn at(&self, threshold: f64) -> PrPoint {
        PrPoint {
            threshold,
            precision: self.precision(),
            recall: self.recall(),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// One-to-one match counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub matches: usize,
    pub gt: usize,
    pub pred: usize,
}

impl PrCounts for MatchCounts {
    fn precision(&self) -> f64 {
        ratio(self.matches, self.pred)
    }
    fn recall(&self) -> f64 {
        ratio(self.matches, self.gt)
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.matches += o.matches;
        self.gt += o.gt;
        self.pred += o.pred;
    }
}

/// Coverage counts for line pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PixelCounts {
    /// Predicted pixels within tolerance of a ground-truth pixel.
    pub pred_hits: usize,
    pub pred_total: usize,
    /// Ground-truth pixels within tolerance of a predicted pixel.
    pub gt_hits: usize,
    pub gt_total: usize,
}

impl PrCounts for PixelCounts {
    fn precision(&self) -> f64 {
        ratio(self.pred_hits, self.pred_total)
    }
    fn recall(&self) -> f64 {
        ratio(self.gt_hits, self.gt_total)
    }
}

impl AddAssign for PixelCounts {
    fn add_assign(&mut self, o: Self) {
        self.pred_hits += o.pred_hits;
        self.pred_total += o.pred_total;
        self.gt_hits += o.gt_hits;
        self.gt_total += o.gt_total;
    }
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Greedy one-to-one matching: pairs within `tol` are accepted in order of
/// increasing distance (ties by index) when both sides are still free.
pub fn match_points(gt: &[Point], pred: &[Point], tol: f64) -> usize {
    let tol_sq = tol * tol;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        for (j, q) in pred.iter().enumerate() {
            let d = g.distance_sq(*q);
            if d <= tol_sq {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut count = 0;
    for (_, i, j) in pairs {
        if !gt_used[i] && !pred_used[j] {
            gt_used[i] = true;
            pred_used[j] = true;
            count += 1;
        }
    }
    count
}

/// Maximum one-to-one matching by exhaustive search over subsets of the
/// predictions (dynamic programming over `(gt index, used-pred bitmask)`).
///
/// Exact but exponential in `pred.len()`; limited to [`EXHAUSTIVE_MAX`].
pub fn max_matching_exhaustive(gt: &[Point], pred: &[Point], tol: f64) -> Result<usize> {
    if pred.len() > EXHAUSTIVE_MAX {
        return Err(Error::InvalidParameter(
            "too many points for exhaustive matching",
        ));
    }
    let tol_sq = tol * tol;
    let full = 1usize << pred.len();
    // best[mask] = max matches using gt[..i] with exactly the preds in `mask` used
    let mut best: Vec<Option<usize>> = vec![None; full];
    best[0] = Some(0);
    for g in gt {
        let mut next = best.clone();
        for (mask, slot) in best.iter().enumerate() {
            let Some(v) = *slot else { continue };
            for (j, q) in pred.iter().enumerate() {
                if mask & (1 << j) == 0 && g.distance_sq(*q) <= tol_sq {
                    let m = mask | (1 << j);
                    if next[m].is_none_or(|cur| cur < v + 1) {
                        next[m] = Some(v + 1);
                    }
                }
            }
        }
        best = next;
    }
    Ok(best.into_iter().flatten().max().unwrap_or(0))
}

/// Junction precision / recall at a pixel tolerance of
/// `tolerance_frac * diagonal`.
pub fn junction_pr(
    gt: &[Junction],
    pred: &[Junction],
    config: &EvalConfig,
    width: usize,
    height: usize,
) -> MatchCounts {
    let g: Vec<Point> = gt.iter().map(|j| j.center).collect();
    let q: Vec<Point> = pred.iter().map(|j| j.center).collect();
    MatchCounts {
        matches: match_points(&g, &q, config.tolerance_px(width, height)),
        gt: g.len(),
        pred: q.len(),
    }
}

/// Squared Euclidean distance from every pixel to the nearest set pixel
/// (`f64::INFINITY` when the mask is empty). Two separable 1D passes of the
/// lower-envelope algorithm; `O(width * height)`.
pub fn distance_transform_sq(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width, mask.height);
    let mut grid: Vec<f64> = mask
        .bits
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    // only finite samples define parabolas
    let mut k: usize = 0;
    let mut any = false;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        if !any {
            any = true;
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            continue;
        }
        loop {
            let p = v[k];
            let s =
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: the new parabola dominates everything so far
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !any {
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, out) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Union of the rasterized segments as a mask.
pub fn rasterize_all(segments: &[Segment], width: usize, height: usize) -> BinaryMask {
    let mut m = BinaryMask::new(width, height);
    for s in segments {
        for (x, y) in rasterize_segment(s, width, height) {
            m.set(x, y, true);
        }
    }
    m
}

/// Pixel-coverage precision / recall of predicted against ground-truth
/// segments.
pub fn line_pixel_pr(
    gt: &[Segment],
    pred: &[Segment],
    config: &EvalConfig,
    width: usize,
    height: usize,
) -> PixelCounts {
    let gt_mask = rasterize_all(gt, width, height);
    let pred_mask = rasterize_all(pred, width, height);
    let tol = config.tolerance_px(width, height);
    pixel_counts(&gt_mask, &pred_mask, tol)
}

/// Coverage counts between two pixel sets.
pub fn pixel_counts(gt: &BinaryMask, pred: &BinaryMask, tol: f64) -> PixelCounts {
    let tol_sq = tol * tol;
    let dt_gt = distance_transform_sq(gt);
    let dt_pred = distance_transform_sq(pred);
    let mut c = PixelCounts::default();
    for (i, (&g, &p)) in gt.bits.iter().zip(&pred.bits).enumerate() {
        if p {
            c.pred_total += 1;
            if dt_gt[i] <= tol_sq {
                c.pred_hits += 1;
            }
        }
        if g {
            c.gt_total += 1;
            if dt_pred[i] <= tol_sq {
                c.gt_hits += 1;
            }
        }
    }
    c
}

/// Evaluates `detect` at every threshold, in order.
pub fn sweep_pr<C: PrCounts>(thresholds: &[f64], mut detect: impl FnMut(f64) -> C) -> PrCurve {
    thresholds.iter().map(|&t| detect(t).at(t)).collect()
}
