//! Progressive probabilistic Hough transform over a binary line mask.
//!
//! Set pixels are visited in a seeded random order. Each visited pixel votes
//! in a `(rho, theta)` accumulator; once the best bin of that pixel reaches
//! the vote threshold, the supporting line is traced through the mask,
//! refitted to the traced pixels, and emitted if long enough. Traced pixels
//! are removed from the mask and their votes withdrawn so a line is found
//! once.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Point, Segment};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughParams {
    /// Accumulator distance resolution (px).
    pub rho_res: f64,
    /// Accumulator angle resolution (degrees).
    pub theta_res: f64,
    pub threshold: u32,
    pub min_length: f64,
    /// Longest run of unsupported pixels bridged while tracing (px).
    pub max_gap: f64,
    pub seed: u64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            rho_res: 1.0,
            theta_res: 1.0,
            threshold: 30,
            min_length: 20.0,
            max_gap: 3.0,
            seed: 0,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_res > 0.0 && self.theta_res > 0.0) {
            return Err(Error::InvalidParameter("hough resolutions must be > 0"));
        }
        if self.threshold < 1 {
            return Err(Error::InvalidParameter("hough vote threshold must be >= 1"));
        }
        if !(self.min_length >= 0.0 && self.max_gap >= 0.0) {
            return Err(Error::InvalidParameter("hough lengths must be >= 0"));
        }
        Ok(())
    }
}

const REFIT_ROUNDS: usize = 3;

struct Accumulator {
    num_rho: usize,
    num_theta: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rho_offset: f64,
    rho_res: f64,
    votes: Vec<u32>,
}

impl Accumulator {
    fn new(width: usize, height: usize, p: &HoughParams) -> Self {
        let num_theta = ((180.0 / p.theta_res).round() as usize).max(1);
        let max_rho = ((width * width + height * height) as f64).sqrt();
        let num_rho = ((2.0 * max_rho / p.rho_res).ceil() as usize) + 3;
        let (mut cos, mut sin) = (Vec::with_capacity(num_theta), Vec::with_capacity(num_theta));
        for n in 0..num_theta {
            let t = (n as f64 * p.theta_res).to_radians();
            cos.push(t.cos());
            sin.push(t.sin());
        }
        Self {
            num_rho,
            num_theta,
            cos,
            sin,
            rho_offset: (num_rho / 2) as f64,
            rho_res: p.rho_res,
            votes: vec![0; num_rho * num_theta],
        }
    }

    fn bin(&self, n: usize, x: usize, y: usize) -> usize {
        let rho = x as f64 * self.cos[n] + y as f64 * self.sin[n];
        let r = ((rho / self.rho_res).round() + self.rho_offset) as usize;
        n * self.num_rho + r
    }

    /// Adds a pixel's votes; returns `(best votes, best theta index)`.
    fn vote(&mut self, x: usize, y: usize) -> (u32, usize) {
        let mut best = (0, 0);
        for n in 0..self.num_theta {
            let b = self.bin(n, x, y);
            self.votes[b] += 1;
            if self.votes[b] > best.0 {
                best = (self.votes[b], n);
            }
        }
        best
    }

    fn unvote(&mut self, x: usize, y: usize) {
        for n in 0..self.num_theta {
            let b = self.bin(n, x, y);
            self.votes[b] = self.votes[b].saturating_sub(1);
        }
    }
}

/// Traces a line through `mask` from `origin` along `dir` in both
/// directions, bridging gaps of up to `max_gap` steps. Each step moves one
/// pixel along the major axis; a step is supported when the nearest pixel or
/// one of its two neighbors across the line is set.
fn trace(mask: &BinaryMask, origin: Point, dir: Point, max_gap: f64) -> Vec<(usize, usize)> {
    let major = dir.x.abs().max(dir.y.abs());
    if major == 0.0 {
        return Vec::new();
    }
    let step = dir * (1.0 / major);
    let x_major = step.x.abs() >= step.y.abs();
    let mut hits = Vec::new();
    for sign in [1.0, -1.0] {
        let mut gap = 0.0;
        let mut k = if sign > 0.0 { 0.0 } else { 1.0 };
        loop {
            let p = origin + step * (sign * k);
            let (x, y) = ((p.x + 0.5).floor() as i64, (p.y + 0.5).floor() as i64);
            if x < 0 || y < 0 || x as usize >= mask.width || y as usize >= mask.height {
                break;
            }
            let candidates = if x_major {
                [(x, y), (x, y - 1), (x, y + 1)]
            } else {
                [(x, y), (x - 1, y), (x + 1, y)]
            };
            if let Some(&(hx, hy)) = candidates.iter().find(|&&(cx, cy)| mask.get_signed(cx, cy)) {
                hits.push((hx as usize, hy as usize));
                gap = 0.0;
            } else {
                gap += 1.0;
                if gap > max_gap {
                    break;
                }
            }
            k += 1.0;
        }
    }
    hits
}

/// Total-least-squares line through pixels: `(centroid, unit direction)`.
fn fit_line(pixels: &[(usize, usize)]) -> Option<(Point, Point)> {
    if pixels.len() < 2 {
        return None;
    }
    let n = pixels.len() as f64;
    let (sx, sy) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
    let c = Point::new(sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let (dx, dy) = (x as f64 - c.x, y as f64 - c.y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // principal axis of the 2x2 scatter matrix
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((c, Point::new(angle.cos(), angle.sin())))
}

/// Extracts line segments from a binary mask.
pub fn hough_segments(mask: &BinaryMask, params: &HoughParams) -> Result<Vec<Segment>> {
    params.validate()?;
    let (w, h) = (mask.width, mask.height);
    let mut work = mask.clone();
    let mut voted = BinaryMask::new(w, h);
    let mut acc = Accumulator::new(w, h, params);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pending: Vec<(usize, usize)> = mask.pixels().collect();
    let mut out = Vec::new();

    while !pending.is_empty() {
        let idx = rng.gen_range(0..pending.len());
        let (x, y) = pending.swap_remove(idx);
        if !work.get(x, y) {
            continue;
        }
        let (votes, n) = acc.vote(x, y);
        voted.set(x, y, true);
        if votes < params.threshold {
            continue;
        }

        // line normal is at theta, so the line runs along theta + 90 deg
        let mut origin = Point::new(x as f64, y as f64);
        let mut dir = Point::new(-acc.sin[n], acc.cos[n]);
        let mut pixels = trace(&work, origin, dir, params.max_gap);
        for _ in 0..REFIT_ROUNDS {
            let Some((c, d)) = fit_line(&pixels) else {
                break;
            };
            origin = c;
            dir = d;
            let next = trace(&work, origin, dir, params.max_gap);
            if next.len() <= pixels.len() {
                if next.len() == pixels.len() {
                    pixels = next;
                }
                break;
            }
            pixels = next;
        }
        if let Some((c, d)) = fit_line(&pixels) {
            origin = c;
            dir = d;
        }

        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(px, py) in &pixels {
            let t = (Point::new(px as f64, py as f64) - origin).dot(dir);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        let good = !pixels.is_empty() && hi - lo >= params.min_length;
        for &(px, py) in &pixels {
            if !work.get(px, py) {
                continue;
            }
            if good && voted.get(px, py) {
                acc.unvote(px, py);
            }
            work.set(px, py, false);
        }
        work.set(x, y, false);
        if good {
            if let Ok(s) = Segment::new(origin + dir * lo, origin + dir * hi) {
                out.push(s);
            }
        }
    }
    Ok(out)
}
