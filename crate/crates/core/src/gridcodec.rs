//! Grid + multi-bin junction representation.
//!
//! The image is split into a `grid_h x grid_w` mesh. The cell containing a
//! junction center owns that junction: it stores a center confidence, the
//! displacement of the junction from the cell center (in pixels), and, for
//! each of `K` equal angular bins, a branch confidence and the residual of
//! the branch angle from the bin center.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{normalize_angle, Branch, Junction, Point};

pub const DEFAULT_GRID: usize = 60;
pub const DEFAULT_BINS: usize = 15;
pub const DEFAULT_TAU_C: f64 = 0.5;
pub const DEFAULT_TAU_B: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    pub grid_h: usize,
    pub grid_w: usize,
    pub bins: usize,
    pub image_w: usize,
    pub image_h: usize,
}

impl GridConfig {
    /// 60 x 60 grid with 15 bins over an `image_w x image_h` image.
    pub fn for_image(image_w: usize, image_h: usize) -> Self {
        Self {
            grid_h: DEFAULT_GRID,
            grid_w: DEFAULT_GRID,
            bins: DEFAULT_BINS,
            image_w,
            image_h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_h == 0 || self.grid_w == 0 {
            return Err(Error::InvalidParameter("grid dimensions must be >= 1"));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter("bin count must be >= 2"));
        }
        if self.image_w == 0 || self.image_h == 0 {
            return Err(Error::InvalidParameter("image dimensions must be >= 1"));
        }
        Ok(())
    }

    pub fn cell_width(&self) -> f64 {
        self.image_w as f64 / self.grid_w as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.image_h as f64 / self.grid_h as f64
    }

    pub fn bin_width(&self) -> f64 {
        360.0 / self.bins as f64
    }

    pub fn cell_count(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            (col as f64 + 0.5) * self.cell_width(),
            (row as f64 + 0.5) * self.cell_height(),
        )
    }

    /// `(row, col)` of the cell containing `p`; points on the right/bottom
    /// image border belong to the last cell.
    pub fn cell_of(&self, p: Point) -> Result<(usize, usize)> {
        let (w, h) = (self.image_w as f64, self.image_h as f64);
        if !p.is_finite() || p.x < 0.0 || p.y < 0.0 || p.x > w || p.y > h {
            return Err(Error::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.image_w,
                height: self.image_h,
            });
        }
        let col = ((p.x / self.cell_width()).floor() as usize).min(self.grid_w - 1);
        let row = ((p.y / self.cell_height()).floor() as usize).min(self.grid_h - 1);
        Ok((row, col))
    }
}

/// Maps an angle to `(bin, residual)` with `residual = theta - center(bin)`.
///
/// Bin `k` spans `[k * bw, (k + 1) * bw)` with center `(k + 0.5) * bw`, so
/// the residual lies in `[-bw / 2, bw / 2)`.
pub fn angle_to_bin(theta_deg: f64, bins: usize) -> (usize, f64) {
    let theta = normalize_angle(theta_deg);
    let bw = 360.0 / bins as f64;
    let k = ((theta / bw).floor() as usize).min(bins - 1);
    (k, theta - bin_center(k, bins))
}

pub fn bin_center(k: usize, bins: usize) -> f64 {
    (k as f64 + 0.5) * (360.0 / bins as f64)
}

/// Inverse of [`angle_to_bin`].
pub fn bin_to_angle(k: usize, residual: f64, bins: usize) -> f64 {
    normalize_angle(bin_center(k, bins) + residual)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellPrediction {
    pub center_conf: f64,
    /// Junction position minus cell center, in pixels.
    pub dx: f64,
    pub dy: f64,
    pub bin_conf: Vec<f64>,
    /// Degrees from each bin center (clockwise on screen is positive).
    pub bin_residual: Vec<f64>,
}

impl CellPrediction {
    pub fn zeros(bins: usize) -> Self {
        Self {
            center_conf: 0.0,
            dx: 0.0,
            dy: 0.0,
            bin_conf: vec![0.0; bins],
            bin_residual: vec![0.0; bins],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEncoding {
    pub config: GridConfig,
    /// Row-major, `grid_h * grid_w` cells.
    pub cells: Vec<CellPrediction>,
}

impl GridEncoding {
    pub fn zeros(config: GridConfig) -> Self {
        Self {
            config,
            cells: vec![CellPrediction::zeros(config.bins); config.cell_count()],
        }
    }

    /// Checks the cell count and per-cell bin vector lengths against the config.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.cells.len() != self.config.cell_count() {
            return Err(Error::ConfigMismatch);
        }
        let k = self.config.bins;
        if self
            .cells
            .iter()
            .any(|c| c.bin_conf.len() != k || c.bin_residual.len() != k)
        {
            return Err(Error::ConfigMismatch);
        }
        Ok(())
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellPrediction {
        &self.cells[row * self.config.grid_w + col]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut CellPrediction {
        &mut self.cells[row * self.config.grid_w + col]
    }
}

/// Encodes junctions into grid targets.
///
/// Two junctions in one cell are an error. When two branches of one junction
/// fall into the same bin, the branch closest to the bin center is kept.
pub fn encode(junctions: &[Junction], config: &GridConfig) -> Result<GridEncoding> {
    config.validate()?;
    let mut enc = GridEncoding::zeros(*config);
    let mut owner: Vec<Option<usize>> = vec![None; config.cell_count()];
    let k = config.bins;
    for (n, j) in junctions.iter().enumerate() {
        let (row, col) = config.cell_of(j.center)?;
        let idx = row * config.grid_w + col;
        if let Some(first) = owner[idx] {
            return Err(Error::CellCollision {
                row,
                col,
                first,
                second: n,
            });
        }
        owner[idx] = Some(n);
        let c = config.cell_center(row, col);
        let cell = &mut enc.cells[idx];
        cell.center_conf = 1.0;
        cell.dx = j.center.x - c.x;
        cell.dy = j.center.y - c.y;
        let mut taken = vec![false; k];
        for b in &j.branches {
            let (bin, res) = angle_to_bin(b.angle, k);
            if taken[bin] && cell.bin_residual[bin].abs() <= res.abs() {
                continue;
            }
            taken[bin] = true;
            cell.bin_conf[bin] = 1.0;
            cell.bin_residual[bin] = res;
        }
    }
    Ok(enc)
}

/// Decodes a grid into junctions, keeping cells with `center_conf > tau_c`
/// and, within them, bins with `bin_conf > tau_b`. Cells left without any
/// branch are dropped. Junctions come out in row-major cell order.
pub fn decode(enc: &GridEncoding, tau_c: f64, tau_b: f64) -> Vec<Junction> {
    let cfg = &enc.config;
    let mut out = Vec::new();
    for row in 0..cfg.grid_h {
        for col in 0..cfg.grid_w {
            let cell = enc.cell(row, col);
            if cell.center_conf <= tau_c {
                continue;
            }
            let branches: Vec<Branch> = (0..cfg.bins)
                .filter(|&b| cell.bin_conf[b] > tau_b)
                .map(|b| Branch {
                    angle: bin_to_angle(b, cell.bin_residual[b], cfg.bins),
                    confidence: cell.bin_conf[b],
                })
                .collect();
            if branches.is_empty() {
                continue;
            }
            let c = cfg.cell_center(row, col);
            out.push(Junction::new(
                Point::new(c.x + cell.dx, c.y + cell.dy),
                branches,
                cell.center_conf,
            ));
        }
    }
    out
}
