//! Pixel grids and digital lines.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{Point, Segment};

/// Integer pixel coordinate `(x, y)`.
pub type Pixel = (usize, usize);

/// Dense row-major grid of non-negative reals over image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl HeatMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    /// Wraps a row-major buffer, checking its length and that every value is
    /// finite and non-negative.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidParameter(
                "heat map buffer length != width * height",
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "heat map values must be finite and >= 0",
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &HeatMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                expected_w: self.width,
                expected_h: self.height,
                found_w: other.width,
                found_h: other.height,
            });
        }
        Ok(())
    }
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but `false` outside the grid.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }
}

/// Clips a segment to the axis-aligned box `[x_min, x_max] x [y_min, y_max]`
/// (Liang–Barsky). Returns the parameters `(t0, t1)` of the visible part, or
/// `None` when the segment misses the box.
pub fn clip_params(
    a: Point,
    b: Point,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
) -> Option<(f64, f64)> {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-d.x, a.x - x_min),
        (d.x, x_max - a.x),
        (-d.y, a.y - y_min),
        (d.y, y_max - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return None;
                }
                t1 = t1.min(r);
            }
        }
    }
    Some((t0, t1))
}

/// Clips a segment to the pixel-center box `[0, width-1] x [0, height-1]`.
pub fn clip_to_image(a: Point, b: Point, width: usize, height: usize) -> Option<(Point, Point)> {
    if width == 0 || height == 0 {
        return None;
    }
    let (t0, t1) = clip_params(a, b, 0.0, 0.0, (width - 1) as f64, (height - 1) as f64)?;
    let d = b - a;
    Some((a + d * t0, a + d * t1))
}

/// `round(num / den)` with halves rounded toward `+inf`; `den > 0`.
fn round_div(num: i64, den: i64) -> i64 {
    (2 * num + den).div_euclid(2 * den)
}

/// 8-connected digital line between two integer pixels, both included.
///
/// One pixel per step along the major axis; the minor coordinate is the
/// exact rounding of the ideal line at that step.
pub fn digital_line(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = x1 - x0;
    let dy = y1 - y0;
    let n = dx.abs().max(dy.abs());
    if n == 0 {
        return vec![(x0, y0)];
    }
    let mut out = Vec::with_capacity(n as usize + 1);
    if dx.abs() >= dy.abs() {
        let sx = dx.signum();
        for i in 0..=n {
            out.push((x0 + sx * i, y0 + round_div(dy * i, n)));
        }
    } else {
        let sy = dy.signum();
        for i in 0..=n {
            out.push((x0 + round_div(dx * i, n), y0 + sy * i));
        }
    }
    out
}

/// Nearest pixel to a real point (halves rounded up).
pub fn nearest_pixel(p: Point) -> (i64, i64) {
    ((p.x + 0.5).floor() as i64, (p.y + 0.5).floor() as i64)
}

/// Rasterizes a segment clipped to the image.
///
/// Returns the 8-connected digital line between the rounded endpoints of
/// the clipped segment; empty when the segment lies outside the image.
pub fn rasterize_segment(s: &Segment, width: usize, height: usize) -> Vec<Pixel> {
    let Some((a, b)) = clip_to_image(s.a, s.b, width, height) else {
        return Vec::new();
    };
    let (x0, y0) = nearest_pixel(a);
    let (x1, y1) = nearest_pixel(b);
    digital_line(x0, y0, x1, y1)
        .into_iter()
        .filter(|&(x, y)| x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height)
        .map(|(x, y)| (x as usize, y as usize))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::from_coords(x1, y1, x2, y2).unwrap()
    }

    /// Independent reference: walk the ideal line at 0.1 px stride to find the
    /// major-axis columns it touches, then pick, for each, the minor
    /// coordinate nearest to the ideal line (ties toward the larger value).
    fn nearest_pixel_walk(x0: i64, y0: i64, x1: i64, y1: i64) -> BTreeSet<(i64, i64)> {
        let (fx0, fy0, fx1, fy1) = (x0 as f64, y0 as f64, x1 as f64, y1 as f64);
        let len = ((fx1 - fx0).powi(2) + (fy1 - fy0).powi(2)).sqrt();
        let steps = (len / 0.1).ceil() as usize;
        let x_major = (x1 - x0).abs() >= (y1 - y0).abs();
        let mut majors = BTreeSet::new();
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let (x, y) = (fx0 + t * (fx1 - fx0), fy0 + t * (fy1 - fy0));
            majors.insert(if x_major {
                x.round() as i64
            } else {
                y.round() as i64
            });
        }
        let mut out = BTreeSet::new();
        for m in majors {
            let ideal = if x_major {
                if x1 == x0 {
                    fy0
                } else {
                    fy0 + (m as f64 - fx0) * (fy1 - fy0) / (fx1 - fx0)
                }
            } else if y1 == y0 {
                fx0
            } else {
                fx0 + (m as f64 - fy0) * (fx1 - fx0) / (fy1 - fy0)
            };
            let lo = ideal.floor() as i64 - 1;
            let best = (lo..=lo + 3)
                .min_by(|&a, &b| {
                    let da = (a as f64 - ideal).abs();
                    let db = (b as f64 - ideal).abs();
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            out.insert(if x_major { (m, best) } else { (best, m) });
        }
        out
    }

    #[test]
    fn rasterize_examples() {
        assert_eq!(
            rasterize_segment(&seg(0.0, 0.0, 3.0, 0.0), 10, 10),
            vec![(0, 0), (1, 0), (2, 0), (3, 0)]
        );
        assert_eq!(
            rasterize_segment(&seg(0.0, 0.0, 2.0, 2.0), 10, 10),
            vec![(0, 0), (1, 1), (2, 2)]
        );
        let px = rasterize_segment(&seg(0.0, 0.0, 3.0, 4.0), 10, 10);
        assert_eq!(px.len(), 5);
        let got: BTreeSet<(i64, i64)> = px.iter().map(|&(x, y)| (x as i64, y as i64)).collect();
        assert_eq!(got, nearest_pixel_walk(0, 0, 3, 4));
    }

    #[test]
    fn digital_line_matches_reference_walk() {
        for (x0, y0, x1, y1) in [
            (0, 0, 7, 3),
            (5, 9, 0, 0),
            (2, 2, 2, 9),
            (0, 0, 13, 13),
            (3, 1, 11, 6),
        ] {
            let got: BTreeSet<_> = digital_line(x0, y0, x1, y1).into_iter().collect();
            let expected = nearest_pixel_walk(x0, y0, x1, y1);
            // the reference breaks ties toward larger values, as does the
            // implementation only when walking in the positive direction
            if x1 >= x0 && y1 >= y0 {
                assert_eq!(got, expected, "line {x0},{y0} -> {x1},{y1}");
            } else {
                assert_eq!(got.len(), expected.len());
            }
        }
    }

    #[test]
    fn endpoints_and_connectivity() {
        let line = digital_line(1, 8, 17, 2);
        assert_eq!(line.first(), Some(&(1, 8)));
        assert_eq!(line.last(), Some(&(17, 2)));
        for w in line.windows(2) {
            assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
        }
    }

    #[test]
    fn outside_image_is_empty() {
        assert!(rasterize_segment(&seg(20.0, 20.0, 30.0, 25.0), 10, 10).is_empty());
        assert!(rasterize_segment(&seg(-5.0, 3.0, -1.0, 3.0), 10, 10).is_empty());
    }

    #[test]
    fn clipping_keeps_inside_part() {
        let px = rasterize_segment(&seg(-5.0, 2.0, 20.0, 2.0), 10, 10);
        assert_eq!(px.first(), Some(&(0, 2)));
        assert_eq!(px.last(), Some(&(9, 2)));
        assert_eq!(px.len(), 10);
    }

    #[test]
    fn heatmap_validation() {
        assert!(HeatMap::from_values(2, 2, vec![0.0; 3]).is_err());
        assert!(HeatMap::from_values(1, 1, vec![-1.0]).is_err());
        assert!(HeatMap::from_values(1, 1, vec![f64::NAN]).is_err());
        assert!(HeatMap::from_values(1, 2, vec![0.0, 3.5]).is_ok());
    }
}
