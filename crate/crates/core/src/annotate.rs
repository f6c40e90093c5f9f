//! Ground truth from labelled segments: junction derivation and the
//! length-valued line heat map.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geom::{segment_intersection, Intersection, Junction, Point, Segment};
use crate::raster::{rasterize_segment, HeatMap};

/// Default radius (px) within which intersection / incidence points are
/// merged into one junction.
pub const DEFAULT_MERGE_RADIUS: f64 = 2.0;

/// Minimum separation between two branch angles of one junction.
const ANGLE_EPS: f64 = 1e-6;

/// An image with its labelled line segments.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedScene {
    pub width: usize,
    pub height: usize,
    pub lines: Vec<Segment>,
}

impl AnnotatedScene {
    /// Validates that every endpoint is finite and inside `[0, w] x [0, h]`
    /// and that no line has zero length.
    pub fn new(width: usize, height: usize, lines: Vec<Segment>) -> Result<Self> {
        for s in &lines {
            for p in [s.a, s.b] {
                if !p.is_finite() {
                    return Err(Error::NonFinite);
                }
                if p.x < 0.0 || p.y < 0.0 || p.x > width as f64 || p.y > height as f64 {
                    return Err(Error::OutOfBounds {
                        x: p.x,
                        y: p.y,
                        width,
                        height,
                    });
                }
            }
            if s.a == s.b {
                return Err(Error::DegenerateSegment { x: s.a.x, y: s.a.y });
            }
        }
        Ok(Self {
            width,
            height,
            lines,
        })
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so cluster ids stay deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

struct Candidate {
    point: Point,
    /// Exact crossing of two segments, as opposed to a near-incident endpoint.
    exact: bool,
}

/// Orders junctions by `(y, x)`.
pub fn cmp_yx(a: &Point, b: &Point) -> Ordering {
    a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x))
}

/// Derives ground-truth junctions from a labelled scene.
///
/// Candidate points are the pairwise crossings of segments plus every
/// endpoint lying within `merge_radius` of another segment (T- and
/// L-junctions). Candidates are clustered by single linkage at
/// `merge_radius`; each cluster becomes one junction whose center is the mean
/// of its exact crossings (or of its endpoint candidates when it has none).
/// Every segment passing within `merge_radius` of the center contributes one
/// branch per side that extends more than `merge_radius` beyond it.
/// Junctions with fewer than two branches are discarded; the result is
/// sorted by `(y, x)`.
pub fn derive_junctions(scene: &AnnotatedScene, merge_radius: f64) -> Vec<Junction> {
    let r = merge_radius.max(0.0);
    let lines = &scene.lines;
    let mut candidates = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (si, sj) = (&lines[i], &lines[j]);
            if let Intersection::Point(p) = segment_intersection(si, sj) {
                candidates.push(Candidate {
                    point: p,
                    exact: true,
                });
            }
            for (e, other) in [(si.a, sj), (si.b, sj), (sj.a, si), (sj.b, si)] {
                if other.distance_to_point(e) <= r {
                    candidates.push(Candidate {
                        point: e,
                        exact: false,
                    });
                }
            }
        }
    }

    let mut sets = DisjointSet::new(candidates.len());
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if candidates[i].point.distance(candidates[j].point) <= r {
                sets.union(i, j);
            }
        }
    }

    let mut clusters: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..candidates.len() {
        let root = sets.find(i);
        match clusters.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => clusters.push((root, alloc::vec![i])),
        }
    }

    let incidence_tol = r + 1e-9;
    let mut junctions = Vec::new();
    for (_, members) in clusters {
        let exact: Vec<Point> = members
            .iter()
            .filter(|&&m| candidates[m].exact)
            .map(|&m| candidates[m].point)
            .collect();
        let pool: Vec<Point> = if exact.is_empty() {
            members.iter().map(|&m| candidates[m].point).collect()
        } else {
            exact
        };
        let n = pool.len() as f64;
        let center = pool.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n);

        let mut angles = Vec::new();
        let mut incident = 0;
        for s in lines {
            if s.distance_to_point(center) > incidence_tol {
                continue;
            }
            incident += 1;
            let foot = s.point_at(s.project(center));
            if foot.distance(s.a) > r {
                angles.push(s.b.angle_to(s.a));
            }
            if foot.distance(s.b) > r {
                angles.push(s.a.angle_to(s.b));
            }
        }
        let angles = dedup_angles(angles);
        if incident < 2 || angles.len() < 2 {
            continue;
        }
        junctions.push(Junction::with_angles(center, &angles));
    }
    junctions.sort_by(|a, b| cmp_yx(&a.center, &b.center));
    junctions
}

/// Sorts angles and drops any within `ANGLE_EPS` of a kept one (with wrap).
fn dedup_angles(mut angles: Vec<f64>) -> Vec<f64> {
    angles.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        if out.last().is_some_and(|&prev| a - prev <= ANGLE_EPS) {
            continue;
        }
        out.push(a);
    }
    if out.len() > 1 && out[0] + 360.0 - out[out.len() - 1] <= ANGLE_EPS {
        out.pop();
    }
    out
}

/// Renders the line heat map: each pixel on a line holds that line's
/// length, the longest line winning where lines overlap; 0 elsewhere.
pub fn render_target_heatmap(scene: &AnnotatedScene) -> HeatMap {
    let mut map = HeatMap::zeros(scene.width, scene.height);
    for line in &scene.lines {
        let len = line.length();
        for (x, y) in rasterize_segment(line, scene.width, scene.height) {
            if map.get(x, y) < len {
                map.set(x, y, len);
            }
        }
    }
    map
}
