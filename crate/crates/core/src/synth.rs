//! Seeded random line scenes.
//!
//! Scenes grow one segment at a time. Every segment after the first starts
//! on an existing segment, either on its interior (T-junction) or at a free
//! endpoint (L-junction), so every segment takes part in a junction. New
//! segments may cross existing ones (X-junctions). Candidates are rejected
//! when they would create shallow angles or put two junction-like points
//! closer than `clearance`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annotate::AnnotatedScene;
use crate::geom::{segment_intersection, Intersection, Point, Segment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub min_segments: usize,
    pub max_segments: usize,
    pub min_len: f64,
    pub max_len: f64,
    /// Smallest angle (degrees) between two lines meeting at a point.
    pub min_angle: f64,
    /// Endpoints stay at least this far from the image border.
    pub margin: f64,
    /// Minimum separation between junction-like points and unrelated lines.
    pub clearance: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 320,
            height: 320,
            min_segments: 5,
            max_segments: 30,
            min_len: 30.0,
            max_len: 150.0,
            min_angle: 20.0,
            margin: 4.0,
            clearance: 6.0,
        }
    }
}

const ATTEMPTS_PER_SEGMENT: usize = 400;

/// Acute angle (degrees, in `[0, 90]`) between the lines of two segments.
fn line_angle(s: &Segment, t: &Segment) -> f64 {
    let (u, v) = (s.direction(), t.direction());
    let c = (u.dot(v) / (u.norm() * v.norm())).abs().min(1.0);
    c.acos().to_degrees()
}

struct Builder<'a> {
    params: &'a SceneParams,
    lines: Vec<Segment>,
    /// Endpoints and crossings.
    points: Vec<Point>,
    /// Endpoints that no other segment touches.
    free_ends: Vec<Point>,
}

impl Builder<'_> {
    fn inside(&self, p: Point) -> bool {
        let m = self.params.margin;
        p.x >= m
            && p.y >= m
            && p.x <= self.params.width as f64 - m
            && p.y <= self.params.height as f64 - m
    }

    /// Checks a candidate leaving `anchor` (on `host`, if any) and returns
    /// the crossings it creates.
    fn admissible(&self, c: &Segment, host: Option<usize>) -> Option<Vec<Point>> {
        let sp = self.params;
        let (a, b) = (c.a, c.b);
        if !self.inside(a) || !self.inside(b) {
            return None;
        }
        let mut crossings = Vec::new();
        for (i, s) in self.lines.iter().enumerate() {
            if Some(i) == host {
                if line_angle(c, s) < sp.min_angle || s.distance_to_point(b) < sp.clearance {
                    return None;
                }
                continue;
            }
            match segment_intersection(c, s) {
                Intersection::Collinear => return None,
                Intersection::Point(q) => {
                    if line_angle(c, s) < sp.min_angle
                        || q.distance(a) < sp.clearance
                        || q.distance(b) < sp.clearance
                    {
                        return None;
                    }
                    crossings.push(q);
                }
                Intersection::Disjoint => {
                    if s.distance_to_point(a) < sp.clearance
                        || s.distance_to_point(b) < sp.clearance
                    {
                        return None;
                    }
                }
            }
        }
        for q in &crossings {
            if self.points.iter().any(|p| p.distance(*q) < sp.clearance) {
                return None;
            }
        }
        let host_seg = host.map(|h| self.lines[h]);
        for p in &self.points {
            if p.distance(a) < 1e-9 {
                continue;
            }
            let on_host = host_seg.is_some_and(|h| h.distance_to_point(*p) < 1e-9);
            if on_host {
                if p.distance(a) < 3.0 * sp.clearance {
                    return None;
                }
            } else if c.distance_to_point(*p) < sp.clearance {
                return None;
            }
        }
        Some(crossings)
    }

    fn accept(&mut self, c: Segment, crossings: Vec<Point>, anchored: bool) {
        if anchored {
            if let Some(i) = self.free_ends.iter().position(|p| p.distance(c.a) < 1e-9) {
                self.free_ends.swap_remove(i);
            }
        } else {
            self.free_ends.push(c.a);
            self.points.push(c.a);
        }
        if !self.points.iter().any(|p| p.distance(c.a) < 1e-9) {
            self.points.push(c.a);
        }
        self.free_ends.push(c.b);
        self.points.push(c.b);
        self.points.extend(crossings);
        self.lines.push(c);
    }
}

/// Generates a scene; identical `(params, seed)` give identical scenes.
///
/// The segment count is drawn from `[min_segments, max_segments]`; fewer
/// segments are returned when no admissible candidate is found.
pub fn random_scene(params: &SceneParams, seed: u64) -> AnnotatedScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(params.min_segments..=params.max_segments.max(params.min_segments));
    let mut b = Builder {
        params,
        lines: Vec::new(),
        points: Vec::new(),
        free_ends: Vec::new(),
    };
    let (w, h) = (params.width as f64, params.height as f64);
    while b.lines.len() < target {
        let mut placed = false;
        for _ in 0..ATTEMPTS_PER_SEGMENT {
            let len = rng.gen_range(params.min_len..=params.max_len);
            let angle: f64 = rng.gen_range(0.0..360.0);
            let dir = Point::from_angle(angle);
            let (anchor, host) = if b.lines.is_empty() {
                let p = Point::new(
                    rng.gen_range(params.margin..=w - params.margin),
                    rng.gen_range(params.margin..=h - params.margin),
                );
                (p, None)
            } else if !b.free_ends.is_empty() && rng.gen_bool(0.3) {
                let p = b.free_ends[rng.gen_range(0..b.free_ends.len())];
                let host = b
                    .lines
                    .iter()
                    .position(|s| s.a.distance(p) < 1e-9 || s.b.distance(p) < 1e-9);
                (p, host)
            } else {
                let i = rng.gen_range(0..b.lines.len());
                let t = rng.gen_range(0.15..0.85);
                (b.lines[i].point_at(t), Some(i))
            };
            let Ok(c) = Segment::new(anchor, anchor + dir * len) else {
                continue;
            };
            if let Some(crossings) = b.admissible(&c, host) {
                b.accept(c, crossings, host.is_some());
                placed = true;
                break;
            }
        }
        if !placed {
            break;
        }
    }
    AnnotatedScene::new(params.width, params.height, b.lines)
        .expect("generated lines lie inside the image")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{derive_junctions, DEFAULT_MERGE_RADIUS};

    #[test]
    fn deterministic_and_in_range() {
        let params = SceneParams::default();
        for seed in 0..20 {
            let a = random_scene(&params, seed);
            assert_eq!(a, random_scene(&params, seed));
            assert!(a.lines.len() >= params.min_segments && a.lines.len() <= params.max_segments);
            for s in &a.lines {
                assert!(s.length() >= params.min_len - 1e-9 && s.length() <= params.max_len + 1e-9);
            }
        }
    }

    #[test]
    fn every_segment_touches_a_junction() {
        let params = SceneParams::default();
        for seed in 0..20 {
            let scene = random_scene(&params, seed);
            let js = derive_junctions(&scene, DEFAULT_MERGE_RADIUS);
            for s in &scene.lines {
                assert!(
                    js.iter().any(|j| s.distance_to_point(j.center) < 1e-6),
                    "seed {seed}"
                );
            }
        }
    }
}
