//! Wireframe construction from detected junctions and a line heat map.
//!
//! 1. Junctions and branches below the confidence thresholds are dropped and
//!    near-duplicate junctions are suppressed.
//! 2. The heat map is binarized into a line-support mask.
//! 3. Every branch is a ray. Two rays are matched when each junction lies on
//!    the other's ray and each is the other's nearest such partner; matched
//!    pairs become segments.
//! 4. Each unmatched ray either runs to the image border (when the border is
//!    close) or is followed along the mask to its farthest support pixel;
//!    the resulting segment is split where it crosses existing segments and
//!    every piece with enough mask support is kept.

use alloc::vec;
use alloc::vec::Vec;

use crate::annotate::cmp_yx;
use crate::error::{Error, Result};
use crate::geom::{
    angle_difference, segment_intersection, Branch, Intersection, Junction, Point, Segment,
    Wireframe,
};
use crate::raster::{clip_to_image, digital_line, nearest_pixel, rasterize_segment};
use crate::raster::{BinaryMask, HeatMap};

pub const DEFAULT_OMEGA: f64 = 10.0;
pub const DEFAULT_DELTA_RAY: f64 = 12.0;
pub const DEFAULT_NMS_RADIUS: f64 = 2.0;
pub const DEFAULT_BOUNDARY_FRAC: f64 = 0.05;
pub const DEFAULT_KAPPA_MIN: f64 = 0.6;
pub const DEFAULT_MIN_PIECE_LEN: f64 = 3.0;
pub const DEFAULT_INCIDENCE_TOL: f64 = 1.0;

/// Points closer than this are treated as the same point.
const SAME_POINT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructionParams {
    /// Heat threshold: a pixel supports a line iff `h(p) > omega`.
    pub omega: f64,
    pub tau_c: f64,
    pub tau_b: f64,
    /// Angular tolerance (degrees) of the "point lies on ray" test.
    pub delta_ray: f64,
    pub nms_radius: f64,
    /// Unmatched rays whose border point is within `boundary_frac * max(w, h)`
    /// are extended to the border.
    pub boundary_frac: f64,
    /// Minimum line-support ratio for a recovered piece.
    pub kappa_min: f64,
    /// Recovered pieces shorter than this (px) are dropped.
    pub min_piece_len: f64,
    pub incidence_tol: f64,
    /// Longest run of unsupported ray pixels tolerated while searching for the
    /// farthest support pixel; `None` takes the farthest support pixel on the
    /// whole ray.
    pub max_ray_gap: Option<usize>,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        Self {
            omega: DEFAULT_OMEGA,
            tau_c: crate::gridcodec::DEFAULT_TAU_C,
            tau_b: crate::gridcodec::DEFAULT_TAU_B,
            delta_ray: DEFAULT_DELTA_RAY,
            nms_radius: DEFAULT_NMS_RADIUS,
            boundary_frac: DEFAULT_BOUNDARY_FRAC,
            kappa_min: DEFAULT_KAPPA_MIN,
            min_piece_len: DEFAULT_MIN_PIECE_LEN,
            incidence_tol: DEFAULT_INCIDENCE_TOL,
            max_ray_gap: None,
        }
    }
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.omega,
            self.tau_c,
            self.tau_b,
            self.delta_ray,
            self.nms_radius,
            self.boundary_frac,
            self.kappa_min,
            self.min_piece_len,
            self.incidence_tol,
        ];
        if reals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "construction parameters must be finite and >= 0",
            ));
        }
        if self.kappa_min > 1.0 {
            return Err(Error::InvalidParameter("kappa_min must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Non-maximum suppression of junctions.
///
/// Junctions are visited by descending confidence (ties by `(y, x)`); a
/// junction within `radius` of an already kept one is dropped. Kept
/// junctions are returned in their input order.
pub fn dedup_junctions(junctions: &[Junction], radius: f64) -> Vec<Junction> {
    let mut order: Vec<usize> = (0..junctions.len()).collect();
    order.sort_by(|&a, &b| {
        junctions[b]
            .confidence
            .total_cmp(&junctions[a].confidence)
            .then_with(|| cmp_yx(&junctions[a].center, &junctions[b].center))
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; junctions.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let c = junctions[i].center;
        if kept
            .iter()
            .any(|&k| junctions[k].center.distance(c) <= radius)
        {
            continue;
        }
        kept.push(i);
        keep[i] = true;
    }
    junctions
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(j, _)| j.clone())
        .collect()
}

/// Line-support mask: `h(p) > omega`.
pub fn binarize(h: &HeatMap, omega: f64) -> BinaryMask {
    BinaryMask {
        width: h.width,
        height: h.height,
        bits: h.values.iter().map(|&v| v > omega).collect(),
    }
}

/// Ray starting at a junction center along one of its branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub junction: usize,
    pub branch: usize,
    pub origin: Point,
    /// Degrees in `[0, 360)`.
    pub angle: f64,
}

impl Ray {
    /// True when `q` lies within `tol_deg` of the ray's direction.
    pub fn contains(&self, q: Point, tol_deg: f64) -> bool {
        self.origin.distance(q) > SAME_POINT
            && angle_difference(self.origin.angle_to(q), self.angle) <= tol_deg
    }
}

/// All rays, junction by junction and branch by branch.
pub fn rays_of(junctions: &[Junction]) -> Vec<Ray> {
    junctions
        .iter()
        .enumerate()
        .flat_map(|(i, j)| {
            j.branches.iter().enumerate().map(move |(k, b)| Ray {
                junction: i,
                branch: k,
                origin: j.center,
                angle: b.angle,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayMatching {
    pub rays: Vec<Ray>,
    /// For each ray, the index of the ray it was mutually matched with.
    pub partner: Vec<Option<usize>>,
    /// Matched junction pairs `(i, j)` with `i < j`, in discovery order.
    pub pairs: Vec<(usize, usize)>,
}

impl RayMatching {
    pub fn unmatched(&self) -> impl Iterator<Item = &Ray> + '_ {
        self.rays
            .iter()
            .zip(&self.partner)
            .filter(|(_, p)| p.is_none())
            .map(|(r, _)| r)
    }
}

/// Matches rays of different junctions that point at each other.
///
/// Ray `t1` of junction `i` marks the ray `t2` of junction `j != i` with the
/// smallest `|x_i - x_j|` such that `x_j` lies on `t1` and `x_i` lies on
/// `t2`. Mutually marked rays are matched.
pub fn match_rays(junctions: &[Junction], delta_ray: f64) -> RayMatching {
    let rays = rays_of(junctions);
    let n = rays.len();
    let mut mark: Vec<Option<usize>> = vec![None; n];
    for (t1, r1) in rays.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (t2, r2) in rays.iter().enumerate() {
            if r1.junction == r2.junction {
                continue;
            }
            if !r1.contains(r2.origin, delta_ray) || !r2.contains(r1.origin, delta_ray) {
                continue;
            }
            let d = r1.origin.distance(r2.origin);
            if d < best {
                best = d;
                mark[t1] = Some(t2);
            }
        }
    }

    let mut partner = vec![None; n];
    let mut pairs = Vec::new();
    for t1 in 0..n {
        let Some(t2) = mark[t1] else { continue };
        if t1 < t2 && mark[t2] == Some(t1) {
            partner[t1] = Some(t2);
            partner[t2] = Some(t1);
            let (i, j) = (rays[t1].junction, rays[t2].junction);
            let pair = if i < j { (i, j) } else { (j, i) };
            if !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
    }
    RayMatching {
        rays,
        partner,
        pairs,
    }
}

/// Point where a ray leaves the closed image rectangle `[0, w] x [0, h]`.
pub fn boundary_point(origin: Point, angle: f64, width: usize, height: usize) -> Point {
    let d = Point::from_angle(angle);
    let (w, h) = (width as f64, height as f64);
    let mut t = f64::INFINITY;
    for (dc, pc, hi) in [(d.x, origin.x, w), (d.y, origin.y, h)] {
        if dc > 0.0 {
            t = t.min((hi - pc) / dc);
        } else if dc < 0.0 {
            t = t.min(-pc / dc);
        }
    }
    origin + d * t.max(0.0)
}

/// Fraction of a segment's rasterized pixels that are set in `mask`.
pub fn support_ratio(s: &Segment, mask: &BinaryMask) -> f64 {
    let px = rasterize_segment(s, mask.width, mask.height);
    if px.is_empty() {
        return 0.0;
    }
    let on = px.iter().filter(|&&(x, y)| mask.get(x, y)).count();
    on as f64 / px.len() as f64
}

/// Farthest mask pixel (as a pixel-center point) along the rasterized ray
/// from `origin` to the pixel border. With `max_gap`, the walk stops at the
/// first run of more than `max_gap` unsupported pixels.
pub fn farthest_support(
    origin: Point,
    angle: f64,
    mask: &BinaryMask,
    max_gap: Option<usize>,
) -> Option<Point> {
    let (w, h) = (mask.width, mask.height);
    if w == 0 || h == 0 {
        return None;
    }
    let reach = (w + h) as f64 * 2.0;
    let far = origin + Point::from_angle(angle) * reach;
    let (a, b) = clip_to_image(origin, far, w, h)?;
    let (x0, y0) = nearest_pixel(a);
    let (x1, y1) = nearest_pixel(b);
    let mut best = None;
    let mut gap = 0usize;
    for (x, y) in digital_line(x0, y0, x1, y1) {
        if mask.get_signed(x, y) {
            best = Some(Point::new(x as f64, y as f64));
            gap = 0;
        } else {
            gap += 1;
            if max_gap.is_some_and(|g| gap > g) {
                break;
            }
        }
    }
    best
}

/// Segments recovered from unmatched rays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recovery {
    /// New segments, oriented away from the ray's junction.
    pub segments: Vec<Segment>,
    /// Support ratio of each kept piece (`None` for border segments).
    pub kappas: Vec<Option<f64>>,
}

/// Recovers segments for rays that found no partner.
///
/// `existing` are the segments already in the wireframe; recovered segments
/// are appended to the set of segments later rays are split against.
pub fn recover_unmatched(
    rays: &[Ray],
    mask: &BinaryMask,
    existing: &[Segment],
    params: &ConstructionParams,
) -> Recovery {
    let (w, h) = (mask.width, mask.height);
    let m = w.max(h) as f64;
    let mut all: Vec<Segment> = existing.to_vec();
    let mut out = Recovery::default();
    for ray in rays {
        let p = ray.origin;
        let qb = boundary_point(p, ray.angle, w, h);
        if p.distance(qb) <= params.boundary_frac * m {
            if let Ok(s) = Segment::new(p, qb) {
                all.push(s);
                out.segments.push(s);
                out.kappas.push(None);
            }
            continue;
        }

        let Some(qm) = farthest_support(p, ray.angle, mask, params.max_ray_gap) else {
            continue;
        };
        let Ok(span) = Segment::new(p, qm) else {
            continue;
        };
        let mut cuts: Vec<(f64, Point)> = Vec::new();
        for s in &all {
            if let Intersection::Point(q) = segment_intersection(&span, s) {
                let d = p.distance(q);
                if d > SAME_POINT && q.distance(qm) > SAME_POINT {
                    cuts.push((d, q));
                }
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        cuts.dedup_by(|a, b| (a.0 - b.0).abs() <= SAME_POINT);

        let mut stops: Vec<Point> = Vec::with_capacity(cuts.len() + 2);
        stops.push(p);
        stops.extend(cuts.iter().map(|c| c.1));
        stops.push(qm);
        for pair in stops.windows(2) {
            let Ok(piece) = Segment::new(pair[0], pair[1]) else {
                continue;
            };
            if piece.length() < params.min_piece_len {
                continue;
            }
            let kappa = support_ratio(&piece, mask);
            if kappa > params.kappa_min {
                all.push(piece);
                out.segments.push(piece);
                out.kappas.push(Some(kappa));
            }
        }
    }
    out
}

/// Drops junctions at or below `tau_c` and branches at or below `tau_b`;
/// junctions left without branches are removed.
pub fn filter_confident(junctions: &[Junction], tau_c: f64, tau_b: f64) -> Vec<Junction> {
    junctions
        .iter()
        .filter(|j| j.confidence > tau_c)
        .filter_map(|j| {
            let branches: Vec<Branch> = j
                .branches
                .iter()
                .copied()
                .filter(|b| b.confidence > tau_b)
                .collect();
            (!branches.is_empty()).then(|| Junction {
                branches,
                ..j.clone()
            })
        })
        .collect()
}

struct PointSet {
    points: Vec<Junction>,
}

impl PointSet {
    fn index_of(&mut self, p: Point, toward: Point) -> usize {
        if let Some(i) = self
            .points
            .iter()
            .position(|j| j.center.distance(p) <= SAME_POINT)
        {
            return i;
        }
        let mut j = Junction::new(p, vec![Branch::new(p.angle_to(toward), 1.0)], 0.0);
        j.derived = true;
        self.points.push(j);
        self.points.len() - 1
    }
}

/// Builds a wireframe from detected junctions and a line heat map.
///
/// The output lists the junctions that received at least one segment (in
/// input order) followed by derived points. Derived points carry a single
/// branch toward the segment that created them, confidence 0 and
/// `derived = true`.
pub fn construct_wireframe(
    junctions: &[Junction],
    heat: &HeatMap,
    params: &ConstructionParams,
) -> Result<Wireframe> {
    params.validate()?;
    let confident = filter_confident(junctions, params.tau_c, params.tau_b);
    let kept = dedup_junctions(&confident, params.nms_radius);
    let mask = binarize(heat, params.omega);
    let matching = match_rays(&kept, params.delta_ray);

    let matched: Vec<Segment> = matching
        .pairs
        .iter()
        .filter_map(|&(i, j)| Segment::new(kept[i].center, kept[j].center).ok())
        .collect();
    let unmatched: Vec<Ray> = matching.unmatched().copied().collect();
    let recovery = recover_unmatched(&unmatched, &mask, &matched, params);

    let mut used = vec![false; kept.len()];
    for &(i, j) in &matching.pairs {
        used[i] = true;
        used[j] = true;
    }
    for s in &recovery.segments {
        if let Some(i) = kept.iter().position(|j| j.center == s.a) {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; kept.len()];
    let mut set = PointSet { points: Vec::new() };
    for (i, j) in kept.iter().enumerate() {
        if used[i] {
            remap[i] = set.points.len();
            set.points.push(j.clone());
        }
    }

    let mut endpoints: Vec<(usize, usize)> = Vec::new();
    let mut push_edge = |a: usize, b: usize| {
        let e = if a < b { (a, b) } else { (b, a) };
        if a != b && !endpoints.contains(&e) {
            endpoints.push(e);
        }
    };
    for &(i, j) in &matching.pairs {
        push_edge(remap[i], remap[j]);
    }
    for s in &recovery.segments {
        let a = set.index_of(s.a, s.b);
        let b = set.index_of(s.b, s.a);
        push_edge(a, b);
    }
    Ok(Wireframe::assemble(
        set.points,
        endpoints,
        params.incidence_tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    fn junction(x: f64, y: f64, conf: f64, angles: &[f64]) -> Junction {
        let mut j = Junction::with_angles(Point::new(x, y), angles);
        j.confidence = conf;
        j
    }

    #[test]
    fn dedup_examples() {
        let js = vec![
            junction(10.0, 10.0, 0.8, &[0.0]),
            junction(11.0, 10.0, 0.9, &[0.0]),
        ];
        let out = dedup_junctions(&js, 5.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].confidence, 0.9);

        let spread = vec![
            junction(0.0, 0.0, 0.5, &[0.0]),
            junction(20.0, 0.0, 0.5, &[0.0]),
        ];
        assert_eq!(dedup_junctions(&spread, 5.0), spread);

        // greedy trace: 0.9 keeps (0,0) and suppresses (4,0); (8,0) is 8 px
        // from the only kept junction so it survives
        let row = vec![
            junction(0.0, 0.0, 0.9, &[0.0]),
            junction(4.0, 0.0, 0.8, &[0.0]),
            junction(8.0, 0.0, 0.7, &[0.0]),
        ];
        let out = dedup_junctions(&row, 5.0);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].center, Point::new(0.0, 0.0));
        assert_eq!(out[1].center, Point::new(8.0, 0.0));
    }

    #[test]
    fn binarize_examples() {
        let zero = HeatMap::zeros(4, 3);
        assert!(binarize(&zero, 10.0).is_empty());
        let pos = HeatMap::from_values(2, 1, vec![0.5, 3.0]).unwrap();
        assert_eq!(binarize(&pos, 0.0).count(), 2);
        let m = HeatMap::from_values(3, 1, vec![5.0, 10.0, 15.0]).unwrap();
        assert_eq!(binarize(&m, 10.0).bits, vec![false, false, true]);
    }

    #[test]
    fn match_simple_pair() {
        let js = vec![
            junction(0.0, 0.0, 1.0, &[0.0]),
            junction(10.0, 0.0, 1.0, &[180.0]),
        ];
        let m = match_rays(&js, 12.0);
        assert_eq!(m.pairs, vec![(0, 1)]);
        assert_eq!(m.unmatched().count(), 0);
    }

    #[test]
    fn match_prefers_nearest() {
        let js = vec![
            junction(0.0, 0.0, 1.0, &[0.0]),
            junction(10.0, 0.0, 1.0, &[180.0]),
            junction(5.0, 0.0, 1.0, &[0.0, 180.0]),
        ];
        let m = match_rays(&js, 12.0);
        let mut pairs = m.pairs.clone();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn match_rejects_misaligned() {
        // atan(5 / 10) = 26.57 deg > 12 deg
        let js = vec![
            junction(0.0, 0.0, 1.0, &[0.0]),
            junction(10.0, 5.0, 1.0, &[180.0]),
        ];
        let m = match_rays(&js, 12.0);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched().count(), 2);
    }

    #[test]
    fn boundary_recovery() {
        let mask = BinaryMask::new(100, 100);
        let ray = Ray {
            junction: 0,
            branch: 0,
            origin: Point::new(2.0, 50.0),
            angle: 180.0,
        };
        let r = recover_unmatched(&[ray], &mask, &[], &ConstructionParams::default());
        assert_eq!(r.segments.len(), 1);
        assert!(r.segments[0].b.distance(Point::new(0.0, 50.0)) < 1e-9);
        assert_eq!(r.kappas, vec![None]);
    }

    #[test]
    fn empty_mask_far_from_border_adds_nothing() {
        let mask = BinaryMask::new(100, 100);
        let ray = Ray {
            junction: 0,
            branch: 0,
            origin: Point::new(50.0, 50.0),
            angle: 30.0,
        };
        let r = recover_unmatched(&[ray], &mask, &[], &ConstructionParams::default());
        assert!(r.segments.is_empty());
    }

    #[test]
    fn support_ratio_seven_of_eleven() {
        // ray along row 50 from x = 20; pixels 20..=30 form the piece, 7 set
        let mut mask = BinaryMask::new(100, 100);
        for x in [20, 21, 23, 25, 27, 29, 30] {
            mask.set(x, 50, true);
        }
        let ray = Ray {
            junction: 0,
            branch: 0,
            origin: Point::new(20.0, 50.0),
            angle: 0.0,
        };
        let r = recover_unmatched(&[ray], &mask, &[], &ConstructionParams::default());
        assert_eq!(r.segments.len(), 1);
        assert_eq!(r.segments[0].b, Point::new(30.0, 50.0));
        // explicit count over the rasterized piece: 7 of 11 pixels
        let k = r.kappas[0].unwrap();
        assert!((k - 7.0 / 11.0).abs() < 1e-12);

        // drop one more pixel: 6 / 11 = 0.545 < 0.6
        mask.set(23, 50, false);
        let r = recover_unmatched(&[ray], &mask, &[], &ConstructionParams::default());
        assert!(r.segments.is_empty());
    }

    #[test]
    fn recovered_ray_is_split_at_crossings() {
        let mut mask = BinaryMask::new(100, 100);
        for x in 20..=80 {
            mask.set(x, 50, true);
        }
        let crossing = Segment::from_coords(50.0, 30.0, 50.0, 70.0).unwrap();
        let ray = Ray {
            junction: 0,
            branch: 0,
            origin: Point::new(20.0, 50.0),
            angle: 0.0,
        };
        let r = recover_unmatched(&[ray], &mask, &[crossing], &ConstructionParams::default());
        assert_eq!(r.segments.len(), 2);
        assert_eq!(r.segments[0].b, Point::new(50.0, 50.0));
        assert_eq!(r.segments[1].a, Point::new(50.0, 50.0));
        assert_eq!(r.segments[1].b, Point::new(80.0, 50.0));
    }

    #[test]
    fn empty_inputs_give_empty_wireframe() {
        let w = construct_wireframe(&[], &HeatMap::zeros(50, 50), &ConstructionParams::default())
            .unwrap();
        assert!(w.is_empty());
        assert_eq!((w.incidence.rows, w.incidence.cols), (0, 0));
    }

    #[test]
    fn single_pair_wireframe() {
        let js = vec![
            junction(20.0, 20.0, 1.0, &[0.0]),
            junction(40.0, 20.0, 1.0, &[180.0]),
        ];
        let w = construct_wireframe(
            &js,
            &HeatMap::zeros(100, 100),
            &ConstructionParams::default(),
        )
        .unwrap();
        assert_eq!(w.junctions.len(), 2);
        assert_eq!(w.segments.len(), 1);
        assert_eq!(w.incidence.data, vec![1, 1]);
        assert_eq!((w.incidence.rows, w.incidence.cols), (2, 1));
    }

    #[test]
    fn low_confidence_junctions_are_ignored() {
        let js = vec![
            junction(20.0, 20.0, 0.4, &[0.0]),
            junction(40.0, 20.0, 1.0, &[180.0]),
        ];
        let w = construct_wireframe(
            &js,
            &HeatMap::zeros(100, 100),
            &ConstructionParams::default(),
        )
        .unwrap();
        assert!(w.segments.is_empty());
    }

    #[test]
    fn boundary_point_examples() {
        let q = boundary_point(Point::new(2.0, 50.0), 180.0, 100, 100);
        assert!(q.distance(Point::new(0.0, 50.0)) < 1e-9);
        let q = boundary_point(Point::new(50.0, 50.0), 45.0, 100, 100);
        assert!(q.distance(Point::new(100.0, 100.0)) < 1e-9);
    }
}
