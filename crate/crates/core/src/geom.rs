//! Points, segments, junctions and the wireframe incidence model.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let d = self - other;
        d.dot(d)
    }

    /// Direction of `other - self` in degrees, normalized to `[0, 360)`.
    pub fn angle_to(self, other: Point) -> f64 {
        let d = other - self;
        normalize_angle(d.y.atan2(d.x).to_degrees())
    }

    /// Unit vector pointing along `angle_deg`.
    pub fn from_angle(angle_deg: f64) -> Self {
        let r = angle_deg.to_radians();
        Self::new(r.cos(), r.sin())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Normalizes an angle in degrees into `[0, 360)`.
pub fn normalize_angle(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a < 0.0 {
        a += 360.0;
    }
    // tiny negative inputs round up to exactly 360
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Absolute angular difference in degrees, in `[0, 180]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// A line segment given by its two endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    /// Builds a segment, rejecting non-finite or coincident endpoints.
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite);
        }
        if a == b {
            return Err(Error::DegenerateSegment { x: a.x, y: a.y });
        }
        Ok(Self { a, b })
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        Self::new(Point::new(x1, y1), Point::new(x2, y2))
    }

    pub fn direction(&self) -> Point {
        self.b - self.a
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point {
        (self.a + self.b) * 0.5
    }

    pub fn reversed(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }

    /// Parameter of the orthogonal projection of `p` onto the segment,
    /// clamped to `[0, 1]`.
    pub fn project(&self, p: Point) -> f64 {
        let d = self.direction();
        let len_sq = d.dot(d);
        if len_sq == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0)
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.a + self.direction() * t
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to_point(&self, p: Point) -> f64 {
        self.point_at(self.project(p)).distance(p)
    }
}

/// Length of a segment; errors on a degenerate segment.
pub fn segment_length(s: &Segment) -> Result<f64> {
    if !s.a.is_finite() || !s.b.is_finite() {
        return Err(Error::NonFinite);
    }
    if s.a == s.b {
        return Err(Error::DegenerateSegment { x: s.a.x, y: s.a.y });
    }
    Ok(s.length())
}

/// Outcome of intersecting two closed segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intersection {
    Disjoint,
    Point(Point),
    /// The segments are collinear and overlap along a stretch of positive length.
    Collinear,
}

impl Intersection {
    pub fn point(self) -> Option<Point> {
        match self {
            Intersection::Point(p) => Some(p),
            _ => None,
        }
    }
}

const PARALLEL_EPS: f64 = 1e-12;

fn lex_key(s: &Segment) -> [f64; 4] {
    let (p, q) = if (s.a.x, s.a.y) <= (s.b.x, s.b.y) {
        (s.a, s.b)
    } else {
        (s.b, s.a)
    };
    [p.x, p.y, q.x, q.y]
}

fn canonical(s: &Segment) -> Segment {
    let k = lex_key(s);
    Segment {
        a: Point::new(k[0], k[1]),
        b: Point::new(k[2], k[3]),
    }
}

/// Intersects two closed segments.
///
/// The arguments are put in a canonical order first so the result is
/// bit-for-bit symmetric in its arguments.
pub fn segment_intersection(s1: &Segment, s2: &Segment) -> Intersection {
    let (c1, c2) = {
        let (a, b) = (canonical(s1), canonical(s2));
        if lex_key(&a) <= lex_key(&b) {
            (a, b)
        } else {
            (b, a)
        }
    };
    intersect_ordered(&c1, &c2)
}

fn intersect_ordered(s1: &Segment, s2: &Segment) -> Intersection {
    let d1 = s1.direction();
    let d2 = s2.direction();
    let w = s2.a - s1.a;
    let denom = d1.cross(d2);
    let scale = d1.norm() * d2.norm();

    if denom.abs() <= PARALLEL_EPS * scale {
        // parallel: either collinear or disjoint
        if w.cross(d1).abs() > PARALLEL_EPS * d1.norm() * w.norm().max(1.0) {
            return Intersection::Disjoint;
        }
        let len_sq = d1.dot(d1);
        let t0 = w.dot(d1) / len_sq;
        let t1 = (s2.b - s1.a).dot(d1) / len_sq;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let start = lo.max(0.0);
        let end = hi.min(1.0);
        let tol = PARALLEL_EPS * 1e3;
        return if end < start - tol {
            Intersection::Disjoint
        } else if end - start <= tol {
            Intersection::Point(s1.point_at(start.clamp(0.0, 1.0)))
        } else {
            Intersection::Collinear
        };
    }

    let t = w.cross(d2) / denom;
    let u = w.cross(d1) / denom;
    let tol = 1e-12;
    if t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol {
        return Intersection::Disjoint;
    }
    Intersection::Point(s1.point_at(t.clamp(0.0, 1.0)))
}

/// One outgoing branch of a junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// Degrees in `[0, 360)`.
    pub angle: f64,
    pub confidence: f64,
}

impl Branch {
    pub fn new(angle: f64, confidence: f64) -> Self {
        Self {
            angle: normalize_angle(angle),
            confidence,
        }
    }
}

/// A junction: a center point plus the directions of the line segments
/// leaving it.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub center: Point,
    pub branches: Vec<Branch>,
    pub confidence: f64,
    /// Set on points created during wireframe construction (segment endpoints
    /// that were not detected as junctions).
    pub derived: bool,
}

impl Junction {
    pub fn new(center: Point, branches: Vec<Branch>, confidence: f64) -> Self {
        Self {
            center,
            branches,
            confidence,
            derived: false,
        }
    }

    /// Junction with unit confidences on the junction and every branch.
    pub fn with_angles(center: Point, angles: &[f64]) -> Self {
        Self::new(
            center,
            angles.iter().map(|&a| Branch::new(a, 1.0)).collect(),
            1.0,
        )
    }

    /// Branch count (L = 2, Y/T = 3, X = 4).
    pub fn order(&self) -> usize {
        self.branches.len()
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// N x M junction/segment incidence (entries 0 or 1).
pub type Incidence = Matrix<u8>;

/// `W[n][m] = 1` iff junction `n`'s center is within `tol` of segment `m`.
pub fn build_incidence(centers: &[Point], segments: &[Segment], tol: f64) -> Incidence {
    let mut w = Incidence::zeros(centers.len(), segments.len());
    for (n, &c) in centers.iter().enumerate() {
        for (m, s) in segments.iter().enumerate() {
            if s.distance_to_point(c) <= tol {
                w.set(n, m, 1);
            }
        }
    }
    w
}

/// `W Wᵀ`: off-diagonal entries count the segments two junctions share.
pub fn junction_adjacency(w: &Incidence) -> Matrix<u32> {
    let mut out = Matrix::zeros(w.rows, w.rows);
    for i in 0..w.rows {
        for j in i..w.rows {
            let v: u32 = w
                .row(i)
                .iter()
                .zip(w.row(j))
                .map(|(&a, &b)| u32::from(a) * u32::from(b))
                .sum();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

/// `Wᵀ W`: off-diagonal entries count the junctions two segments share.
pub fn segment_adjacency(w: &Incidence) -> Matrix<u32> {
    let mut out = Matrix::zeros(w.cols, w.cols);
    for i in 0..w.cols {
        for j in i..w.cols {
            let v: u32 = (0..w.rows)
                .map(|n| u32::from(w.get(n, i)) * u32::from(w.get(n, j)))
                .sum();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

/// A set of junctions connected by segments.
///
/// `endpoints[m]` holds the indices into `junctions` of segment `m`'s two
/// endpoints; `incidence` is the tolerant N x M incidence matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Wireframe {
    pub junctions: Vec<Junction>,
    pub segments: Vec<Segment>,
    pub endpoints: Vec<(usize, usize)>,
    pub incidence: Incidence,
}

impl Wireframe {
    /// Assembles a wireframe from junctions and endpoint index pairs,
    /// computing the incidence matrix at `tol`.
    pub fn assemble(junctions: Vec<Junction>, endpoints: Vec<(usize, usize)>, tol: f64) -> Self {
        let segments: Vec<Segment> = endpoints
            .iter()
            .map(|&(i, j)| Segment {
                a: junctions[i].center,
                b: junctions[j].center,
            })
            .collect();
        let centers: Vec<Point> = junctions.iter().map(|j| j.center).collect();
        let incidence = build_incidence(&centers, &segments, tol);
        Self {
            junctions,
            segments,
            endpoints,
            incidence,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.junctions.is_empty() && self.segments.is_empty()
    }
}
