//! Planar geometry primitives: points, rings, polygons with holes, rigid
//! placement transforms.
//!
//! Rings are plain vertex lists with an implicit closing edge. Polygons keep
//! their outer ring counter-clockwise and their holes clockwise.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Length tolerance used by predicates that must treat touching as touching.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3-D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn of(points: &[Point2]) -> Option<BBox> {
        let first = *points.first()?;
        let mut b = BBox { min: first, max: first };
        for p in &points[1..] {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(self, o: BBox) -> BBox {
        let mut b = self;
        b.include(o.min);
        b.include(o.max);
        b
    }

    pub fn expand(self, d: f64) -> BBox {
        BBox {
            min: Point2::new(self.min.x - d, self.min.y - d),
            max: Point2::new(self.max.x + d, self.max.y + d),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Counter-clockwise corner ring starting at the minimum corner.
    pub fn ring(&self) -> Vec<Point2> {
        vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }
}

/// Shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    acc * 0.5
}

pub fn centroid(ring: &[Point2]) -> Point2 {
    let n = ring.len().max(1) as f64;
    let sum = ring.iter().fold(Point2::default(), |a, p| a + *p);
    sum * (1.0 / n)
}

pub fn ring_edges(ring: &[Point2]) -> impl Iterator<Item = (Point2, Point2)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

pub fn point_on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    point_segment_distance(p, a, b) <= EPS
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// True when the closed segments `ab` and `cd` share at least one point.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    point_on_segment(a, c, d)
        || point_on_segment(b, c, d)
        || point_on_segment(c, a, b)
        || point_on_segment(d, a, b)
}

pub fn segment_segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Even-odd containment of a single ring; points on an edge count as inside.
pub fn ring_contains(ring: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    for (a, b) in ring_edges(ring) {
        if point_on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to the ring boundary (not to the enclosed area).
pub fn ring_boundary_distance(ring: &[Point2], p: Point2) -> f64 {
    ring_edges(ring)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `p` to the filled ring: zero inside.
pub fn ring_distance(ring: &[Point2], p: Point2) -> f64 {
    if ring_contains(ring, p) {
        0.0
    } else {
        ring_boundary_distance(ring, p)
    }
}

/// True when two ring boundaries touch or cross anywhere.
pub fn rings_touch(a: &[Point2], b: &[Point2]) -> bool {
    let (Some(ba), Some(bb)) = (BBox::of(a), BBox::of(b)) else {
        return false;
    };
    if ba.max.x + EPS < bb.min.x
        || bb.max.x + EPS < ba.min.x
        || ba.max.y + EPS < bb.min.y
        || bb.max.y + EPS < ba.min.y
    {
        return false;
    }
    ring_edges(a).any(|(p, q)| ring_edges(b).any(|(r, s)| segments_intersect(p, q, r, s)))
}

/// True when the filled rings share any area or boundary point.
pub fn rings_overlap(a: &[Point2], b: &[Point2]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    rings_touch(a, b) || ring_contains(a, b[0]) || ring_contains(b, a[0])
}

/// Minimum distance between two filled rings (zero when they overlap).
pub fn ring_ring_distance(a: &[Point2], b: &[Point2]) -> f64 {
    if rings_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, q) in ring_edges(a) {
        for (r, s) in ring_edges(b) {
            best = best.min(segment_segment_distance(p, q, r, s));
        }
    }
    best
}

/// Whether the ring's boundary touches itself anywhere other than at the
/// shared vertex of consecutive edges.
pub fn ring_self_intersects(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a == b {
            return true;
        }
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if j == i + 1 {
                // shared vertex b == c
                if point_on_segment(d, a, b) || point_on_segment(a, c, d) {
                    return true;
                }
            } else if i == 0 && j == n - 1 {
                // shared vertex a == d
                if point_on_segment(c, a, b) || point_on_segment(b, c, d) {
                    return true;
                }
            } else if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `p` to the convex hull of `points`, zero inside. Handles
/// degenerate hulls (a point or a segment).
pub fn hull_distance(points: &[Point2], p: Point2) -> f64 {
    let hull = convex_hull(points);
    match hull.len() {
        0 => f64::INFINITY,
        1 => p.dist(hull[0]),
        2 => point_segment_distance(p, hull[0], hull[1]),
        _ => ring_distance(&hull, p),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("ring {ring} has fewer than 3 vertices")]
    TooFewVertices { ring: usize },
    #[error("ring {ring} encloses no area")]
    ZeroArea { ring: usize },
    #[error("ring {ring} intersects itself")]
    SelfIntersecting { ring: usize },
    #[error("hole {hole} is not inside the outer ring")]
    HoleOutside { hole: usize },
}

/// Polygon with optional holes. Ring 0 is the outer ring; ring `i + 1` is
/// hole `i` in error reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2 {
    outer: Vec<Point2>,
    holes: Vec<Vec<Point2>>,
}

impl Polygon2 {
    pub fn new(outer: Vec<Point2>, holes: Vec<Vec<Point2>>) -> Result<Self, GeometryError> {
        let outer = normalize_ring(outer, 0, true)?;
        let mut normalized = Vec::with_capacity(holes.len());
        for (i, h) in holes.into_iter().enumerate() {
            let h = normalize_ring(h, i + 1, false)?;
            if !h.iter().all(|p| ring_contains(&outer, *p)) || rings_touch(&outer, &h) {
                return Err(GeometryError::HoleOutside { hole: i });
            }
            normalized.push(h);
        }
        Ok(Self { outer, holes: normalized })
    }

    pub fn rect(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        let bb = BBox { min, max };
        Self::new(bb.ring(), Vec::new())
    }

    pub fn outer(&self) -> &[Point2] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outer) + self.holes.iter().map(|h| signed_area(h)).sum::<f64>()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.outer).expect("validated polygon is non-empty")
    }

    pub fn contains(&self, p: Point2) -> bool {
        polygon_contains(self, p)
    }

    /// Distance from `p` to the nearest boundary edge of any ring.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.rings()
            .map(|r| ring_boundary_distance(r, p))
            .fold(f64::INFINITY, f64::min)
    }
}

fn normalize_ring(
    mut ring: Vec<Point2>,
    index: usize,
    ccw: bool,
) -> Result<Vec<Point2>, GeometryError> {
    if ring.len() >= 2 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(GeometryError::TooFewVertices { ring: index });
    }
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::ZeroArea { ring: index });
    }
    if ring_self_intersects(&ring) {
        return Err(GeometryError::SelfIntersecting { ring: index });
    }
    let area = signed_area(&ring);
    if area.abs() <= EPS {
        return Err(GeometryError::ZeroArea { ring: index });
    }
    if (area > 0.0) != ccw {
        ring.reverse();
    }
    Ok(ring)
}

/// Even-odd containment over all rings; boundary points count as inside.
pub fn polygon_contains(poly: &Polygon2, p: Point2) -> bool {
    let mut crossings = 0usize;
    for ring in poly.rings() {
        for (a, b) in ring_edges(ring) {
            if point_on_segment(p, a, b) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    crossings += 1;
                }
            }
        }
    }
    crossings % 2 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Top,
}

/// Rigid placement of a package: rotation about its center, then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub position: Point2,
    /// Degrees, counter-clockwise.
    pub rotation: f64,
    pub side: Side,
}

impl Placement {
    pub fn new(x: f64, y: f64, rotation: f64) -> Self {
        Self { position: Point2::new(x, y), rotation, side: Side::Top }
    }

    /// (cos, sin) of the rotation, exact for multiples of 90°.
    pub fn rotation_basis(&self) -> (f64, f64) {
        rotation_basis(self.rotation)
    }

    pub fn apply(&self, local: Point2) -> Point2 {
        let (c, s) = self.rotation_basis();
        Point2::new(
            self.position.x + c * local.x - s * local.y,
            self.position.y + s * local.x + c * local.y,
        )
    }

    /// Rotates a direction without translating it.
    pub fn rotate(&self, v: Point2) -> Point2 {
        let (c, s) = self.rotation_basis();
        Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }
}

pub fn rotation_basis(degrees: f64) -> (f64, f64) {
    let r = degrees.rem_euclid(360.0);
    if r == 0.0 {
        (1.0, 0.0)
    } else if r == 90.0 {
        (0.0, 1.0)
    } else if r == 180.0 {
        (-1.0, 0.0)
    } else if r == 270.0 {
        (0.0, -1.0)
    } else {
        let rad = r.to_radians();
        (rad.cos(), rad.sin())
    }
}

pub fn transform_to_board_frame(local: &[Point2], placement: &Placement) -> Vec<Point2> {
    local.iter().map(|p| placement.apply(*p)).collect()
}
