//! Housing solid as a 2.5-D height field.
//!
//! Every point of the board plane carries a void height `h`: material fills
//! `[h, T]` above it. The plane is triangulated with every region boundary
//! as a constraint, so each triangle has one height. Top faces sit at `T`,
//! bottom faces at `h`, and walls fill the height difference across every
//! edge. Tab slabs are added separately and welded to their end walls.

use std::collections::{BTreeSet, HashMap};

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2 as SPoint, Triangulation};
use thiserror::Error;

use crate::bolts::{BoltPlan, DEFAULT_HOLE_DIAMETER};
use crate::cavity::{cavity_for, CavityError, CavitySolid, MaterialProfile, TabPrism, VoidHeight, PRIORITY_HOLE};
use crate::geom::{ring_contains, rings_overlap, rings_touch, BBox, Point2};
use crate::mesh::{cross, dot, mesh_diagnostics, sub, TriMesh};
use crate::model::BoardDesign;

pub const MIN_CIRCLE_SEGMENTS: usize = 8;
/// Points closer than this are merged.
pub const WELD_TOLERANCE: f64 = 1e-6;
/// Heights closer than this are one level.
const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HousingConfig {
    pub thickness: f64,
    pub bolt_diameter: f64,
    pub circle_segments: usize,
    pub profile: MaterialProfile,
}

impl Default for HousingConfig {
    fn default() -> Self {
        Self { thickness: 3.0, bolt_diameter: DEFAULT_HOLE_DIAMETER, circle_segments: 32, profile: MaterialProfile::Resin }
    }
}

impl HousingConfig {
    pub fn validate(&self) -> Result<(), MeshError> {
        use crate::bolts::calibration::{MAX_THICKNESS, MIN_THICKNESS};
        if !(MIN_THICKNESS..=MAX_THICKNESS).contains(&self.thickness) {
            return Err(MeshError::Config(format!("thickness {} mm is outside [1, 5] mm", self.thickness)));
        }
        if self.bolt_diameter.is_nan() || self.bolt_diameter < DEFAULT_HOLE_DIAMETER {
            return Err(MeshError::Config(format!("bolt diameter {} mm is below 1 mm", self.bolt_diameter)));
        }
        if self.circle_segments < MIN_CIRCLE_SEGMENTS {
            return Err(MeshError::Config(format!("{} circle segments, need at least 8", self.circle_segments)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid housing configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error("cavities of {0} and {1} overlap")]
    CavityOverlap(String, String),
    #[error("boolean failure at {solid}: {reason}")]
    BooleanFailure { solid: String, reason: String },
}

fn failure(solid: impl Into<String>, reason: impl Into<String>) -> MeshError {
    MeshError::BooleanFailure { solid: solid.into(), reason: reason.into() }
}

struct Region {
    ring: Vec<Point2>,
    bbox: BBox,
    height: f64,
    priority: u8,
}

/// Inscribed polygon approximating a bolt hole.
pub fn hole_ring(center: Point2, diameter: f64, segments: usize) -> Vec<Point2> {
    let r = diameter / 2.0;
    (0..segments)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / segments as f64;
            center + Point2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Cavities for every component, rejecting overlaps.
pub fn housing_cavities(board: &BoardDesign, profile: MaterialProfile) -> Result<Vec<CavitySolid>, MeshError> {
    let cavities = board.components.iter().map(|c| cavity_for(c, profile)).collect::<Result<Vec<_>, _>>()?;
    let envelopes: Vec<Vec<Vec<Point2>>> = cavities
        .iter()
        .map(|c| match &c.groove {
            Some(g) => vec![g.outer.clone()],
            None => c.footprints().into_iter().map(<[Point2]>::to_vec).collect(),
        })
        .collect();
    let boxes: Vec<BBox> = envelopes
        .iter()
        .map(|rings| {
            let pts: Vec<Point2> = rings.iter().flatten().copied().collect();
            BBox::of(&pts).expect("cavity has a footprint")
        })
        .collect();
    for i in 0..cavities.len() {
        for j in i + 1..cavities.len() {
            let (a, b) = (boxes[i], boxes[j]);
            if a.max.x < b.min.x || b.max.x < a.min.x || a.max.y < b.min.y || b.max.y < a.min.y {
                continue;
            }
            if envelopes[i].iter().any(|ra| envelopes[j].iter().any(|rb| rings_overlap(ra, rb))) {
                return Err(MeshError::CavityOverlap(cavities[i].ref_des.clone(), cavities[j].ref_des.clone()));
            }
        }
    }
    Ok(cavities)
}

type Cdt = ConstrainedDelaunayTriangulation<SPoint<f64>>;

/// Vertex insertion with welding.
struct Welder {
    cdt: Cdt,
    cells: HashMap<(i64, i64), Vec<FixedVertexHandle>>,
}

impl Welder {
    fn cell(p: Point2) -> (i64, i64) {
        ((p.x / WELD_TOLERANCE).floor() as i64, (p.y / WELD_TOLERANCE).floor() as i64)
    }

    fn find(&self, p: Point2) -> Option<FixedVertexHandle> {
        let (cx, cy) = Self::cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &h in self.cells.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    let q = self.cdt.vertex(h).position();
                    if (q.x - p.x).hypot(q.y - p.y) <= WELD_TOLERANCE {
                        return Some(h);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, p: Point2, solid: &str) -> Result<FixedVertexHandle, MeshError> {
        if let Some(h) = self.find(p) {
            return Ok(h);
        }
        let h = self
            .cdt
            .insert(SPoint::new(p.x, p.y))
            .map_err(|e| failure(solid, format!("cannot insert vertex ({}, {}): {e:?}", p.x, p.y)))?;
        self.cells.entry(Self::cell(p)).or_default().push(h);
        Ok(h)
    }

    fn constrain_ring(&mut self, ring: &[Point2], solid: &str) -> Result<(), MeshError> {
        let handles = ring.iter().map(|p| self.insert(*p, solid)).collect::<Result<Vec<_>, _>>()?;
        for k in 0..handles.len() {
            let (a, b) = (handles[k], handles[(k + 1) % handles.len()]);
            if a != b {
                self.cdt.add_constraint_and_split(a, b, |v| v);
            }
        }
        Ok(())
    }
}

/// Canonical height values, so equal levels compare exactly.
#[derive(Default)]
struct Levels(Vec<f64>);

impl Levels {
    fn canon(&mut self, z: f64) -> f64 {
        let i = self.0.partition_point(|&l| l < z - LEVEL_TOLERANCE);
        if let Some(&l) = self.0.get(i) {
            if (l - z).abs() <= LEVEL_TOLERANCE {
                return l;
            }
        }
        self.0.insert(i, z);
        z
    }
}

struct MeshBuilder {
    mesh: TriMesh,
    index: HashMap<(usize, u64), u32>,
}

impl MeshBuilder {
    fn vertex(&mut self, v: usize, p: Point2, z: f64) -> u32 {
        let next = self.mesh.vertices.len() as u32;
        *self.index.entry((v, z.to_bits())).or_insert_with(|| {
            self.mesh.vertices.push([p.x, p.y, z]);
            next
        })
    }

    fn free_vertex(&mut self, p: [f64; 3]) -> u32 {
        self.mesh.vertices.push(p);
        (self.mesh.vertices.len() - 1) as u32
    }

    /// Adds the triangle, flipped if needed so its normal has a positive
    /// component along `outward`.
    fn oriented(&mut self, t: [u32; 3], outward: [f64; 3]) {
        let [a, b, c] = t.map(|i| self.mesh.vertices[i as usize]);
        let n = cross(sub(b, a), sub(c, a));
        if dot(n, outward) >= 0.0 {
            self.mesh.triangles.push(t);
        } else {
            self.mesh.triangles.push([t[0], t[2], t[1]]);
        }
    }
}

fn void_height(regions: &[Region], board: &BoardDesign, thickness: f64, p: Point2) -> f64 {
    if !board.outline.contains(p) {
        return thickness;
    }
    let mut best: Option<(u8, f64)> = None;
    for r in regions {
        if p.x < r.bbox.min.x || p.x > r.bbox.max.x || p.y < r.bbox.min.y || p.y > r.bbox.max.y {
            continue;
        }
        if !ring_contains(&r.ring, p) {
            continue;
        }
        best = match best {
            Some((pr, h)) if pr > r.priority || (pr == r.priority && h >= r.height) => Some((pr, h)),
            _ => Some((r.priority, r.height)),
        };
    }
    best.map_or(0.0, |(_, h)| h)
}

/// Subtracts `[lo, hi]` from `[p, q]`.
fn minus_gap(p: f64, q: f64, gap: Option<(f64, f64)>) -> Vec<(f64, f64)> {
    match gap {
        None => vec![(p, q)],
        Some((lo, hi)) => [(p, lo), (hi, q)].into_iter().filter(|(a, b)| b > a).collect(),
    }
}

/// Builds the housing for `board` with the holes of `plan`.
pub fn build_housing(board: &BoardDesign, plan: &BoltPlan, cfg: &HousingConfig) -> Result<TriMesh, MeshError> {
    cfg.validate()?;
    let t = cfg.thickness;
    let cavities = housing_cavities(board, cfg.profile)?;

    let mut regions = Vec::new();
    for cav in &cavities {
        for vr in cav.void_regions() {
            let height = vr.height.resolve(t);
            if height <= 0.0 && vr.priority != crate::cavity::PRIORITY_ISLAND {
                return Err(failure(&vr.owner, "void region has no height"));
            }
            if height >= t - LEVEL_TOLERANCE && vr.height != VoidHeight::Through {
                return Err(failure(&vr.owner, format!("void reaches {height:.3} mm, housing is {t} mm thick")));
            }
            if !board.ring_inside_outline(&vr.ring) {
                return Err(failure(&vr.owner, "cavity extends past the board outline"));
            }
            let bbox = BBox::of(&vr.ring).expect("non-empty ring");
            regions.push((vr.owner, Region { ring: vr.ring, bbox, height, priority: vr.priority }));
        }
    }
    for (i, hole) in plan.holes.iter().enumerate() {
        let solid = format!("hole {i}");
        if hole.diameter < cfg.bolt_diameter - LEVEL_TOLERANCE {
            return Err(failure(&solid, format!("diameter {} mm is below the bolt diameter {} mm", hole.diameter, cfg.bolt_diameter)));
        }
        let ring = hole_ring(hole.center, hole.diameter, cfg.circle_segments);
        if !board.ring_inside_outline(&ring) {
            return Err(failure(&solid, "hole breaks the board outline"));
        }
        let bbox = BBox::of(&ring).expect("non-empty ring");
        for (owner, r) in &regions {
            let near = bbox.expand(WELD_TOLERANCE);
            if near.max.x < r.bbox.min.x || r.bbox.max.x < near.min.x || near.max.y < r.bbox.min.y || r.bbox.max.y < near.min.y {
                continue;
            }
            if rings_touch(&ring, &r.ring) {
                let what = if r.priority == PRIORITY_HOLE { owner.clone() } else { format!("{owner} cavity") };
                return Err(failure(&solid, format!("hole cuts into {what}")));
            }
        }
        regions.push((solid, Region { ring, bbox, height: t, priority: PRIORITY_HOLE }));
    }

    let mut welder = Welder { cdt: Cdt::new(), cells: HashMap::new() };
    for ring in board.outline.rings() {
        welder.constrain_ring(ring, "outline")?;
    }
    for (owner, r) in &regions {
        welder.constrain_ring(&r.ring, owner)?;
    }
    let tabs: Vec<(&str, &TabPrism)> =
        cavities.iter().flat_map(|c| c.tabs().iter().map(move |tp| (c.ref_des.as_str(), tp))).collect();
    // Undirected root edge -> tab.
    let mut root_edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tab_roots = Vec::new();
    for (i, (owner, tab)) in tabs.iter().enumerate() {
        let ends = tab.root.map(|p| welder.find(p));
        let [Some(a), Some(b)] = ends else {
            return Err(failure(*owner, "tab root is missing from the triangulation"));
        };
        if welder.cdt.get_edge_from_neighbors(a, b).is_none() {
            return Err(failure(*owner, "tab root edge was split"));
        }
        root_edges.insert((a.index().min(b.index()), a.index().max(b.index())), i);
        tab_roots.push([a, b]);
    }
    let cdt = &welder.cdt;
    let regions: Vec<Region> = regions.into_iter().map(|(_, r)| r).collect();

    let mut levels = Levels::default();
    let top = levels.canon(t);
    let mut face_height = vec![top; cdt.num_all_faces()];
    for f in cdt.inner_faces() {
        let [a, b, c] = f.positions();
        let centroid = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        face_height[f.fix().index()] = levels.canon(void_height(&regions, board, t, centroid));
    }

    let mut vertex_levels: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); cdt.num_vertices()];
    for e in cdt.directed_edges() {
        let h = face_height[e.face().fix().index()];
        vertex_levels[e.from().fix().index()].insert(h.to_bits());
    }
    for v in &mut vertex_levels {
        if v.iter().any(|&b| f64::from_bits(b) < top) {
            v.insert(top.to_bits());
        }
    }
    let mut tab_levels = Vec::new();
    for ((owner, tab), [a, b]) in tabs.iter().zip(&tab_roots) {
        let lo = levels.canon(tab.root_bottom);
        let hi = levels.canon(tab.root_top);
        if !(0.0 < lo && lo < hi && hi < top) {
            return Err(failure(*owner, "tab root lies outside the housing"));
        }
        for v in [a, b] {
            vertex_levels[v.index()].insert(lo.to_bits());
        }
        tab_levels.push((lo, hi));
    }
    let levels_at = |v: usize, p: f64, q: f64| -> Vec<f64> {
        vertex_levels[v].iter().map(|&b| f64::from_bits(b)).filter(|&z| z >= p && z <= q).collect()
    };

    let mut out = MeshBuilder { mesh: TriMesh::new(), index: HashMap::new() };
    let pos = |h: FixedVertexHandle| {
        let p = cdt.vertex(h).position();
        Point2::new(p.x, p.y)
    };

    for f in cdt.inner_faces() {
        let h = face_height[f.fix().index()];
        if h >= top {
            continue;
        }
        let vs = f.vertices().map(|v| v.fix());
        let upper = vs.map(|v| out.vertex(v.index(), pos(v), top));
        out.mesh.triangles.push(upper);
        let lower = vs.map(|v| out.vertex(v.index(), pos(v), h));
        out.mesh.triangles.push([lower[0], lower[2], lower[1]]);
    }

    for e in cdt.directed_edges() {
        let (a, b) = (e.from().fix(), e.to().fix());
        if a.index() > b.index() {
            continue;
        }
        let left = face_height[e.face().fix().index()];
        let right = face_height[e.rev().face().fix().index()];
        if left == right {
            continue;
        }
        let (pa, pb) = (pos(a), pos(b));
        let normal_left = (pb - pa).perp();
        // Walls face the side with the higher void.
        let n = if left > right { normal_left } else { -normal_left };
        let outward = [n.x, n.y, 0.0];
        let (p, q) = (left.min(right), left.max(right));
        let gap = match root_edges.get(&(a.index(), b.index())) {
            Some(&ti) => {
                let (lo, hi) = tab_levels[ti];
                if !(p <= lo && hi <= q) {
                    return Err(failure(tabs[ti].0, "tab root is not on a wall"));
                }
                Some((lo, hi))
            }
            None => None,
        };
        for (p, q) in minus_gap(p, q, gap) {
            let la = levels_at(a.index(), p, q);
            let lb = levels_at(b.index(), p, q);
            let col_a: Vec<u32> = la.iter().map(|&z| out.vertex(a.index(), pa, z)).collect();
            let col_b: Vec<u32> = lb.iter().map(|&z| out.vertex(b.index(), pb, z)).collect();
            let (mut i, mut j) = (0, 0);
            while i + 1 < la.len() || j + 1 < lb.len() {
                if i + 1 < la.len() && (j + 1 == lb.len() || la[i + 1] <= lb[j + 1]) {
                    out.oriented([col_a[i], col_b[j], col_a[i + 1]], outward);
                    i += 1;
                } else {
                    out.oriented([col_a[i], col_b[j], col_b[j + 1]], outward);
                    j += 1;
                }
            }
        }
    }

    for ((_, tab), [a, b]) in tabs.iter().zip(&tab_roots) {
        let c = tab.corners();
        let idx = [
            out.vertex(a.index(), pos(*a), c[0][2]),
            out.vertex(b.index(), pos(*b), c[1][2]),
            out.vertex(b.index(), pos(*b), c[2][2]),
            out.vertex(a.index(), pos(*a), c[3][2]),
            out.free_vertex(c[4]),
            out.free_vertex(c[5]),
            out.free_vertex(c[6]),
            out.free_vertex(c[7]),
        ];
        let center = c.iter().fold([0.0; 3], |s, v| [s[0] + v[0] / 8.0, s[1] + v[1] / 8.0, s[2] + v[2] / 8.0]);
        // Root face omitted: the slab is welded to the wall there.
        for quad in [[0, 1, 5, 4], [3, 2, 6, 7], [4, 5, 6, 7], [0, 4, 7, 3], [1, 2, 6, 5]] {
            for tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                let pts = tri.map(|k| c[k]);
                let mid = [
                    (pts[0][0] + pts[1][0] + pts[2][0]) / 3.0,
                    (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0,
                    (pts[0][2] + pts[1][2] + pts[2][2]) / 3.0,
                ];
                out.oriented(tri.map(|k| idx[k]), sub(mid, center));
            }
        }
    }

    let mesh = out.mesh;
    let diag = mesh_diagnostics(&mesh);
    if !diag.is_sound() {
        return Err(failure("housing", diag.summary()));
    }
    Ok(mesh)
}
