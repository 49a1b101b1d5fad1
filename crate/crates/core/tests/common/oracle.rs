//! Constructive reference for the housing solid: slab minus void prisms
//! plus tab slabs, evaluated point by point. Shared with the CLI
//! acceptance suite.

use housingforge::bolts::BoltPlan;
use housingforge::cavity::{cavity_for, CavityKind, CavitySolid, TabPrism};
use housingforge::geom::{ring_contains, Point2};
use housingforge::housing::HousingConfig;
use housingforge::mesh::{point_in_mesh, TriMesh};
use housingforge::model::{BoardDesign, PrismHeight};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Void prism from the board plane up to `top`.
struct Prism {
    ring: Vec<Point2>,
    top: f64,
}

pub struct Reference {
    outline: housingforge::geom::Polygon2,
    thickness: f64,
    voids: Vec<Prism>,
    /// (outer, inner, top): channel between two rings.
    channels: Vec<(Vec<Point2>, Vec<Point2>, f64)>,
    /// Solid kept inside voids: (ring, bottom).
    bars: Vec<(Vec<Point2>, f64)>,
    holes: Vec<(Point2, f64)>,
    tabs: Vec<TabPrism>,
    /// Cavity rings, for probe placement.
    pub pockets: Vec<Vec<Point2>>,
}

fn prism_top(h: PrismHeight, t: f64) -> f64 {
    match h {
        PrismHeight::Depth(d) => d,
        PrismHeight::Through => t,
    }
}

impl Reference {
    pub fn new(board: &BoardDesign, plan: &BoltPlan, cfg: &HousingConfig) -> Reference {
        let t = cfg.thickness;
        let mut r = Reference {
            outline: board.outline.clone(),
            thickness: t,
            voids: vec![],
            channels: vec![],
            bars: vec![],
            holes: plan.holes.iter().map(|h| (h.center, h.diameter / 2.0)).collect(),
            tabs: vec![],
            pockets: vec![],
        };
        for c in &board.components {
            let cav: CavitySolid = cavity_for(c, cfg.profile).unwrap();
            if let Some(g) = &cav.groove {
                r.channels.push((g.outer.clone(), g.inner.clone(), t - g.web));
            }
            match cav.kind {
                CavityKind::TwoTerminal { pocket, ceiling, bays, tabs, .. } => {
                    r.pockets.push(pocket.clone());
                    r.voids.push(Prism { ring: pocket, top: ceiling });
                    for b in bays {
                        r.voids.push(Prism { ring: b.footprint, top: prism_top(b.height, t) });
                    }
                    r.tabs.extend(tabs);
                }
                CavityKind::PressBar { pocket, ceiling, bars } => {
                    r.pockets.push(pocket.clone());
                    r.voids.push(Prism { ring: pocket, top: ceiling });
                    r.bars.extend(bars.into_iter().map(|b| (b.footprint, b.bottom)));
                }
                CavityKind::NegativePocket { pocket, depth, .. } => {
                    r.pockets.push(pocket.clone());
                    r.voids.push(Prism { ring: pocket, top: depth });
                }
                CavityKind::Custom { prisms } => {
                    for p in prisms {
                        r.pockets.push(p.footprint.clone());
                        r.voids.push(Prism { ring: p.footprint, top: prism_top(p.height, t) });
                    }
                }
            }
        }
        r
    }

    pub fn solid(&self, p: [f64; 3]) -> bool {
        let xy = Point2::new(p[0], p[1]);
        if self.tabs.iter().any(|tab| tab.contains(xy, p[2])) {
            return true;
        }
        if p[2] <= 0.0 || p[2] >= self.thickness || !self.outline.contains(xy) {
            return false;
        }
        if self.holes.iter().any(|(c, r)| c.dist(xy) < *r) {
            return false;
        }
        if self.bars.iter().any(|(ring, bottom)| p[2] > *bottom && ring_contains(ring, xy)) {
            return true;
        }
        if self.voids.iter().any(|v| p[2] < v.top && ring_contains(&v.ring, xy)) {
            return false;
        }
        !self
            .channels
            .iter()
            .any(|(outer, inner, top)| p[2] < *top && ring_contains(outer, xy) && !ring_contains(inner, xy))
    }

    /// `Some(solid)` when every point within `eps` agrees, so faceting and
    /// boundary contact cannot flip the answer.
    pub fn stable(&self, p: [f64; 3], eps: f64) -> Option<bool> {
        let s = self.solid(p);
        for axis in 0..3 {
            for d in [-eps, eps] {
                let mut q = p;
                q[axis] += d;
                if self.solid(q) != s {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// Probe points: uniform over the slab plus targeted points at pocket
    /// centers and bolt axes.
    pub fn probes(&self, n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = StdRng::seed_from_u64(seed);
        let b = self.outline.bbox();
        let t = self.thickness;
        let mut out = Vec::with_capacity(n);
        for (c, _) in &self.holes {
            out.push([c.x, c.y, t / 2.0]);
        }
        for ring in &self.pockets {
            let c = ring.iter().fold(Point2::new(0.0, 0.0), |s, p| s + *p) * (1.0 / ring.len() as f64);
            out.push([c.x, c.y, 0.05]);
        }
        for tab in &self.tabs {
            let [a, b] = tab.root;
            let mid = (a + b) * 0.5 + tab.inward * (tab.reach / 2.0);
            let slab = (tab.root_bottom + tab.tip_bottom + tab.root_top + tab.tip_top) / 4.0;
            out.push([mid.x, mid.y, slab]);
            out.push([mid.x, mid.y, tab.tip_bottom / 2.0]);
        }
        while out.len() < n {
            let k = out.len() % 3;
            let p = match k {
                // Near a feature: random pocket or hole neighbourhood.
                0 if !self.pockets.is_empty() => {
                    let ring = &self.pockets[rng.random_range(0..self.pockets.len())];
                    let pb = housingforge::geom::BBox::of(ring).unwrap().expand(1.5);
                    [rng.random_range(pb.min.x..pb.max.x), rng.random_range(pb.min.y..pb.max.y), rng.random_range(0.0..t)]
                }
                1 if !self.holes.is_empty() => {
                    let (c, r) = self.holes[rng.random_range(0..self.holes.len())];
                    [
                        c.x + rng.random_range(-2.0 * r..2.0 * r),
                        c.y + rng.random_range(-2.0 * r..2.0 * r),
                        rng.random_range(0.0..t),
                    ]
                }
                _ => [
                    rng.random_range(b.min.x - 1.0..b.max.x + 1.0),
                    rng.random_range(b.min.y - 1.0..b.max.y + 1.0),
                    rng.random_range(-0.5..t + 0.5),
                ],
            };
            out.push(p);
        }
        out
    }
}

pub struct SampleReport {
    pub checked: usize,
    pub skipped: usize,
    pub mismatches: Vec<([f64; 3], bool)>,
}

/// Compares ray parity on `mesh` against the reference at `n` probes.
/// Points within the faceting tolerance of a boundary are skipped.
pub fn sample(board: &BoardDesign, plan: &BoltPlan, cfg: &HousingConfig, mesh: &TriMesh, n: usize, seed: u64) -> SampleReport {
    let reference = Reference::new(board, plan, cfg);
    // Chord sag of the hole polygons plus margin.
    let sag = plan.holes.iter().map(|h| h.diameter / 2.0).fold(0.0, f64::max)
        * (1.0 - (std::f64::consts::PI / cfg.circle_segments as f64).cos());
    let eps = sag + 2e-3;
    let mut report = SampleReport { checked: 0, skipped: 0, mismatches: vec![] };
    for p in reference.probes(n, seed) {
        match reference.stable(p, eps) {
            None => report.skipped += 1,
            Some(want) => {
                report.checked += 1;
                if point_in_mesh(mesh, p) != want {
                    report.mismatches.push((p, want));
                }
            }
        }
    }
    report
}
