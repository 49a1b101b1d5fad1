//! Parametric cavity solids per package class.
//!
//! Heights are measured up from the board plane (z = 0). A cavity is a set
//! of footprints with a void height each; the housing is solid above it.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::{BBox, Point2};
use crate::model::{BodyDims, ComponentInstance, PackageClass, PackageSpec, PrismHeight, Rect};

/// Lateral clearance between a body and its pocket wall, per side.
pub const FIT_CLEARANCE: f64 = 0.1;
pub const TAB_SLOPE_DEG: f64 = 30.0;
pub const TAB_WIDTH_RATIO: f64 = 0.6;
pub const TAB_LENGTH_RATIO: f64 = 0.45;
/// Pocket ceiling above the rated body top.
pub const TAB_HEADROOM: f64 = 0.1;
/// The undeformed tab tip sits this far below the rated body top.
pub const TAB_PRELOAD: f64 = 0.1;
/// Side and tip gap of the bay a tab hangs in.
pub const TAB_BAY_GAP: f64 = 0.1;
pub const IC_HEADROOM: f64 = 0.1;
/// Press-bar extension past each end of a pin row.
pub const PRESS_BAR_OVERHANG: f64 = 0.1;
pub const GROOVE_MARGIN: f64 = 1.0;
pub const GROOVE_WIDTH: f64 = 1.0;
pub const GROOVE_WEB: f64 = 0.3;
/// Smallest body that takes tabs (rated 0603).
pub const MIN_TAB_BODY: BodyDims = BodyDims::new(1.55, 0.80, 0.45);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaterialProfile {
    Resin,
    FdmPla,
    CncMdf,
}

impl MaterialProfile {
    pub const ALL: [MaterialProfile; 3] = [MaterialProfile::Resin, MaterialProfile::FdmPla, MaterialProfile::CncMdf];

    pub fn name(self) -> &'static str {
        match self {
            MaterialProfile::Resin => "resin",
            MaterialProfile::FdmPla => "fdm-pla",
            MaterialProfile::CncMdf => "cnc-mdf",
        }
    }

    /// Smallest tab feature the process resolves; `None` when tabs are
    /// unsupported.
    pub fn min_tab_feature(self) -> Option<f64> {
        match self {
            MaterialProfile::Resin => Some(0.2),
            MaterialProfile::FdmPla | MaterialProfile::CncMdf => None,
        }
    }

    pub fn min_wall(self) -> f64 {
        match self {
            MaterialProfile::Resin => 0.3,
            MaterialProfile::FdmPla => 0.8,
            MaterialProfile::CncMdf => 1.0,
        }
    }

    pub fn supports_tabs(self) -> bool {
        self.min_tab_feature().is_some()
    }
}

impl fmt::Display for MaterialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaterialProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaterialProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown profile `{s}` (expected resin, fdm-pla or cnc-mdf)"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CavityError {
    #[error("package {package} ({l} x {w} mm) is smaller than 0603 and cannot hold tabs")]
    PackageTooSmall { package: String, l: f64, w: f64 },
    #[error("package {0} is not a two-terminal package")]
    NotTwoTerminal(String),
    #[error("component {ref_des}: tabs are not printable on profile {profile}")]
    UnsupportedOnProfile { ref_des: String, profile: MaterialProfile },
    #[error("component {0}: custom package has no cavity model")]
    MissingCavityModel(String),
    #[error("component {ref_des}: {reason}")]
    Geometry { ref_des: String, reason: String },
}

/// Flexible tab parameters for a two-terminal body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabSpec {
    /// Slab thickness, perpendicular to the slope.
    pub thickness: f64,
    pub slope_deg: f64,
    /// Extent along the wall.
    pub width: f64,
    /// Length along the slope.
    pub length: f64,
    /// Pocket ceiling above the board plane.
    pub height: f64,
}

impl TabSpec {
    /// Applies the tab formula without the minimum-size check.
    pub fn for_body(body: BodyDims) -> TabSpec {
        TabSpec {
            thickness: body.t,
            slope_deg: TAB_SLOPE_DEG,
            width: TAB_WIDTH_RATIO * body.w,
            length: TAB_LENGTH_RATIO * body.l,
            height: body.t + TAB_HEADROOM,
        }
    }

    /// Horizontal distance from the root face to the tip face.
    pub fn reach(&self) -> f64 {
        self.length * self.slope_deg.to_radians().cos()
    }

    /// Vertical drop from the root to the tip along the slope.
    pub fn drop(&self) -> f64 {
        self.length * self.slope_deg.to_radians().sin()
    }

    /// Vertical extent of the slab's root and tip faces.
    pub fn face_height(&self) -> f64 {
        self.thickness / self.slope_deg.to_radians().cos()
    }
}

pub fn tab_dims(pkg: &PackageSpec) -> Result<TabSpec, CavityError> {
    if pkg.class != PackageClass::TwoTerminal {
        return Err(CavityError::NotTwoTerminal(pkg.name.clone()));
    }
    if tab_package_too_small(pkg.body) {
        return Err(CavityError::PackageTooSmall { package: pkg.name.clone(), l: pkg.body.l, w: pkg.body.w });
    }
    Ok(TabSpec::for_body(pkg.body))
}

pub fn tab_package_too_small(body: BodyDims) -> bool {
    body.l < MIN_TAB_BODY.l - 1e-9 || body.w < MIN_TAB_BODY.w - 1e-9
}

/// Inclined tab slab in board coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TabPrism {
    /// Root edge endpoints on the end wall, counter-clockwise along the
    /// pocket ring.
    pub root: [Point2; 2],
    /// Unit direction from the wall into the pocket.
    pub inward: Point2,
    pub reach: f64,
    pub root_bottom: f64,
    pub root_top: f64,
    pub tip_bottom: f64,
    pub tip_top: f64,
}

impl TabPrism {
    pub fn tip(&self) -> [Point2; 2] {
        [self.root[0] + self.inward * self.reach, self.root[1] + self.inward * self.reach]
    }

    /// The eight slab corners: root then tip, each (a-bottom, b-bottom,
    /// b-top, a-top).
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let [ra, rb] = self.root;
        let [ta, tb] = self.tip();
        [
            [ra.x, ra.y, self.root_bottom],
            [rb.x, rb.y, self.root_bottom],
            [rb.x, rb.y, self.root_top],
            [ra.x, ra.y, self.root_top],
            [ta.x, ta.y, self.tip_bottom],
            [tb.x, tb.y, self.tip_bottom],
            [tb.x, tb.y, self.tip_top],
            [ta.x, ta.y, self.tip_top],
        ]
    }

    /// True when the board-frame point at height `z` lies inside the slab.
    pub fn contains(&self, p: Point2, z: f64) -> bool {
        let along = (p - self.root[0]).dot(self.inward);
        let axis = self.root[1] - self.root[0];
        let across = (p - self.root[0]).dot(axis) / axis.dot(axis);
        if !(0.0..=self.reach).contains(&along) || !(0.0..=1.0).contains(&across) {
            return false;
        }
        let f = along / self.reach;
        let lo = self.root_bottom + f * (self.tip_bottom - self.root_bottom);
        let hi = self.root_top + f * (self.tip_top - self.root_top);
        (lo..=hi).contains(&z)
    }
}

/// Footprint with a void from the board plane up to `height`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoidPrism {
    pub footprint: Vec<Point2>,
    pub height: PrismHeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressBar {
    pub footprint: Vec<Point2>,
    /// Bar underside, resting on the pin tops.
    pub bottom: f64,
    /// The pin-row rectangle this bar covers, board frame.
    pub covers: Vec<Point2>,
}

/// Channel carved from the board side around an IC, leaving a thin web at
/// the housing top.
#[derive(Debug, Clone, PartialEq)]
pub struct GrooveRing {
    pub inner: Vec<Point2>,
    pub outer: Vec<Point2>,
    pub width: f64,
    pub web: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CavityKind {
    TwoTerminal { pocket: Vec<Point2>, ceiling: f64, tab: TabSpec, bays: Vec<VoidPrism>, tabs: Vec<TabPrism> },
    PressBar { pocket: Vec<Point2>, ceiling: f64, bars: Vec<PressBar> },
    NegativePocket { pocket: Vec<Point2>, depth: f64, raised_pad_required: bool },
    Custom { prisms: Vec<VoidPrism> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavitySolid {
    pub ref_des: String,
    pub kind: CavityKind,
    pub groove: Option<GrooveRing>,
}

/// Region of the housing's 2.5-D height field: inside `ring`, the void
/// reaches `height`. Higher `priority` wins where regions nest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoidRegion {
    pub ring: Vec<Point2>,
    pub height: VoidHeight,
    pub priority: u8,
    pub owner: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoidHeight {
    At(f64),
    /// Through the housing.
    Through,
    /// Housing thickness minus the given web.
    BelowTop(f64),
}

impl VoidHeight {
    pub fn resolve(self, housing: f64) -> f64 {
        match self {
            VoidHeight::At(h) => h,
            VoidHeight::Through => housing,
            VoidHeight::BelowTop(web) => housing - web,
        }
    }
}

pub const PRIORITY_GROOVE: u8 = 0;
pub const PRIORITY_ISLAND: u8 = 1;
pub const PRIORITY_POCKET: u8 = 2;
pub const PRIORITY_DETAIL: u8 = 3;
pub const PRIORITY_HOLE: u8 = 4;

impl From<PrismHeight> for VoidHeight {
    fn from(h: PrismHeight) -> Self {
        match h {
            PrismHeight::Depth(d) => VoidHeight::At(d),
            PrismHeight::Through => VoidHeight::Through,
        }
    }
}

impl CavitySolid {
    /// Outer footprint rings: where material is removed at the board plane.
    pub fn footprints(&self) -> Vec<&[Point2]> {
        match &self.kind {
            CavityKind::TwoTerminal { pocket, .. }
            | CavityKind::PressBar { pocket, .. }
            | CavityKind::NegativePocket { pocket, .. } => vec![pocket.as_slice()],
            CavityKind::Custom { prisms } => prisms.iter().map(|p| p.footprint.as_slice()).collect(),
        }
    }

    /// Rings that bolt holes must keep clear of.
    pub fn keepouts(&self) -> Vec<&[Point2]> {
        let mut out = self.footprints();
        if let Some(g) = &self.groove {
            out.push(&g.outer);
            out.push(&g.inner);
        }
        out
    }

    /// The ring that bounds everything this cavity touches.
    pub fn outer_boundary(&self) -> Vec<Point2> {
        if let Some(g) = &self.groove {
            return g.outer.clone();
        }
        let pts: Vec<Point2> = self.footprints().into_iter().flatten().copied().collect();
        BBox::of(&pts).map(|b| b.ring()).unwrap_or_default()
    }

    pub fn tabs(&self) -> &[TabPrism] {
        match &self.kind {
            CavityKind::TwoTerminal { tabs, .. } => tabs,
            _ => &[],
        }
    }

    /// Highest void height of any pocket, bar or bay, excluding grooves and
    /// through openings.
    pub fn max_void_height(&self) -> Option<f64> {
        match &self.kind {
            CavityKind::TwoTerminal { ceiling, bays, .. } => bays
                .iter()
                .filter_map(|b| match b.height {
                    PrismHeight::Depth(d) => Some(d),
                    PrismHeight::Through => None,
                })
                .chain([*ceiling])
                .reduce(f64::max),
            CavityKind::PressBar { ceiling, .. } => Some(*ceiling),
            CavityKind::NegativePocket { depth, .. } => Some(*depth),
            CavityKind::Custom { prisms } => prisms
                .iter()
                .filter_map(|p| match p.height {
                    PrismHeight::Depth(d) => Some(d),
                    PrismHeight::Through => None,
                })
                .reduce(f64::max),
        }
    }

    /// Height-field regions for the mesh builder.
    pub fn void_regions(&self) -> Vec<VoidRegion> {
        let owner = &self.ref_des;
        let region = |ring: &[Point2], height: VoidHeight, priority: u8| VoidRegion {
            ring: ring.to_vec(),
            height,
            priority,
            owner: owner.clone(),
        };
        let mut out = Vec::new();
        if let Some(g) = &self.groove {
            out.push(region(&g.outer, VoidHeight::BelowTop(g.web), PRIORITY_GROOVE));
            out.push(region(&g.inner, VoidHeight::At(0.0), PRIORITY_ISLAND));
        }
        match &self.kind {
            CavityKind::TwoTerminal { pocket, ceiling, bays, .. } => {
                out.push(region(pocket, VoidHeight::At(*ceiling), PRIORITY_POCKET));
                for b in bays {
                    out.push(region(&b.footprint, b.height.into(), PRIORITY_DETAIL));
                }
            }
            CavityKind::PressBar { pocket, ceiling, bars } => {
                out.push(region(pocket, VoidHeight::At(*ceiling), PRIORITY_POCKET));
                for b in bars {
                    out.push(region(&b.footprint, VoidHeight::At(b.bottom), PRIORITY_DETAIL));
                }
            }
            CavityKind::NegativePocket { pocket, depth, .. } => {
                out.push(region(pocket, VoidHeight::At(*depth), PRIORITY_POCKET));
            }
            CavityKind::Custom { prisms } => {
                for p in prisms {
                    out.push(region(&p.footprint, p.height.into(), PRIORITY_POCKET));
                }
            }
        }
        out
    }
}

fn rect_ring(b: BBox) -> Vec<Point2> {
    b.ring()
}

fn geometry_error(comp: &ComponentInstance, reason: impl Into<String>) -> CavityError {
    CavityError::Geometry { ref_des: comp.ref_des.clone(), reason: reason.into() }
}

/// Cavity for `comp` under `profile`.
pub fn cavity_for(comp: &ComponentInstance, profile: MaterialProfile) -> Result<CavitySolid, CavityError> {
    if comp.package.class == PackageClass::TwoTerminal && !profile.supports_tabs() {
        return Err(CavityError::UnsupportedOnProfile { ref_des: comp.ref_des.clone(), profile });
    }
    cavity_geometry(comp)
}

/// Cavity geometry regardless of profile. Two-terminal packages below the
/// tab minimum still get tabs from the unchecked formula so the design can
/// be inspected; rule checks flag them.
pub fn cavity_geometry(comp: &ComponentInstance) -> Result<CavitySolid, CavityError> {
    let pkg = &comp.package;
    let (kind, groove) = match &pkg.class {
        PackageClass::TwoTerminal => (two_terminal(comp)?, None),
        PackageClass::IcExtendedPin { pin_rows, pin_height } => {
            let ext = pkg.extent();
            let pocket_box = ext.expand(FIT_CLEARANCE);
            let mut bars = Vec::new();
            for row in pin_rows {
                let mut bar = *row;
                if row.width >= row.height {
                    bar.width += 2.0 * PRESS_BAR_OVERHANG;
                } else {
                    bar.height += 2.0 * PRESS_BAR_OVERHANG;
                }
                let b = bar.bbox();
                let clipped = BBox {
                    min: Point2::new(b.min.x.max(ext.min.x), b.min.y.max(ext.min.y)),
                    max: Point2::new(b.max.x.min(ext.max.x), b.max.y.min(ext.max.y)),
                };
                bars.push(PressBar {
                    footprint: comp.ring_to_board(&rect_ring(clipped)),
                    bottom: *pin_height,
                    covers: comp.ring_to_board(&row.corners()),
                });
            }
            let kind = CavityKind::PressBar {
                pocket: comp.ring_to_board(&rect_ring(pocket_box)),
                ceiling: pkg.body.t + IC_HEADROOM,
                bars,
            };
            (kind, Some(groove_for(comp, pocket_box)))
        }
        PackageClass::IcBottomPad => {
            let pocket_box = pkg.extent().expand(FIT_CLEARANCE);
            let kind = CavityKind::NegativePocket {
                pocket: comp.ring_to_board(&rect_ring(pocket_box)),
                depth: pkg.body.t,
                raised_pad_required: pkg.raised_pad_required,
            };
            (kind, Some(groove_for(comp, pocket_box)))
        }
        PackageClass::Custom { cavity } => {
            if cavity.is_empty() {
                return Err(CavityError::MissingCavityModel(comp.ref_des.clone()));
            }
            let prisms = cavity
                .iter()
                .map(|p| VoidPrism { footprint: comp.ring_to_board(&p.footprint), height: p.height })
                .collect();
            (CavityKind::Custom { prisms }, None)
        }
    };
    Ok(CavitySolid { ref_des: comp.ref_des.clone(), kind, groove })
}

fn groove_for(comp: &ComponentInstance, pocket: BBox) -> GrooveRing {
    let r = crate::bolts::DEFAULT_HOLE_DIAMETER / 2.0;
    let inner = comp
        .package
        .bolt_offsets
        .iter()
        .fold(pocket, |acc, b| acc.union(Rect::new(b.x, b.y, 2.0 * r, 2.0 * r).bbox()))
        .expand(GROOVE_MARGIN);
    let outer = inner.expand(GROOVE_WIDTH);
    GrooveRing {
        inner: comp.ring_to_board(&inner.ring()),
        outer: comp.ring_to_board(&outer.ring()),
        width: GROOVE_WIDTH,
        web: GROOVE_WEB,
    }
}

fn two_terminal(comp: &ComponentInstance) -> Result<CavityKind, CavityError> {
    let body = comp.package.body;
    let tab = TabSpec::for_body(body);
    let hx = body.l / 2.0 + FIT_CLEARANCE;
    let hy = body.w / 2.0 + FIT_CLEARANCE;
    let half_w = tab.width / 2.0;
    let bay_half = half_w + TAB_BAY_GAP;
    let reach = tab.reach();
    let bay_depth = reach + TAB_BAY_GAP;
    if bay_half >= hy {
        return Err(geometry_error(comp, "tab bay is wider than the pocket"));
    }
    if 2.0 * bay_depth >= 2.0 * hx {
        return Err(geometry_error(comp, "opposing tab bays overlap"));
    }
    let tip_bottom = body.t - TAB_PRELOAD;
    if tip_bottom <= 0.0 {
        return Err(geometry_error(comp, "body too thin for a preloaded tab"));
    }
    let root_bottom = tip_bottom + tab.drop();
    let root_top = root_bottom + tab.face_height();
    let tip_top = root_top - tab.drop();

    let pocket_local = vec![
        Point2::new(-hx, -hy),
        Point2::new(hx, -hy),
        Point2::new(hx, -bay_half),
        Point2::new(hx, -half_w),
        Point2::new(hx, half_w),
        Point2::new(hx, bay_half),
        Point2::new(hx, hy),
        Point2::new(-hx, hy),
        Point2::new(-hx, bay_half),
        Point2::new(-hx, half_w),
        Point2::new(-hx, -half_w),
        Point2::new(-hx, -bay_half),
    ];
    let mut bays = Vec::new();
    let mut tabs = Vec::new();
    for sign in [1.0, -1.0] {
        let x = sign * hx;
        let xi = sign * (hx - bay_depth);
        let ys = [-bay_half, -half_w, half_w, bay_half];
        // Counter-clockwise for both signs.
        let mut ring: Vec<Point2> = ys.iter().map(|y| Point2::new(x, sign * y)).collect();
        ring.push(Point2::new(xi, sign * bay_half));
        ring.push(Point2::new(xi, -sign * bay_half));
        bays.push(VoidPrism { footprint: comp.ring_to_board(&ring), height: PrismHeight::Depth(root_top) });
        let root = [comp.to_board(Point2::new(x, -sign * half_w)), comp.to_board(Point2::new(x, sign * half_w))];
        tabs.push(TabPrism {
            root,
            inward: comp.placement.rotate(Point2::new(-sign, 0.0)),
            reach,
            root_bottom,
            root_top,
            tip_bottom,
            tip_top,
        });
    }
    Ok(CavityKind::TwoTerminal {
        pocket: comp.ring_to_board(&pocket_local),
        ceiling: tab.height,
        tab,
        bays,
        tabs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{signed_area, Placement};
    use crate::ingest::default_library;
    use std::collections::BTreeMap;

    fn inst(pkg: &str, rot: f64) -> ComponentInstance {
        ComponentInstance {
            ref_des: "U1".into(),
            package: default_library().get(pkg).unwrap().clone(),
            placement: Placement::new(10.0, 10.0, rot),
            part_number: "X".into(),
            nets_by_pad: BTreeMap::new(),
        }
    }

    #[test]
    fn tab_formula_examples() {
        let lib = default_library();
        let t = tab_dims(lib.get("0603").unwrap()).unwrap();
        assert!((t.length - 0.6975).abs() < 1e-12);
        assert!((t.width - 0.48).abs() < 1e-12);
        assert!((t.thickness - 0.45).abs() < 1e-12);
        assert!((t.height - 0.55).abs() < 1e-12);
        assert_eq!(t.slope_deg, 30.0);
        let t = tab_dims(lib.get("0805").unwrap()).unwrap();
        assert!((t.thickness - 0.6).abs() < 1e-12 && (t.width - 0.75).abs() < 1e-12);
        assert!((t.length - 0.9).abs() < 1e-12 && (t.height - 0.7).abs() < 1e-12);
        let mut small = lib.get("0603").unwrap().clone();
        small.body = BodyDims::new(1.0, 0.5, 0.35);
        assert!(matches!(tab_dims(&small), Err(CavityError::PackageTooSmall { .. })));
    }

    #[test]
    fn tab_tip_preloads_the_body() {
        for pkg in ["0603", "0805", "1206"] {
            let c = cavity_for(&inst(pkg, 0.0), MaterialProfile::Resin).unwrap();
            let t = c.package_t();
            for tab in c.tabs() {
                assert!((tab.tip_bottom - (t - 0.1)).abs() < 1e-12);
                assert!(tab.tip_bottom <= t);
                assert!(tab.root_top > tab.root_bottom);
            }
        }
    }

    #[test]
    fn class_examples() {
        let c = cavity_for(&inst("SOIC-14", 0.0), MaterialProfile::Resin).unwrap();
        match &c.kind {
            CavityKind::PressBar { bars, .. } => assert_eq!(bars.len(), 2),
            k => panic!("unexpected {k:?}"),
        }
        assert_eq!(c.groove.as_ref().unwrap().web, 0.3);
        let c = cavity_for(&inst("QFN-20", 0.0), MaterialProfile::Resin).unwrap();
        assert!(matches!(c.kind, CavityKind::NegativePocket { raised_pad_required: true, .. }));
        assert!(matches!(
            cavity_for(&inst("0805", 0.0), MaterialProfile::FdmPla),
            Err(CavityError::UnsupportedOnProfile { .. })
        ));
    }

    #[test]
    fn rings_are_counter_clockwise() {
        for rot in [0.0, 90.0, 37.0] {
            let c = cavity_for(&inst("0805", rot), MaterialProfile::Resin).unwrap();
            for r in c.void_regions() {
                assert!(signed_area(&r.ring) > 0.0, "{rot}");
            }
        }
    }

    #[test]
    fn press_bars_cover_pin_rows() {
        for pkg in ["SOIC-8", "SOIC-14", "TSSOP-14", "TQFP-32"] {
            let c = cavity_for(&inst(pkg, 90.0), MaterialProfile::Resin).unwrap();
            let CavityKind::PressBar { bars, .. } = &c.kind else { panic!() };
            for bar in bars {
                for p in &bar.covers {
                    assert!(crate::geom::ring_contains(&bar.footprint, *p), "{pkg}");
                }
            }
        }
    }

    impl CavitySolid {
        fn package_t(&self) -> f64 {
            match &self.kind {
                CavityKind::TwoTerminal { tab, .. } => tab.thickness,
                _ => unreachable!(),
            }
        }
    }
}
