//! Board and package domain types.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geom::{
    ring_contains, rings_touch, BBox, Placement, Point2, Polygon2, EPS,
};

/// Axis-aligned rectangle given by center and size, usually in a package's
/// local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub center: Point2,
    /// Extent along x.
    pub width: f64,
    /// Extent along y.
    pub height: f64,
}

impl Rect {
    pub const fn new(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Self { center: Point2::new(cx, cy), width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            min: Point2::new(self.center.x - self.width / 2.0, self.center.y - self.height / 2.0),
            max: Point2::new(self.center.x + self.width / 2.0, self.center.y + self.height / 2.0),
        }
    }

    pub fn corners(&self) -> Vec<Point2> {
        self.bbox().ring()
    }

    pub fn from_bbox(b: BBox) -> Rect {
        Rect {
            center: Point2::new((b.min.x + b.max.x) / 2.0, (b.min.y + b.max.y) / 2.0),
            width: b.width(),
            height: b.height(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pad {
    pub name: String,
    pub rect: Rect,
}

/// Rated body dimensions: length along local x, width along local y,
/// thickness along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyDims {
    pub l: f64,
    pub w: f64,
    pub t: f64,
}

impl BodyDims {
    pub const fn new(l: f64, w: f64, t: f64) -> Self {
        Self { l, w, t }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.l, self.w)
    }
}

/// Void height of one custom cavity prism, measured up from the board plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrismHeight {
    Depth(f64),
    /// Opening through the full housing thickness.
    Through,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityPrism {
    /// Package-local footprint ring.
    pub footprint: Vec<Point2>,
    pub height: PrismHeight,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PackageClass {
    /// Chip resistors, capacitors, LEDs: held by a pair of flexible tabs.
    TwoTerminal,
    /// Gull-wing or J-lead ICs whose pins leave the body (SOIC, TSSOP, TQFP).
    IcExtendedPin {
        /// Package-local rectangles covering each row of pin feet.
        pin_rows: Vec<Rect>,
        /// Height of the pin tops above the board at the contact feet.
        pin_height: f64,
    },
    /// Contacts only on the underside (QFN, BGA).
    IcBottomPad,
    /// Anything else, with an explicit cavity model.
    Custom { cavity: Vec<CavityPrism> },
}

impl PackageClass {
    pub fn is_ic(&self) -> bool {
        matches!(self, PackageClass::IcExtendedPin { .. } | PackageClass::IcBottomPad)
    }

    pub fn label(&self) -> &'static str {
        match self {
            PackageClass::TwoTerminal => "two-terminal",
            PackageClass::IcExtendedPin { .. } => "ic-extended-pin",
            PackageClass::IcBottomPad => "ic-bottom-pad",
            PackageClass::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackageSpec {
    pub name: String,
    pub class: PackageClass,
    pub body: BodyDims,
    /// Contact pads in the package-local frame.
    pub pins: Vec<Pad>,
    /// Pre-allocated bolt hole centers in the package-local frame.
    pub bolt_offsets: Vec<Point2>,
    pub raised_pad_required: bool,
}

impl PackageSpec {
    /// Checks the structural invariants; returns a human-readable reason.
    pub fn validate(&self) -> Result<(), String> {
        let BodyDims { l, w, t } = self.body;
        for (sym, v) in [("l", l), ("w", w), ("t", t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("body {sym} must be positive, got {v}"));
            }
        }
        if self.class.is_ic() == self.bolt_offsets.is_empty() {
            return Err(if self.class.is_ic() {
                "IC packages need at least one bolt offset".to_string()
            } else {
                "only IC packages may carry bolt offsets".to_string()
            });
        }
        if self.raised_pad_required && self.class != PackageClass::IcBottomPad {
            return Err("raised pads only apply to bottom-pad ICs".to_string());
        }
        let mut names = BTreeSet::new();
        for pad in &self.pins {
            if !(pad.rect.width > 0.0 && pad.rect.height > 0.0) {
                return Err(format!("pad {} has a non-positive size", pad.name));
            }
            if !names.insert(pad.name.as_str()) {
                return Err(format!("duplicate pad name {}", pad.name));
            }
        }
        match &self.class {
            PackageClass::IcExtendedPin { pin_rows, pin_height } => {
                if pin_rows.is_empty() {
                    return Err("extended-pin ICs need at least one pin row".to_string());
                }
                if !(*pin_height > 0.0 && *pin_height < t) {
                    return Err(format!("pin height {pin_height} must lie in (0, t)"));
                }
                if pin_rows.iter().any(|r| !(r.width > 0.0 && r.height > 0.0)) {
                    return Err("pin row with non-positive size".to_string());
                }
            }
            PackageClass::Custom { cavity } => {
                for (i, prism) in cavity.iter().enumerate() {
                    if prism.footprint.len() < 3 {
                        return Err(format!("cavity prism {i} has fewer than 3 vertices"));
                    }
                    if let PrismHeight::Depth(d) = prism.height {
                        if !(d.is_finite() && d > 0.0) {
                            return Err(format!("cavity prism {i} depth must be positive"));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Smallest center-to-center distance between two pins.
    pub fn pin_pitch(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.pins.iter().enumerate() {
            for b in &self.pins[i + 1..] {
                let d = a.rect.center.dist(b.rect.center);
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
        best
    }

    pub fn min_pad_area(&self) -> Option<f64> {
        self.pins.iter().map(|p| p.rect.area()).reduce(f64::min)
    }

    /// Bounding box of body and pins in the package frame.
    pub fn extent(&self) -> BBox {
        self.pins
            .iter()
            .fold(self.body.rect().bbox(), |acc, p| acc.union(p.rect.bbox()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInstance {
    pub ref_des: String,
    pub package: PackageSpec,
    pub placement: Placement,
    pub part_number: String,
    pub nets_by_pad: BTreeMap<String, String>,
}

impl ComponentInstance {
    pub fn to_board(&self, local: Point2) -> Point2 {
        self.placement.apply(local)
    }

    pub fn ring_to_board(&self, local: &[Point2]) -> Vec<Point2> {
        local.iter().map(|p| self.placement.apply(*p)).collect()
    }

    pub fn body_ring(&self) -> Vec<Point2> {
        self.ring_to_board(&self.package.body.rect().corners())
    }

    pub fn pad_rings(&self) -> Vec<(String, Vec<Point2>)> {
        self.package
            .pins
            .iter()
            .map(|p| (p.name.clone(), self.ring_to_board(&p.rect.corners())))
            .collect()
    }

    /// Unit vector of the package's local x (length) axis in board frame.
    pub fn length_axis(&self) -> Point2 {
        self.placement.rotate(Point2::new(1.0, 0.0))
    }
}

/// Copper pad on the board that no component owns (test points, contacts).
#[derive(Debug, Clone, PartialEq)]
pub struct FreePad {
    pub name: String,
    /// Board-frame rectangle.
    pub rect: Rect,
    pub net: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("board thickness must be positive")]
    InvalidThickness,
    #[error("duplicate reference designator {0}")]
    DuplicateRefDes(String),
    #[error("component {0} is not inside the board outline")]
    ComponentOutsideOutline(String),
    #[error("package {name} is invalid: {reason}")]
    InvalidPackage { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoardDesign {
    pub name: String,
    pub outline: Polygon2,
    /// FR-4 thickness of the baseboard.
    pub thickness: f64,
    pub components: Vec<ComponentInstance>,
    pub free_pads: Vec<FreePad>,
}

impl BoardDesign {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(ModelError::InvalidThickness);
        }
        let mut seen = BTreeSet::new();
        for c in &self.components {
            if !seen.insert(c.ref_des.as_str()) {
                return Err(ModelError::DuplicateRefDes(c.ref_des.clone()));
            }
            c.package.validate().map_err(|reason| ModelError::InvalidPackage {
                name: c.package.name.clone(),
                reason,
            })?;
            let mut rings = vec![c.body_ring()];
            rings.extend(c.pad_rings().into_iter().map(|(_, r)| r));
            for ring in &rings {
                if !self.ring_inside_outline(ring) {
                    return Err(ModelError::ComponentOutsideOutline(c.ref_des.clone()));
                }
            }
        }
        Ok(())
    }

    /// True when the filled ring lies inside the outline and outside every
    /// cutout, boundary contact excluded.
    pub fn ring_inside_outline(&self, ring: &[Point2]) -> bool {
        let outer = self.outline.outer();
        if !ring.iter().all(|p| ring_contains(outer, *p)) || rings_touch(outer, ring) {
            return false;
        }
        for hole in self.outline.holes() {
            if rings_touch(hole, ring)
                || ring.iter().any(|p| ring_contains(hole, *p))
                || hole.iter().any(|p| ring_contains(ring, *p))
            {
                return false;
            }
        }
        true
    }

    pub fn component(&self, ref_des: &str) -> Option<&ComponentInstance> {
        self.components.iter().find(|c| c.ref_des == ref_des)
    }

    /// Every net named by a component pad or free pad.
    pub fn nets(&self) -> BTreeSet<String> {
        let mut nets: BTreeSet<String> = self
            .components
            .iter()
            .flat_map(|c| c.nets_by_pad.values().cloned())
            .collect();
        nets.extend(self.free_pads.iter().filter_map(|p| p.net.clone()));
        nets
    }

    /// Minimum clearance from `p` to the outline boundary (any ring).
    pub fn edge_clearance(&self, p: Point2) -> f64 {
        self.outline.boundary_distance(p)
    }

    pub fn point_on_board(&self, p: Point2) -> bool {
        self.outline.contains(p) && self.outline.boundary_distance(p) > EPS
    }
}
