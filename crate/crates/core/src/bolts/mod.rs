//! Bolt hole planning.
//!
//! A two-terminal component is held when a certificate exists among the
//! plan's holes:
//! * pair: two holes at most `D` apart whose segment passes within the
//!   coverage radius of the component center;
//! * span: two hole pairs (stations) whose corresponding holes are at most
//!   `D` apart, with the center within the coverage radius of their hull.
//!
//! Planning clusters parts into strips (same axis, same lateral line),
//! sweeps stations greedily along each strip, then drops redundant holes.

pub mod calibration;
pub mod planfile;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cavity::{cavity_geometry, CavityError};
use crate::geom::{hull_distance, point_segment_distance, ring_boundary_distance, ring_contains, ring_distance, rotation_basis, Point2};
use crate::model::{BoardDesign, ComponentInstance, PackageClass};

pub use calibration::{max_span, parse_calibration, serialize_calibration, CalibrationError, SpanCalibration, SpanError};
pub use planfile::{parse_plan, serialize_plan};

pub const DEFAULT_HOLE_DIAMETER: f64 = 1.0;
pub const MIN_WALL: f64 = 0.8;
pub const COVERAGE_RADIUS: f64 = 1.5;
/// Lateral distance within which parts share a strip.
const STRIP_TOLERANCE: f64 = 0.5;
const SCAN_STEP: f64 = 0.05;
const STATION_MARGIN: f64 = 0.01;
const TOL: f64 = 1e-9;
const IC_MATCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub hole_diameter: f64,
    pub min_wall: f64,
    pub coverage_radius: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self { hole_diameter: DEFAULT_HOLE_DIAMETER, min_wall: MIN_WALL, coverage_radius: COVERAGE_RADIUS }
    }
}

impl PlanConfig {
    pub fn min_spacing(&self) -> f64 {
        self.hole_diameter + self.min_wall
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum HoleOrigin {
    IcPreallocated(String),
    /// Half of a station; both holes of a station share the index.
    Shared { station: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedHole {
    pub center: Point2,
    pub diameter: f64,
    pub origin: HoleOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    Pair([usize; 2]),
    /// `[a1, a2, b1, b2]`: station a, station b; `a1`-`b1` and `a2`-`b2`
    /// are the bridged spans.
    Span([usize; 4]),
}

impl Certificate {
    pub fn holes(&self) -> &[usize] {
        match self {
            Certificate::Pair(h) => h,
            Certificate::Span(h) => h,
        }
    }

    /// Bolt-to-bolt distances the certificate relies on. `None` when an
    /// index is out of range.
    pub fn spans(&self, holes: &[PlannedHole]) -> Option<Vec<f64>> {
        let at = |i: usize| holes.get(i).map(|h| h.center);
        match *self {
            Certificate::Pair([a, b]) => Some(vec![at(a)?.dist(at(b)?)]),
            Certificate::Span([a1, a2, b1, b2]) => Some(vec![at(a1)?.dist(at(b1)?), at(a2)?.dist(at(b2)?)]),
        }
    }

    /// Distance from `center` to the region the certificate clamps.
    pub fn reach(&self, holes: &[PlannedHole], center: Point2) -> Option<f64> {
        let at = |i: usize| holes.get(i).map(|h| h.center);
        match *self {
            Certificate::Pair([a, b]) => Some(point_segment_distance(center, at(a)?, at(b)?)),
            Certificate::Span([a1, a2, b1, b2]) => {
                Some(hull_distance(&[at(a1)?, at(a2)?, at(b1)?, at(b2)?], center))
            }
        }
    }

    fn is_valid(&self, holes: &[PlannedHole], center: Point2, limit: f64, radius: f64) -> bool {
        let distinct = {
            let h = self.holes();
            (0..h.len()).all(|i| (i + 1..h.len()).all(|j| h[i] != h[j]))
        };
        distinct
            && self.spans(holes).is_some_and(|s| s.iter().all(|d| *d <= limit + TOL))
            && self.reach(holes, center).is_some_and(|r| r <= radius + TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoltPlan {
    pub holes: Vec<PlannedHole>,
    /// Certificate per two-terminal component.
    pub coverage: BTreeMap<String, Certificate>,
    /// The span limit the plan was built against.
    pub span_limit: f64,
}

impl BoltPlan {
    /// Longest bolt-to-bolt distance any certificate relies on.
    pub fn max_span_used(&self) -> f64 {
        self.coverage
            .values()
            .filter_map(|c| c.spans(&self.holes))
            .flatten()
            .fold(0.0, f64::max)
    }

    /// Number of shared stations (hole pairs).
    pub fn station_count(&self) -> usize {
        let mut ids: Vec<usize> = self
            .holes
            .iter()
            .filter_map(|h| match h.origin {
                HoleOrigin::Shared { station } => Some(station),
                HoleOrigin::IcPreallocated(_) => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn shared_hole_count(&self) -> usize {
        self.holes.iter().filter(|h| matches!(h.origin, HoleOrigin::Shared { .. })).count()
    }

    pub fn ic_hole_count(&self) -> usize {
        self.holes.len() - self.shared_hole_count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error("component {ref_des}: no legal bolt placement ({reason})")]
    Infeasible { ref_des: String, reason: String },
    #[error("invalid plan configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    Uncovered { ref_des: String },
    SpanExceeded { ref_des: String, span: f64, limit: f64 },
    HoleSpacing { a: usize, b: usize, distance: f64, min: f64 },
    HoleOutsideBoard { hole: usize, clearance: f64, min: f64 },
    HoleInKeepout { hole: usize, subject: String, clearance: f64, min: f64 },
    MissingIcHole { ref_des: String, expected: Point2 },
    Calibration(String),
    Cavity(String),
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanViolation::Uncovered { ref_des } => write!(f, "{ref_des} is not covered by any bolt certificate"),
            PlanViolation::SpanExceeded { ref_des, span, limit } => {
                write!(f, "{ref_des} relies on a {span:.3} mm span (limit {limit:.3} mm)")
            }
            PlanViolation::HoleSpacing { a, b, distance, min } => {
                write!(f, "holes {a} and {b} are {distance:.3} mm apart (minimum {min:.3} mm)")
            }
            PlanViolation::HoleOutsideBoard { hole, clearance, min } => {
                write!(f, "hole {hole} is {clearance:.3} mm from the board edge (minimum {min:.3} mm)")
            }
            PlanViolation::HoleInKeepout { hole, subject, clearance, min } => {
                write!(f, "hole {hole} wall to {subject} is {clearance:.3} mm (minimum {min:.3} mm)")
            }
            PlanViolation::MissingIcHole { ref_des, expected } => {
                write!(f, "{ref_des} is missing its bolt hole at ({}, {})", expected.x, expected.y)
            }
            PlanViolation::Calibration(msg) | PlanViolation::Cavity(msg) => f.write_str(msg),
        }
    }
}

/// Area a hole wall must keep clear of.
#[derive(Debug, Clone)]
pub(crate) enum KeepoutShape {
    /// Filled ring.
    Solid(Vec<Point2>),
    /// Annular channel between two nested rings.
    Channel { inner: Vec<Point2>, outer: Vec<Point2> },
}

#[derive(Debug, Clone)]
pub(crate) struct Keepout {
    pub subject: String,
    pub shape: KeepoutShape,
}

impl Keepout {
    /// Distance from `p` to the keep-out area; zero inside it.
    pub fn distance(&self, p: Point2) -> f64 {
        match &self.shape {
            KeepoutShape::Solid(ring) => ring_distance(ring, p),
            KeepoutShape::Channel { inner, outer } => {
                if !ring_contains(outer, p) {
                    ring_boundary_distance(outer, p)
                } else if ring_contains(inner, p) {
                    ring_boundary_distance(inner, p)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Cavities, grooves and copper that holes must clear.
pub(crate) fn keepouts(board: &BoardDesign) -> Result<Vec<Keepout>, CavityError> {
    let mut out = Vec::new();
    for c in &board.components {
        let cav = cavity_geometry(c)?;
        for (i, ring) in cav.footprints().into_iter().enumerate() {
            let subject = if i == 0 { format!("{} cavity", c.ref_des) } else { format!("{} cavity {i}", c.ref_des) };
            out.push(Keepout { subject, shape: KeepoutShape::Solid(ring.to_vec()) });
        }
        if let Some(g) = &cav.groove {
            out.push(Keepout {
                subject: format!("{} groove", c.ref_des),
                shape: KeepoutShape::Channel { inner: g.inner.clone(), outer: g.outer.clone() },
            });
        }
        for (name, ring) in c.pad_rings() {
            out.push(Keepout { subject: format!("{} pad {name}", c.ref_des), shape: KeepoutShape::Solid(ring) });
        }
    }
    for p in &board.free_pads {
        out.push(Keepout { subject: format!("pad {}", p.name), shape: KeepoutShape::Solid(p.rect.corners()) });
    }
    Ok(out)
}

/// Board-frame positions of every IC's pre-allocated holes.
pub fn ic_holes(board: &BoardDesign, diameter: f64) -> Vec<PlannedHole> {
    board
        .components
        .iter()
        .filter(|c| c.package.class.is_ic())
        .flat_map(|c| {
            c.package.bolt_offsets.iter().map(move |o| PlannedHole {
                center: c.to_board(*o),
                diameter,
                origin: HoleOrigin::IcPreallocated(c.ref_des.clone()),
            })
        })
        .collect()
}

fn needs_coverage(c: &ComponentInstance) -> bool {
    c.package.class == PackageClass::TwoTerminal
}

/// First certificate for `center` among `holes`, pairs before spans, in
/// index order.
pub fn find_certificate(holes: &[PlannedHole], center: Point2, limit: f64, radius: f64) -> Option<Certificate> {
    let near: Vec<usize> = (0..holes.len())
        .filter(|&i| holes[i].center.dist(center) <= limit + radius + TOL)
        .collect();
    let mut pairs = Vec::new();
    for (k, &i) in near.iter().enumerate() {
        for &j in &near[k + 1..] {
            if holes[i].center.dist(holes[j].center) <= limit + TOL {
                let cert = Certificate::Pair([i, j]);
                if cert.is_valid(holes, center, limit, radius) {
                    return Some(cert);
                }
                pairs.push([i, j]);
            }
        }
    }
    for (k, a) in pairs.iter().enumerate() {
        for b in &pairs[k + 1..] {
            if a.iter().any(|h| b.contains(h)) {
                continue;
            }
            for cert in [Certificate::Span([a[0], a[1], b[0], b[1]]), Certificate::Span([a[0], a[1], b[1], b[0]])] {
                if cert.is_valid(holes, center, limit, radius) {
                    return Some(cert);
                }
            }
        }
    }
    None
}

struct Planner<'a> {
    board: &'a BoardDesign,
    cfg: PlanConfig,
    limit: f64,
    keepouts: Vec<Keepout>,
    holes: Vec<PlannedHole>,
    /// Holes at or past this index were added by this run.
    first_new: usize,
    next_station: usize,
}

impl<'a> Planner<'a> {
    fn radius(&self) -> f64 {
        self.cfg.hole_diameter / 2.0
    }

    fn hole_is_legal(&self, p: Point2, extra: &[Point2]) -> bool {
        let wall = self.radius() + self.cfg.min_wall;
        if !self.board.outline.contains(p) || self.board.edge_clearance(p) < wall - TOL {
            return false;
        }
        if self.keepouts.iter().any(|k| k.distance(p) < wall - TOL) {
            return false;
        }
        let spacing = self.cfg.min_spacing();
        self.holes.iter().map(|h| h.center).chain(extra.iter().copied()).all(|q| q.dist(p) >= spacing - TOL)
    }

    fn station_is_legal(&self, a: Point2, b: Point2) -> bool {
        self.hole_is_legal(a, &[]) && self.hole_is_legal(b, &[a])
    }

    fn add_station(&mut self, a: Point2, b: Point2) {
        let station = self.next_station;
        self.next_station += 1;
        for center in [a, b] {
            self.holes.push(PlannedHole { center, diameter: self.cfg.hole_diameter, origin: HoleOrigin::Shared { station } });
        }
    }

    fn is_covered(&self, c: &ComponentInstance) -> bool {
        find_certificate(&self.holes, c.placement.position, self.limit, self.cfg.coverage_radius).is_some()
    }

    fn all_covered(&self) -> bool {
        self.board.components.iter().filter(|c| needs_coverage(c)).all(|c| self.is_covered(c))
    }

    fn uncovered(&self) -> Vec<&'a ComponentInstance> {
        let board: &'a BoardDesign = self.board;
        board
            .components
            .iter()
            .filter(|c| needs_coverage(c) && !self.is_covered(c))
            .collect()
    }

    /// Tries station positions `s` from `first` stepping by `step` while
    /// inside `[lo, hi]`.
    fn scan(&self, strip: &StripFrame, first: f64, lo: f64, hi: f64) -> Option<f64> {
        let try_at = |s: f64| {
            let (a, b) = strip.station(s);
            self.station_is_legal(a, b)
        };
        let mut down = first;
        while down >= lo - TOL {
            if try_at(down) {
                return Some(down);
            }
            down -= SCAN_STEP;
        }
        let mut up = first + SCAN_STEP;
        while up <= hi + TOL {
            if try_at(up) {
                return Some(up);
            }
            up += SCAN_STEP;
        }
        None
    }

    fn plan_strip(&mut self, strip: &Strip) -> Result<(), PlanError> {
        let frame = &strip.frame;
        let r = self.cfg.coverage_radius;
        let us: Vec<f64> = strip.members.iter().map(|c| frame.along(c.placement.position)).collect();
        let mut stations: Vec<f64> = Vec::new();
        let mut stuck = false;
        for (first, last) in chain_groups(&us, r, self.limit) {
            let (u_first, u_last) = (us[first], us[last]);
            if u_last - u_first <= 2.0 * r + TOL {
                let mid = (u_first + u_last) / 2.0;
                match self.scan(frame, mid, u_last - r, u_first + r) {
                    Some(s) => stations.push(s),
                    None => stuck = true,
                }
                continue;
            }
            // Chain ends sit inside the end windows, pushed outward as far
            // as the station count allows so stations stay well apart.
            let k = chain_cost(u_last - u_first, r, self.limit);
            let slack = ((k - 1) as f64 * self.limit - (u_last - u_first - 2.0 * r)) / 2.0;
            let m = slack.clamp(0.0, r);
            let (start, end) = (u_first + r - m, u_last - r + m);
            let Some(s) = self.scan(frame, start, u_first - r, u_first + r) else {
                stuck = true;
                continue;
            };
            stations.push(s);
            let mut prev = s;
            while u_last > prev + r + TOL {
                let hi = (prev + self.limit).min(u_last + r);
                let rest = (end - prev).max(0.0);
                let remaining = (rest / self.limit - TOL).ceil().max(1.0);
                let target = prev + rest / remaining;
                match self.scan(frame, target, prev + SCAN_STEP, hi) {
                    Some(s) => {
                        stations.push(s);
                        prev = s;
                    }
                    None => {
                        stuck = true;
                        break;
                    }
                }
            }
        }
        for s in &stations {
            let (a, b) = frame.station(*s);
            self.add_station(a, b);
        }
        if stuck {
            for c in &strip.members {
                if !self.is_covered(c) {
                    self.flank(c)?;
                }
            }
        }
        Ok(())
    }

    /// Single-component fallback: a station across the length axis, then
    /// across the width axis.
    fn flank(&mut self, c: &ComponentInstance) -> Result<(), PlanError> {
        let r = self.cfg.coverage_radius;
        let ext = c.package.extent();
        let half_l = ext.max.x.max(-ext.min.x) + crate::cavity::FIT_CLEARANCE;
        let half_w = ext.max.y.max(-ext.min.y) + crate::cavity::FIT_CLEARANCE;
        let axis = c.length_axis();
        for (dir, half) in [(axis, half_l), (axis.perp(), half_w)] {
            let frame = StripFrame::new(dir, dir.dot(c.placement.position), half + self.cfg.min_wall + self.radius() + STATION_MARGIN);
            let u = frame.along(c.placement.position);
            if let Some(s) = self.scan(&frame, u, u - r, u + r) {
                let (a, b) = frame.station(s);
                self.add_station(a, b);
                return Ok(());
            }
        }
        Err(PlanError::Infeasible {
            ref_des: c.ref_des.clone(),
            reason: "no bolt position clears the board edge, cavities and existing holes".to_string(),
        })
    }

    /// Drops new stations, then new single holes, while coverage holds.
    fn prune(&mut self) {
        let mut stations: Vec<usize> = self.holes[self.first_new..]
            .iter()
            .filter_map(|h| match h.origin {
                HoleOrigin::Shared { station } => Some(station),
                HoleOrigin::IcPreallocated(_) => None,
            })
            .collect();
        stations.dedup();
        for st in stations {
            let saved = self.holes.clone();
            let first_new = self.first_new;
            self.holes = saved
                .iter()
                .enumerate()
                .filter(|(i, h)| *i < first_new || h.origin != HoleOrigin::Shared { station: st })
                .map(|(_, h)| h.clone())
                .collect();
            if !self.all_covered() {
                self.holes = saved;
            }
        }
        let mut i = self.first_new;
        while i < self.holes.len() {
            let removed = self.holes.remove(i);
            if self.all_covered() {
                continue;
            }
            self.holes.insert(i, removed);
            i += 1;
        }
    }
}

/// Axis frame of a strip: `lateral` across the strip, `along` the sweep.
struct StripFrame {
    lateral: Point2,
    sweep: Point2,
    center: f64,
    offset: f64,
}

impl StripFrame {
    fn new(lateral: Point2, center: f64, offset: f64) -> Self {
        Self { lateral, sweep: lateral.perp(), center, offset }
    }

    fn along(&self, p: Point2) -> f64 {
        p.dot(self.sweep)
    }

    fn station(&self, s: f64) -> (Point2, Point2) {
        let base = self.sweep * s;
        (base + self.lateral * (self.center - self.offset), base + self.lateral * (self.center + self.offset))
    }
}

struct Strip<'a> {
    frame: StripFrame,
    members: Vec<&'a ComponentInstance>,
}

/// Stations a chain needs to cover an interval of length `len`.
fn chain_cost(len: f64, r: f64, limit: f64) -> usize {
    if len <= 2.0 * r + TOL {
        1
    } else {
        ((len - 2.0 * r - TOL) / limit).ceil() as usize + 1
    }
}

/// Splits sorted positions into consecutive groups, one station chain each,
/// minimising the total station count. Ties keep fewer, longer chains.
pub(crate) fn chain_groups(us: &[f64], r: f64, limit: f64) -> Vec<(usize, usize)> {
    let n = us.len();
    // best[i]: (stations, groups) for us[i..]
    let mut best = vec![(0usize, 0usize); n + 1];
    let mut next = vec![n; n];
    for i in (0..n).rev() {
        best[i] = (usize::MAX, usize::MAX);
        for j in i..n {
            let tail = best[j + 1];
            let cand = (chain_cost(us[j] - us[i], r, limit) + tail.0, 1 + tail.1);
            if cand < best[i] {
                best[i] = cand;
                next[i] = j + 1;
            }
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        out.push((i, next[i] - 1));
        i = next[i];
    }
    out
}

/// Clusters components by axis orientation and lateral line.
fn strips<'a>(comps: &[&'a ComponentInstance], cfg: &PlanConfig) -> Vec<Strip<'a>> {
    let mut by_axis: BTreeMap<i64, Vec<&'a ComponentInstance>> = BTreeMap::new();
    for c in comps {
        let a = c.length_axis();
        let deg = a.y.atan2(a.x).to_degrees().rem_euclid(180.0);
        let key = (deg * 1e6).round() as i64 % 180_000_000;
        by_axis.entry(key).or_default().push(c);
    }
    let mut out = Vec::new();
    for (key, members) in by_axis {
        let (cs, sn) = rotation_basis(key as f64 / 1e6);
        let lateral = Point2::new(cs, sn);
        let sweep = lateral.perp();
        let mut sorted = members;
        sorted.sort_by(|a, b| {
            let (pa, pb) = (a.placement.position, b.placement.position);
            pa.dot(lateral).total_cmp(&pb.dot(lateral)).then(pa.dot(sweep).total_cmp(&pb.dot(sweep)))
        });
        let mut lines: Vec<Vec<&ComponentInstance>> = Vec::new();
        for c in sorted {
            let lam = c.placement.position.dot(lateral);
            match lines.last_mut() {
                Some(line) if lam - line.last().expect("non-empty").placement.position.dot(lateral) <= STRIP_TOLERANCE => {
                    line.push(c)
                }
                _ => lines.push(vec![c]),
            }
        }
        // Along-strip gaps are left to `chain_groups`; a chain may bridge one.
        for mut members in lines {
            members.sort_by(|a, b| a.placement.position.dot(sweep).total_cmp(&b.placement.position.dot(sweep)));
            let lams: Vec<f64> = members.iter().map(|c| c.placement.position.dot(lateral)).collect();
            let lo = lams.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = lams.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let center = (lo + hi) / 2.0;
            let reach = members
                .iter()
                .zip(&lams)
                .map(|(c, lam)| {
                    let ext = c.package.extent();
                    (lam - center).abs() + ext.max.x.max(-ext.min.x) + crate::cavity::FIT_CLEARANCE
                })
                .fold(0.0, f64::max);
            let offset = reach + cfg.min_wall + cfg.hole_diameter / 2.0 + STATION_MARGIN;
            out.push(Strip { frame: StripFrame::new(lateral, center, offset), members });
        }
    }
    out
}

/// Plans holes from scratch.
pub fn plan_bolts(board: &BoardDesign, thickness: f64, cal: &SpanCalibration, cfg: &PlanConfig) -> Result<BoltPlan, PlanError> {
    extend_plan(board, thickness, cal, cfg, &[])
}

/// Adds holes to `existing` until every two-terminal component is covered.
/// Existing holes are kept; IC holes already present are not duplicated.
pub fn extend_plan(
    board: &BoardDesign,
    thickness: f64,
    cal: &SpanCalibration,
    cfg: &PlanConfig,
    existing: &[PlannedHole],
) -> Result<BoltPlan, PlanError> {
    if !(cfg.hole_diameter > 0.0 && cfg.min_wall >= 0.0 && cfg.coverage_radius > 0.0) {
        return Err(PlanError::Config(format!("{cfg:?}")));
    }
    let limit = max_span(thickness, cal)?;
    let mut holes: Vec<PlannedHole> = existing.to_vec();
    for h in ic_holes(board, cfg.hole_diameter) {
        if !holes.iter().any(|e| e.center.dist(h.center) <= IC_MATCH) {
            holes.push(h);
        }
    }
    let next_station = holes
        .iter()
        .filter_map(|h| match h.origin {
            HoleOrigin::Shared { station } => Some(station + 1),
            HoleOrigin::IcPreallocated(_) => None,
        })
        .max()
        .unwrap_or(0);
    let mut planner = Planner {
        board,
        cfg: *cfg,
        limit,
        keepouts: keepouts(board)?,
        first_new: holes.len(),
        holes,
        next_station,
    };
    for c in planner.uncovered() {
        let outside = !board.outline.contains(c.placement.position);
        if outside {
            return Err(PlanError::Infeasible { ref_des: c.ref_des.clone(), reason: "center is outside the board".into() });
        }
    }
    let pending = planner.uncovered();
    for strip in strips(&pending, cfg) {
        planner.plan_strip(&strip)?;
    }
    for c in planner.uncovered() {
        planner.flank(c)?;
    }
    planner.prune();

    let mut coverage = BTreeMap::new();
    for c in board.components.iter().filter(|c| needs_coverage(c)) {
        let cert = find_certificate(&planner.holes, c.placement.position, limit, cfg.coverage_radius).ok_or_else(|| {
            PlanError::Infeasible { ref_des: c.ref_des.clone(), reason: "coverage lost while pruning".into() }
        })?;
        coverage.insert(c.ref_des.clone(), cert);
    }
    Ok(BoltPlan { holes: planner.holes, coverage, span_limit: limit })
}

/// Independent check of every plan invariant. Empty when the plan is sound.
pub fn verify_plan(board: &BoardDesign, plan: &BoltPlan, thickness: f64, cal: &SpanCalibration, cfg: &PlanConfig) -> Vec<PlanViolation> {
    let mut out = Vec::new();
    let limit = match max_span(thickness, cal) {
        Ok(d) => d,
        Err(e) => {
            out.push(PlanViolation::Calibration(e.to_string()));
            return out;
        }
    };
    let wall = cfg.min_wall;
    let keep = match keepouts(board) {
        Ok(k) => k,
        Err(e) => {
            out.push(PlanViolation::Cavity(e.to_string()));
            Vec::new()
        }
    };
    for (i, h) in plan.holes.iter().enumerate() {
        let r = h.diameter / 2.0;
        let edge = if board.outline.contains(h.center) { board.edge_clearance(h.center) - r } else { -r };
        if edge < wall - TOL {
            out.push(PlanViolation::HoleOutsideBoard { hole: i, clearance: edge, min: wall });
        }
        for k in &keep {
            let clearance = k.distance(h.center) - r;
            if clearance < wall - TOL {
                out.push(PlanViolation::HoleInKeepout { hole: i, subject: k.subject.clone(), clearance, min: wall });
            }
        }
        for (j, g) in plan.holes.iter().enumerate().skip(i + 1) {
            let distance = h.center.dist(g.center);
            let min = (h.diameter + g.diameter) / 2.0 + wall;
            if distance < min - TOL {
                out.push(PlanViolation::HoleSpacing { a: i, b: j, distance, min });
            }
        }
    }
    for expected in ic_holes(board, cfg.hole_diameter) {
        if !plan.holes.iter().any(|h| h.center.dist(expected.center) <= IC_MATCH) {
            let HoleOrigin::IcPreallocated(ref_des) = expected.origin else { unreachable!() };
            out.push(PlanViolation::MissingIcHole { ref_des, expected: expected.center });
        }
    }
    for c in board.components.iter().filter(|c| needs_coverage(c)) {
        let center = c.placement.position;
        if find_certificate(&plan.holes, center, limit, cfg.coverage_radius).is_some() {
            continue;
        }
        let stretched = plan.coverage.get(&c.ref_des).and_then(|cert| {
            let reach = cert.reach(&plan.holes, center)?;
            let span = cert.spans(&plan.holes)?.into_iter().fold(0.0, f64::max);
            (reach <= cfg.coverage_radius + TOL && span > limit + TOL).then_some(span)
        });
        match stretched {
            Some(span) => out.push(PlanViolation::SpanExceeded { ref_des: c.ref_des.clone(), span, limit }),
            None => out.push(PlanViolation::Uncovered { ref_des: c.ref_des.clone() }),
        }
    }
    out
}

#[cfg(test)]
mod tests;
