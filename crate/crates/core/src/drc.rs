//! Design-rule checks and the assembly report.
//!
//! | rule | checks | severity |
//! |------|--------|----------|
//! | R1   | tab package at least 0603 | Error |
//! | R2   | pin pitch at least 0.6 mm | Warning |
//! | R3   | pad contact area at least 0.0625 mm^2 | Warning |
//! | R4   | bolt spans within the calibrated limit | Error |
//! | R5   | bottom-pad ICs carry the raised-pad requirement | Error / Info |
//! | R6   | tabs only on profiles that can print them | Error |
//! | R7   | hole walls clear pads, cavities, edge and other holes by 0.8 mm | Error |
//! | R8   | at least 0.6 mm of ceiling above every cavity | Error |
//! | R9   | every two-terminal part clamped, every IC hole present | Error |
//! | R10  | cavities inside the outline and disjoint | Error |

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::bolts::{max_span, verify_plan, BoltPlan, HoleOrigin, PlanConfig, PlanViolation, SpanCalibration};
use crate::cavity::{cavity_geometry, tab_package_too_small, CavitySolid, MIN_TAB_BODY};
use crate::geom::rings_overlap;
use crate::housing::HousingConfig;
use crate::model::{BoardDesign, PackageClass};

pub const MIN_PIN_PITCH: f64 = 0.6;
pub const MIN_PAD_AREA: f64 = 0.0625;
pub const MIN_CEILING: f64 = 0.6;
/// Mean added resistance per solderless contact, ohms.
pub const CONTACT_MEAN_OHMS: f64 = 0.46;
/// Standard deviation per contact, ohms.
pub const CONTACT_SIGMA_OHMS: f64 = 0.139;
/// Tightening torque per bolt, N*m.
pub const BOLT_TORQUE_NM: f64 = 0.01;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleViolation {
    /// Rule number; rendered as `R<n>`.
    pub rule: u8,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
    pub measured: Option<f64>,
    pub limit: Option<f64>,
}

impl RuleViolation {
    pub fn rule_id(&self) -> String {
        format!("R{}", self.rule)
    }
}

fn violation(
    rule: u8,
    severity: Severity,
    subject: impl Into<String>,
    message: impl Into<String>,
    measured: Option<f64>,
    limit: Option<f64>,
) -> RuleViolation {
    RuleViolation { rule, severity, subject: subject.into(), message: message.into(), measured, limit }
}

fn hole_name(plan: &BoltPlan, i: usize) -> String {
    match plan.holes.get(i).map(|h| &h.origin) {
        Some(HoleOrigin::IcPreallocated(r)) => format!("hole {i} ({r})"),
        _ => format!("hole {i}"),
    }
}

fn package_rules(board: &BoardDesign, cfg: &HousingConfig, out: &mut Vec<RuleViolation>) {
    for c in &board.components {
        let pkg = &c.package;
        let r = &c.ref_des;
        if pkg.class == PackageClass::TwoTerminal {
            if tab_package_too_small(pkg.body) {
                let (measured, limit) = if pkg.body.l < MIN_TAB_BODY.l - TOL {
                    (pkg.body.l, MIN_TAB_BODY.l)
                } else {
                    (pkg.body.w, MIN_TAB_BODY.w)
                };
                out.push(violation(
                    1,
                    Severity::Error,
                    r,
                    format!("{} body {} x {} mm is smaller than 0603; tabs will not hold it", pkg.name, pkg.body.l, pkg.body.w),
                    Some(measured),
                    Some(limit),
                ));
            }
            if !cfg.profile.supports_tabs() {
                out.push(violation(
                    6,
                    Severity::Error,
                    r,
                    format!("{} needs tabs, which the {} profile cannot produce", pkg.name, cfg.profile),
                    None,
                    None,
                ));
            }
        }
        if let Some(p) = pkg.pin_pitch() {
            if p < MIN_PIN_PITCH - TOL {
                out.push(violation(
                    2,
                    Severity::Warning,
                    r,
                    format!("{} pin pitch {p:.3} mm is below the validated 0.6 mm", pkg.name),
                    Some(p),
                    Some(MIN_PIN_PITCH),
                ));
            }
        }
        if let Some(a) = pkg.min_pad_area() {
            if a < MIN_PAD_AREA - TOL {
                out.push(violation(
                    3,
                    Severity::Warning,
                    r,
                    format!("{} smallest pad {a:.4} mm^2 is below the validated 0.0625 mm^2", pkg.name),
                    Some(a),
                    Some(MIN_PAD_AREA),
                ));
            }
        }
        if pkg.class == PackageClass::IcBottomPad {
            if pkg.raised_pad_required {
                out.push(violation(5, Severity::Info, r, format!("{}: raise the board pads under {r}", pkg.name), None, None));
            } else {
                out.push(violation(
                    5,
                    Severity::Error,
                    r,
                    format!("{} is a bottom-pad package but the library does not require raised pads", pkg.name),
                    None,
                    None,
                ));
            }
        }
    }
}

fn cavity_rules(board: &BoardDesign, cfg: &HousingConfig, out: &mut Vec<RuleViolation>) {
    let t = cfg.thickness;
    let mut cavities: Vec<CavitySolid> = Vec::new();
    for c in &board.components {
        match cavity_geometry(c) {
            Ok(cav) => cavities.push(cav),
            Err(e) => out.push(violation(10, Severity::Error, &c.ref_des, e.to_string(), None, None)),
        }
    }
    for cav in &cavities {
        if let Some(h) = cav.max_void_height() {
            let ceiling = t - h;
            if ceiling < MIN_CEILING - TOL {
                out.push(violation(
                    8,
                    Severity::Error,
                    &cav.ref_des,
                    format!("{ceiling:.3} mm of housing left above the cavity"),
                    Some(ceiling),
                    Some(MIN_CEILING),
                ));
            }
        }
        if cav.void_regions().iter().any(|r| !board.ring_inside_outline(&r.ring)) {
            out.push(violation(10, Severity::Error, &cav.ref_des, "cavity or groove crosses the board outline", None, None));
        }
    }
    let envelopes: Vec<Vec<Vec<_>>> = cavities
        .iter()
        .map(|c| match &c.groove {
            Some(g) => vec![g.outer.clone()],
            None => c.footprints().into_iter().map(<[_]>::to_vec).collect(),
        })
        .collect();
    for i in 0..cavities.len() {
        for j in i + 1..cavities.len() {
            if envelopes[i].iter().any(|a| envelopes[j].iter().any(|b| rings_overlap(a, b))) {
                out.push(violation(
                    10,
                    Severity::Error,
                    &cavities[i].ref_des,
                    format!("cavity overlaps {}", cavities[j].ref_des),
                    None,
                    None,
                ));
            }
        }
    }
}

fn plan_rules(
    board: &BoardDesign,
    plan: &BoltPlan,
    cfg: &HousingConfig,
    cal: &SpanCalibration,
    plan_cfg: &PlanConfig,
    out: &mut Vec<RuleViolation>,
) {
    if let Ok(limit) = max_span(cfg.thickness, cal) {
        for (r, cert) in &plan.coverage {
            let Some(spans) = cert.spans(&plan.holes) else { continue };
            let span = spans.into_iter().fold(0.0, f64::max);
            if span > limit + TOL {
                out.push(violation(
                    4,
                    Severity::Error,
                    r,
                    format!("bolt span {span:.3} mm exceeds {limit:.3} mm at {} mm", cfg.thickness),
                    Some(span),
                    Some(limit),
                ));
            }
        }
    }
    for v in verify_plan(board, plan, cfg.thickness, cal, plan_cfg) {
        let msg = v.to_string();
        let item = match v {
            PlanViolation::Calibration(_) => violation(4, Severity::Error, "calibration", msg, Some(cfg.thickness), None),
            // Reported from the certificate above.
            PlanViolation::SpanExceeded { .. } => continue,
            PlanViolation::Uncovered { ref_des } => violation(9, Severity::Error, ref_des, msg, None, None),
            PlanViolation::MissingIcHole { ref_des, .. } => violation(9, Severity::Error, ref_des, msg, None, None),
            PlanViolation::HoleSpacing { a, distance, min, .. } => {
                violation(7, Severity::Error, hole_name(plan, a), msg, Some(distance), Some(min))
            }
            PlanViolation::HoleOutsideBoard { hole, clearance, min } => {
                violation(7, Severity::Error, hole_name(plan, hole), msg, Some(clearance), Some(min))
            }
            PlanViolation::HoleInKeepout { hole, clearance, min, .. } => {
                violation(7, Severity::Error, hole_name(plan, hole), msg, Some(clearance), Some(min))
            }
            // Already reported by the cavity rules.
            PlanViolation::Cavity(_) => continue,
        };
        out.push(item);
    }
}

/// Every rule over `board` and `plan`, sorted by rule then subject.
pub fn run_drc(
    board: &BoardDesign,
    plan: &BoltPlan,
    cfg: &HousingConfig,
    cal: &SpanCalibration,
    plan_cfg: &PlanConfig,
) -> Vec<RuleViolation> {
    let mut out = Vec::new();
    package_rules(board, cfg, &mut out);
    cavity_rules(board, cfg, &mut out);
    plan_rules(board, plan, cfg, cal, plan_cfg, &mut out);
    out.sort_by(|a, b| (a.rule, &a.subject, &a.message).cmp(&(b.rule, &b.subject, &b.message)));
    out
}

pub fn error_count(violations: &[RuleViolation]) -> usize {
    violations.iter().filter(|v| v.severity == Severity::Error).count()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn render_text(violations: &[RuleViolation]) -> String {
    let mut out = String::new();
    if violations.is_empty() {
        out.push_str("no rule violations\n");
        return out;
    }
    for v in violations {
        let _ = write!(out, "{:<4} {:<7} {}: {}", v.rule_id(), v.severity, v.subject, v.message);
        if let (Some(m), Some(l)) = (v.measured, v.limit) {
            let _ = write!(out, " (measured {m:.4}, limit {l:.4})");
        }
        out.push('\n');
    }
    let errors = error_count(violations);
    let warnings = violations.iter().filter(|v| v.severity == Severity::Warning).count();
    let _ = writeln!(out, "{errors} error(s), {warnings} warning(s)");
    out
}

/// One violation per line, tab separated, with a header row. Tabs and
/// newlines inside fields become spaces.
pub fn render_tsv(violations: &[RuleViolation]) -> String {
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    let mut out = String::from("rule\tseverity\tsubject\tmeasured\tlimit\tmessage\n");
    for v in violations {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            v.rule_id(),
            v.severity,
            clean(&v.subject),
            opt(v.measured),
            opt(v.limit),
            clean(&v.message)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DrcError {
    #[error("unknown net {0}")]
    UnknownNet(String),
}

/// Model estimate of the resistance the housing adds to a net.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEstimate {
    pub contacts: usize,
    pub mean: f64,
    pub sigma: f64,
}

impl ContactEstimate {
    pub fn for_contacts(contacts: usize) -> Self {
        Self {
            contacts,
            mean: CONTACT_MEAN_OHMS * contacts as f64,
            sigma: CONTACT_SIGMA_OHMS * (contacts as f64).sqrt(),
        }
    }
}

/// Contacts are counted as component pads on the net.
pub fn estimate_contact_resistance(board: &BoardDesign, net: &str) -> Result<ContactEstimate, DrcError> {
    if !board.nets().contains(net) {
        return Err(DrcError::UnknownNet(net.to_string()));
    }
    let contacts = board.components.iter().flat_map(|c| c.nets_by_pad.values()).filter(|n| *n == net).count();
    Ok(ContactEstimate::for_contacts(contacts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyReport {
    pub board: String,
    pub thickness: f64,
    pub profile: String,
    pub bolt_count: usize,
    /// Holes per package class label; shared holes count as two-terminal.
    pub bolts_by_class: BTreeMap<String, usize>,
    pub span_limit: f64,
    pub max_span_used: f64,
    pub nets: BTreeMap<String, ContactEstimate>,
    pub raised_pads: Vec<String>,
    pub calibration: String,
    pub torque_nm: f64,
    pub errors: usize,
    pub warnings: usize,
}

pub fn assembly_report(
    board: &BoardDesign,
    plan: &BoltPlan,
    cfg: &HousingConfig,
    cal: &SpanCalibration,
    violations: &[RuleViolation],
) -> AssemblyReport {
    let mut bolts_by_class = BTreeMap::new();
    for h in &plan.holes {
        let class = match &h.origin {
            HoleOrigin::Shared { .. } => PackageClass::TwoTerminal.label(),
            HoleOrigin::IcPreallocated(r) => board.component(r).map_or("unknown", |c| c.package.class.label()),
        };
        *bolts_by_class.entry(class.to_string()).or_insert(0) += 1;
    }
    let nets = board
        .nets()
        .into_iter()
        .map(|n| {
            let est = estimate_contact_resistance(board, &n).expect("net comes from the board");
            (n, est)
        })
        .collect();
    AssemblyReport {
        board: board.name.clone(),
        thickness: cfg.thickness,
        profile: cfg.profile.to_string(),
        bolt_count: plan.holes.len(),
        bolts_by_class,
        span_limit: plan.span_limit,
        max_span_used: plan.max_span_used(),
        nets,
        raised_pads: board
            .components
            .iter()
            .filter(|c| c.package.raised_pad_required)
            .map(|c| c.ref_des.clone())
            .collect(),
        calibration: cal.status().to_string(),
        torque_nm: BOLT_TORQUE_NM,
        errors: error_count(violations),
        warnings: violations.iter().filter(|v| v.severity == Severity::Warning).count(),
    }
}

impl AssemblyReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "board: {}", self.board);
        let _ = writeln!(s, "housing: {} mm, {} profile", self.thickness, self.profile);
        let _ = writeln!(s, "span calibration: {}", self.calibration);
        let _ = writeln!(s, "span limit: {:.3} mm, longest span used: {:.3} mm", self.span_limit, self.max_span_used);
        let _ = writeln!(s, "bolts: {}", self.bolt_count);
        for (class, n) in &self.bolts_by_class {
            let _ = writeln!(s, "  {class}: {n}");
        }
        let _ = writeln!(s, "torque: tighten each bolt to {} N*m", self.torque_nm);
        if !self.raised_pads.is_empty() {
            let _ = writeln!(s, "raised board pads required under: {}", self.raised_pads.join(", "));
        }
        let _ = writeln!(s, "added contact resistance per net (model estimate, mean +/- sigma):");
        for (net, e) in &self.nets {
            let _ = writeln!(s, "  {net}: {} contact(s), {:.3} +/- {:.3} ohm", e.contacts, e.mean, e.sigma);
        }
        let _ = writeln!(s, "rule check: {} error(s), {} warning(s)", self.errors, self.warnings);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_estimate_examples() {
        let one = ContactEstimate::for_contacts(1);
        assert_eq!((one.mean, one.sigma), (0.46, 0.139));
        assert_eq!(ContactEstimate::for_contacts(0).mean, 0.0);
        let four = ContactEstimate::for_contacts(4);
        assert!((four.mean - 1.84).abs() < 1e-12 && (four.sigma - 0.278).abs() < 1e-12);
    }

    #[test]
    fn tsv_escapes_fields() {
        let v = vec![violation(2, Severity::Warning, "U\t1", "a\nb", Some(0.5), Some(0.6))];
        let tsv = render_tsv(&v);
        assert_eq!(tsv.lines().nth(1).unwrap(), "R2\twarning\tU 1\t0.5000\t0.6000\ta b");
    }
}
