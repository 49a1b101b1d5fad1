//! Package library: the `packlib v1` text format and the built-in default set.
//!
//! ```text
//! packlib v1
//! alias R_0805_2012Metric 0805
//! package 0805
//!   class two-terminal
//!   body 2 1.25 0.6
//!   pad 1 -0.8 0 0.4 1.25
//! ```
//!
//! Package items: `class`, `body l w t`, `pad name cx cy w h`,
//! `pin-row cx cy w h`, `pin-height h`, `bolt x y`, `raised-pads`,
//! `prism depth|through x y x y ...`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::text::{decode_utf8, expect_header, tokenize, Line, Quoted, SyntaxError};
use crate::geom::Point2;
use crate::model::{BodyDims, CavityPrism, PackageClass, PackageSpec, Pad, PrismHeight, Rect};

pub const LIBRARY_MAGIC: &str = "packlib";
pub const LIBRARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("library syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate package {0}")]
    DuplicatePackage(String),
    #[error("duplicate alias {0}")]
    DuplicateAlias(String),
    #[error("library entry {entry} violates an invariant: {reason}")]
    InvariantViolation { entry: String, reason: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LibraryFile {
    packages: BTreeMap<String, PackageSpec>,
    /// Footprint name -> package name.
    aliases: BTreeMap<String, String>,
}

impl LibraryFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, spec: PackageSpec) -> Result<(), LibraryError> {
        spec.validate().map_err(|reason| LibraryError::InvariantViolation {
            entry: spec.name.clone(),
            reason,
        })?;
        if self.packages.contains_key(&spec.name) {
            return Err(LibraryError::DuplicatePackage(spec.name));
        }
        self.packages.insert(spec.name.clone(), spec);
        Ok(())
    }

    /// Replaces or adds a package.
    pub fn upsert(&mut self, spec: PackageSpec) -> Result<(), LibraryError> {
        self.packages.remove(&spec.name);
        self.insert(spec)
    }

    pub fn add_alias(&mut self, footprint: &str, package: &str) -> Result<(), LibraryError> {
        if self.aliases.contains_key(footprint) {
            return Err(LibraryError::DuplicateAlias(footprint.to_string()));
        }
        self.aliases.insert(footprint.to_string(), package.to_string());
        Ok(())
    }

    /// Merges `other` into `self`; entries in `other` win.
    pub fn merge(&mut self, other: LibraryFile) {
        self.packages.extend(other.packages);
        self.aliases.extend(other.aliases);
    }

    pub fn get(&self, name: &str) -> Option<&PackageSpec> {
        self.packages.get(name)
    }

    /// Looks `name` up as a package, then as an alias. A `Library:` prefix
    /// is ignored when the full name is unknown.
    pub fn resolve(&self, name: &str) -> Option<&PackageSpec> {
        let lookup = |n: &str| {
            self.packages
                .get(n)
                .or_else(|| self.aliases.get(n).and_then(|p| self.packages.get(p)))
        };
        lookup(name).or_else(|| name.split_once(':').and_then(|(_, rest)| lookup(rest)))
    }

    pub fn packages(&self) -> impl Iterator<Item = &PackageSpec> {
        self.packages.values()
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, p)| (a.as_str(), p.as_str()))
    }

    pub fn len(&self) -> usize {
        self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    /// Every alias must point at a package in this library.
    pub fn check_aliases(&self) -> Result<(), LibraryError> {
        for (alias, target) in &self.aliases {
            if !self.packages.contains_key(target) {
                return Err(LibraryError::InvariantViolation {
                    entry: alias.clone(),
                    reason: format!("alias target {target} is not defined"),
                });
            }
        }
        Ok(())
    }
}

struct PendingPackage {
    line: usize,
    name: String,
    class: Option<String>,
    body: Option<BodyDims>,
    pins: Vec<Pad>,
    pin_rows: Vec<Rect>,
    pin_height: Option<f64>,
    bolts: Vec<Point2>,
    raised: bool,
    prisms: Vec<CavityPrism>,
}

impl PendingPackage {
    fn finish(self) -> Result<PackageSpec, LibraryError> {
        let syntax = |msg: String| LibraryError::Syntax(SyntaxError::new(self.line, 1, msg));
        let body = self.body.ok_or_else(|| syntax(format!("package {} has no body", self.name)))?;
        let class_name = self.class.as_deref().ok_or_else(|| syntax(format!("package {} has no class", self.name)))?;
        let misplaced = |what: &str| syntax(format!("`{what}` is not valid for class {class_name}"));
        if class_name != "ic-extended-pin" && (!self.pin_rows.is_empty() || self.pin_height.is_some()) {
            return Err(misplaced("pin-row/pin-height"));
        }
        if class_name != "custom" && !self.prisms.is_empty() {
            return Err(misplaced("prism"));
        }
        let class = match class_name {
            "two-terminal" => PackageClass::TwoTerminal,
            "ic-extended-pin" => PackageClass::IcExtendedPin {
                pin_rows: self.pin_rows,
                pin_height: self
                    .pin_height
                    .ok_or_else(|| syntax(format!("package {} needs pin-height", self.name)))?,
            },
            "ic-bottom-pad" => PackageClass::IcBottomPad,
            "custom" => PackageClass::Custom { cavity: self.prisms },
            other => return Err(syntax(format!("unknown class `{other}`"))),
        };
        Ok(PackageSpec {
            name: self.name,
            class,
            body,
            pins: self.pins,
            bolt_offsets: self.bolts,
            raised_pad_required: self.raised,
        })
    }
}

fn rect_args(line: &Line, first: usize) -> Result<Rect, SyntaxError> {
    Ok(Rect::new(
        line.number_at(first)?,
        line.number_at(first + 1)?,
        line.number_at(first + 2)?,
        line.number_at(first + 3)?,
    ))
}

fn parse_package_item(pkg: &mut PendingPackage, line: &Line) -> Result<(), SyntaxError> {
    match line.keyword() {
        "class" => {
            let a = line.expect_args(1)?;
            pkg.class = Some(a[0].clone());
        }
        "body" => {
            line.expect_args(3)?;
            pkg.body = Some(BodyDims::new(line.number_at(1)?, line.number_at(2)?, line.number_at(3)?));
        }
        "pad" => {
            let a = line.expect_args(5)?;
            pkg.pins.push(Pad { name: a[0].clone(), rect: rect_args(line, 2)? });
        }
        "pin-row" => {
            line.expect_args(4)?;
            pkg.pin_rows.push(rect_args(line, 1)?);
        }
        "pin-height" => {
            line.expect_args(1)?;
            pkg.pin_height = Some(line.number_at(1)?);
        }
        "bolt" => {
            line.expect_args(2)?;
            pkg.bolts.push(Point2::new(line.number_at(1)?, line.number_at(2)?));
        }
        "raised-pads" => {
            line.expect_args(0)?;
            pkg.raised = true;
        }
        "prism" => {
            let args = line.args();
            if args.len() < 7 || args.len().is_multiple_of(2) {
                return Err(SyntaxError::at(line, "`prism` takes a height and at least 3 x y pairs"));
            }
            let height = if args[0] == "through" {
                PrismHeight::Through
            } else {
                PrismHeight::Depth(line.number_at(1)?)
            };
            let mut footprint = Vec::new();
            for i in (2..=args.len()).step_by(2) {
                footprint.push(Point2::new(line.number_at(i)?, line.number_at(i + 1)?));
            }
            pkg.prisms.push(CavityPrism { footprint, height });
        }
        other => return Err(SyntaxError::at(line, format!("unknown package item `{other}`"))),
    }
    Ok(())
}

pub fn parse_library(bytes: &[u8]) -> Result<LibraryFile, LibraryError> {
    let src = decode_utf8(bytes)?;
    let lines = tokenize(src)?;
    let body = expect_header(&lines, LIBRARY_MAGIC, LIBRARY_VERSION)?;
    let mut lib = LibraryFile::new();
    let mut pending: Option<PendingPackage> = None;
    for line in body {
        match line.keyword() {
            "package" => {
                if let Some(p) = pending.take() {
                    lib.insert(p.finish()?)?;
                }
                let a = line.expect_args(1)?;
                pending = Some(PendingPackage {
                    line: line.number,
                    name: a[0].clone(),
                    class: None,
                    body: None,
                    pins: Vec::new(),
                    pin_rows: Vec::new(),
                    pin_height: None,
                    bolts: Vec::new(),
                    raised: false,
                    prisms: Vec::new(),
                });
            }
            "alias" => {
                let a = line.expect_args(2)?;
                lib.add_alias(&a[0], &a[1])?;
            }
            _ => match pending.as_mut() {
                Some(p) => parse_package_item(p, line)?,
                None => {
                    return Err(SyntaxError::at(line, format!("`{}` outside a package", line.keyword())).into())
                }
            },
        }
    }
    if let Some(p) = pending.take() {
        lib.insert(p.finish()?)?;
    }
    lib.check_aliases()?;
    Ok(lib)
}

/// Reads a library from disk. A missing or unreadable file is reported as a
/// syntax error at line 0.
pub fn load_library(path: &std::path::Path) -> Result<LibraryFile, LibraryError> {
    let bytes = std::fs::read(path)
        .map_err(|e| SyntaxError::new(0, 0, format!("cannot read {}: {e}", path.display())))?;
    parse_library(&bytes)
}

pub fn save_library(lib: &LibraryFile, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, serialize_library(lib))
}

fn push_rect(out: &mut String, r: &Rect) {
    let _ = write!(out, " {} {} {} {}", r.center.x, r.center.y, r.width, r.height);
}

pub fn serialize_library(lib: &LibraryFile) -> String {
    let mut out = format!("{LIBRARY_MAGIC} v{LIBRARY_VERSION}\n");
    for (alias, target) in lib.aliases() {
        let _ = writeln!(out, "alias {} {}", Quoted(alias), Quoted(target));
    }
    for p in lib.packages() {
        let _ = writeln!(out, "package {}", Quoted(&p.name));
        let _ = writeln!(out, "  class {}", p.class.label());
        let _ = writeln!(out, "  body {} {} {}", p.body.l, p.body.w, p.body.t);
        for pad in &p.pins {
            let _ = write!(out, "  pad {}", Quoted(&pad.name));
            push_rect(&mut out, &pad.rect);
            out.push('\n');
        }
        match &p.class {
            PackageClass::IcExtendedPin { pin_rows, pin_height } => {
                let _ = writeln!(out, "  pin-height {pin_height}");
                for r in pin_rows {
                    out.push_str("  pin-row");
                    push_rect(&mut out, r);
                    out.push('\n');
                }
            }
            PackageClass::Custom { cavity } => {
                for prism in cavity {
                    match prism.height {
                        PrismHeight::Depth(d) => {
                            let _ = write!(out, "  prism {d}");
                        }
                        PrismHeight::Through => out.push_str("  prism through"),
                    }
                    for v in &prism.footprint {
                        let _ = write!(out, " {} {}", v.x, v.y);
                    }
                    out.push('\n');
                }
            }
            _ => {}
        }
        for b in &p.bolt_offsets {
            let _ = writeln!(out, "  bolt {} {}", b.x, b.y);
        }
        if p.raised_pad_required {
            out.push_str("  raised-pads\n");
        }
    }
    out
}

/// Gap between the fit clearance line and the bolt hole centers of the
/// built-in IC packages.
const IC_BOLT_MARGIN: f64 = 1.0;
const FIT_CLEARANCE: f64 = crate::cavity::FIT_CLEARANCE;

fn corner_bolts(pins: &[Pad], body: BodyDims) -> Vec<Point2> {
    let ext = pins.iter().fold(body.rect().bbox(), |acc, p| acc.union(p.rect.bbox()));
    let hx = ext.max.x.max(-ext.min.x) + FIT_CLEARANCE + IC_BOLT_MARGIN;
    let hy = ext.max.y.max(-ext.min.y) + FIT_CLEARANCE + IC_BOLT_MARGIN;
    vec![
        Point2::new(-hx, -hy),
        Point2::new(hx, -hy),
        Point2::new(hx, hy),
        Point2::new(-hx, hy),
    ]
}

fn chip(name: &str, l: f64, w: f64, t: f64, term: f64) -> PackageSpec {
    let x = l / 2.0 - term / 2.0;
    PackageSpec {
        name: name.to_string(),
        class: PackageClass::TwoTerminal,
        body: BodyDims::new(l, w, t),
        pins: vec![
            Pad { name: "1".into(), rect: Rect::new(-x, 0.0, term, w) },
            Pad { name: "2".into(), rect: Rect::new(x, 0.0, term, w) },
        ],
        bolt_offsets: Vec::new(),
        raised_pad_required: false,
    }
}

/// Positions of `n` pins at `pitch`, centered on zero.
fn row_positions(n: usize, pitch: f64) -> Vec<f64> {
    (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * pitch).collect()
}

/// Dual-row gull-wing package. Pin 1 is bottom-left, numbering runs
/// counter-clockwise.
#[allow(clippy::too_many_arguments)]
fn dual_row(name: &str, body: BodyDims, per_side: usize, pitch: f64, row_y: f64, foot: (f64, f64), pin_height: f64) -> PackageSpec {
    let xs = row_positions(per_side, pitch);
    let mut pins = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        pins.push(Pad { name: (i + 1).to_string(), rect: Rect::new(*x, -row_y, foot.0, foot.1) });
    }
    for (i, x) in xs.iter().rev().enumerate() {
        pins.push(Pad { name: (per_side + i + 1).to_string(), rect: Rect::new(*x, row_y, foot.0, foot.1) });
    }
    let span = (per_side as f64 - 1.0) * pitch + foot.0;
    let bolts = corner_bolts(&pins, body);
    PackageSpec {
        name: name.to_string(),
        class: PackageClass::IcExtendedPin {
            pin_rows: vec![Rect::new(0.0, -row_y, span, foot.1), Rect::new(0.0, row_y, span, foot.1)],
            pin_height,
        },
        body,
        pins,
        bolt_offsets: bolts,
        raised_pad_required: false,
    }
}

/// Pads on four sides, numbered counter-clockwise from the left side top.
fn quad_pads(per_side: usize, pitch: f64, offset: f64, along: f64, across: f64) -> Vec<Pad> {
    let pos = row_positions(per_side, pitch);
    let mut pins = Vec::new();
    let mut n = 0;
    let mut push = |rect: Rect| {
        n += 1;
        pins.push(Pad { name: n.to_string(), rect });
    };
    for y in pos.iter().rev() {
        push(Rect::new(-offset, *y, across, along));
    }
    for x in &pos {
        push(Rect::new(*x, -offset, along, across));
    }
    for y in &pos {
        push(Rect::new(offset, *y, across, along));
    }
    for x in pos.iter().rev() {
        push(Rect::new(*x, offset, along, across));
    }
    pins
}

fn tqfp32() -> PackageSpec {
    let body = BodyDims::new(7.0, 7.0, 1.2);
    let (pitch, off, along, across) = (0.8, 4.2, 0.37, 0.6);
    let pins = quad_pads(8, pitch, off, along, across);
    let span = 7.0 * pitch + along;
    let bolts = corner_bolts(&pins, body);
    PackageSpec {
        name: "TQFP-32".into(),
        class: PackageClass::IcExtendedPin {
            pin_rows: vec![
                Rect::new(-off, 0.0, across, span),
                Rect::new(0.0, -off, span, across),
                Rect::new(off, 0.0, across, span),
                Rect::new(0.0, off, span, across),
            ],
            pin_height: 0.15,
        },
        body,
        pins,
        bolt_offsets: bolts,
        raised_pad_required: false,
    }
}

fn qfn20() -> PackageSpec {
    let body = BodyDims::new(4.0, 4.0, 0.9);
    let pins = quad_pads(5, 0.65, 1.75, 0.3, 0.5);
    let bolts = corner_bolts(&pins, body);
    PackageSpec {
        name: "QFN-20".into(),
        class: PackageClass::IcBottomPad,
        body,
        pins,
        bolt_offsets: bolts,
        raised_pad_required: true,
    }
}

/// 4x4 ball grid at 0.65 pitch with the A1 corner depopulated.
fn ufbga15() -> PackageSpec {
    let body = BodyDims::new(2.5, 2.5, 0.6);
    let pos = row_positions(4, 0.65);
    let mut pins = Vec::new();
    for (r, y) in pos.iter().rev().enumerate() {
        for (c, x) in pos.iter().enumerate() {
            if r == 0 && c == 0 {
                continue;
            }
            let name = format!("{}{}", (b'A' + r as u8) as char, c + 1);
            pins.push(Pad { name, rect: Rect::new(*x, *y, 0.25, 0.25) });
        }
    }
    let bolts = corner_bolts(&pins, body);
    PackageSpec {
        name: "UFBGA-15".into(),
        class: PackageClass::IcBottomPad,
        body,
        pins,
        bolt_offsets: bolts,
        raised_pad_required: true,
    }
}

/// Built-in library of the common packages with their usual footprint
/// aliases.
pub fn default_library() -> LibraryFile {
    let mut lib = LibraryFile::new();
    let packages = vec![
        chip("0603", 1.55, 0.8, 0.45, 0.3),
        chip("0805", 2.0, 1.25, 0.6, 0.4),
        chip("1206", 3.2, 1.6, 0.6, 0.5),
        dual_row("SOIC-8", BodyDims::new(4.9, 3.9, 1.75), 4, 1.27, 2.5, (0.41, 1.0), 0.25),
        dual_row("SOIC-14", BodyDims::new(8.65, 3.9, 1.75), 7, 1.27, 2.5, (0.41, 1.0), 0.25),
        dual_row("TSSOP-14", BodyDims::new(5.0, 4.4, 1.2), 7, 0.65, 2.85, (0.25, 0.6), 0.15),
        tqfp32(),
        qfn20(),
        ufbga15(),
    ];
    for p in packages {
        lib.insert(p).expect("built-in package is valid");
    }
    let aliases = [
        ("R_0603_1608Metric", "0603"),
        ("C_0603_1608Metric", "0603"),
        ("LED_0603_1608Metric", "0603"),
        ("R_0805_2012Metric", "0805"),
        ("C_0805_2012Metric", "0805"),
        ("LED_0805_2012Metric", "0805"),
        ("R_1206_3216Metric", "1206"),
        ("C_1206_3216Metric", "1206"),
        ("LED_1206_3216Metric", "1206"),
        ("SOIC-8_3.9x4.9mm_P1.27mm", "SOIC-8"),
        ("SOIC-14_3.9x8.7mm_P1.27mm", "SOIC-14"),
        ("TSSOP-14_4.4x5mm_P0.65mm", "TSSOP-14"),
        ("TQFP-32_7x7mm_P0.8mm", "TQFP-32"),
        ("QFN-20_4x4mm_P0.65mm", "QFN-20"),
        ("UFBGA-15_2.5x2.5mm_P0.65mm", "UFBGA-15"),
    ];
    for (a, p) in aliases {
        lib.add_alias(a, p).expect("built-in aliases are unique");
    }
    lib
}
