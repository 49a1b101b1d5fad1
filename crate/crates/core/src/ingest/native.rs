//! `boardspec v1`: the native board description.
//!
//! ```text
//! boardspec v1
//! name demo
//! thickness 1.6
//! outline
//!   vertex 0 0
//!   vertex 40 0
//!   vertex 40 30
//! cutout
//!   vertex 10 10
//!   ...
//! component R1
//!   package 0805
//!   part RC0805FR-0710KL
//!   at 12 8
//!   rotation 90
//!   net 1 VCC
//! pad TP1
//!   rect 30 20 1.5 1.5
//!   net GND
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::library::LibraryFile;
use super::text::{decode_utf8, expect_header, tokenize, Line, Quoted, SyntaxError};
use super::{assemble_outline, IngestError, ParsedBoard};
use crate::geom::{Placement, Point2};
use crate::model::{BoardDesign, ComponentInstance, FreePad, Rect};

pub const BOARD_MAGIC: &str = "boardspec";
pub const BOARD_VERSION: u32 = 1;

enum Section {
    None,
    Outline,
    Cutout(usize),
    Component(usize),
    Pad(usize),
}

struct RawComponent {
    line: usize,
    ref_des: String,
    package: Option<String>,
    part: Option<String>,
    at: Option<Point2>,
    rotation: f64,
    nets: BTreeMap<String, String>,
}

struct RawPad {
    line: usize,
    name: String,
    rect: Option<Rect>,
    net: Option<String>,
}

pub fn parse_native(bytes: &[u8], lib: &LibraryFile) -> Result<ParsedBoard, IngestError> {
    let src = decode_utf8(bytes)?;
    let lines = tokenize(src)?;
    let body = expect_header(&lines, BOARD_MAGIC, BOARD_VERSION)?;

    let mut name: Option<String> = None;
    let mut thickness: Option<f64> = None;
    let mut outline_ring: Option<Vec<Point2>> = None;
    let mut cutouts: Vec<Vec<Point2>> = Vec::new();
    let mut comps: Vec<RawComponent> = Vec::new();
    let mut pads: Vec<RawPad> = Vec::new();
    let mut section = Section::None;

    for line in body {
        let kw = line.keyword();
        match kw {
            "name" => {
                name = Some(line.expect_args(1)?[0].clone());
                section = Section::None;
            }
            "thickness" => {
                line.expect_args(1)?;
                thickness = Some(line.number_at(1)?);
                section = Section::None;
            }
            "outline" => {
                line.expect_args(0)?;
                if outline_ring.is_some() {
                    return Err(SyntaxError::at(line, "second `outline` section").into());
                }
                outline_ring = Some(Vec::new());
                section = Section::Outline;
            }
            "cutout" => {
                line.expect_args(0)?;
                cutouts.push(Vec::new());
                section = Section::Cutout(cutouts.len() - 1);
            }
            "component" => {
                let a = line.expect_args(1)?;
                comps.push(RawComponent {
                    line: line.number,
                    ref_des: a[0].clone(),
                    package: None,
                    part: None,
                    at: None,
                    rotation: 0.0,
                    nets: BTreeMap::new(),
                });
                section = Section::Component(comps.len() - 1);
            }
            "pad" => {
                let a = line.expect_args(1)?;
                pads.push(RawPad { line: line.number, name: a[0].clone(), rect: None, net: None });
                section = Section::Pad(pads.len() - 1);
            }
            _ => match section {
                Section::Outline | Section::Cutout(_) => {
                    if kw != "vertex" {
                        return Err(SyntaxError::at(line, format!("expected `vertex`, got `{kw}`")).into());
                    }
                    line.expect_args(2)?;
                    let p = Point2::new(line.number_at(1)?, line.number_at(2)?);
                    match section {
                        Section::Cutout(i) => cutouts[i].push(p),
                        _ => outline_ring.as_mut().expect("outline section open").push(p),
                    }
                }
                Section::Component(i) => component_item(&mut comps[i], line)?,
                Section::Pad(i) => pad_item(&mut pads[i], line)?,
                Section::None => {
                    return Err(SyntaxError::at(line, format!("unknown keyword `{kw}`")).into());
                }
            },
        }
    }

    let thickness = thickness.ok_or_else(|| SyntaxError::new(1, 1, "missing `thickness`"))?;
    let outline = assemble_outline(outline_ring.ok_or(IngestError::MissingOutline)?, cutouts)?;

    let mut components = Vec::new();
    for c in comps {
        let pkg_name = c
            .package
            .ok_or_else(|| SyntaxError::new(c.line, 1, format!("component {} has no package", c.ref_des)))?;
        let at = c
            .at
            .ok_or_else(|| SyntaxError::new(c.line, 1, format!("component {} has no `at`", c.ref_des)))?;
        let package = lib.resolve(&pkg_name).cloned().ok_or_else(|| IngestError::UnknownPackage {
            ref_des: c.ref_des.clone(),
            name: pkg_name.clone(),
        })?;
        components.push(ComponentInstance {
            part_number: c.part.unwrap_or_default(),
            ref_des: c.ref_des,
            package,
            placement: Placement::new(at.x, at.y, c.rotation),
            nets_by_pad: c.nets,
        });
    }
    let mut free_pads = Vec::new();
    for p in pads {
        let rect = p
            .rect
            .ok_or_else(|| SyntaxError::new(p.line, 1, format!("pad {} has no `rect`", p.name)))?;
        free_pads.push(FreePad { name: p.name, rect, net: p.net });
    }

    let board = BoardDesign {
        name: name.unwrap_or_else(|| "board".to_string()),
        outline,
        thickness,
        components,
        free_pads,
    };
    board.validate()?;
    Ok(ParsedBoard { board, warnings: Vec::new() })
}

fn component_item(c: &mut RawComponent, line: &Line) -> Result<(), SyntaxError> {
    match line.keyword() {
        "package" => c.package = Some(line.expect_args(1)?[0].clone()),
        "part" => c.part = Some(line.expect_args(1)?[0].clone()),
        "at" => {
            line.expect_args(2)?;
            c.at = Some(Point2::new(line.number_at(1)?, line.number_at(2)?));
        }
        "rotation" => {
            line.expect_args(1)?;
            c.rotation = line.number_at(1)?;
        }
        "net" => {
            let a = line.expect_args(2)?;
            if c.nets.insert(a[0].clone(), a[1].clone()).is_some() {
                return Err(SyntaxError::at(line, format!("pad {} assigned twice", a[0])));
            }
        }
        other => return Err(SyntaxError::at(line, format!("unknown component item `{other}`"))),
    }
    Ok(())
}

fn pad_item(p: &mut RawPad, line: &Line) -> Result<(), SyntaxError> {
    match line.keyword() {
        "rect" => {
            line.expect_args(4)?;
            p.rect = Some(Rect::new(line.number_at(1)?, line.number_at(2)?, line.number_at(3)?, line.number_at(4)?));
        }
        "net" => p.net = Some(line.expect_args(1)?[0].clone()),
        other => return Err(SyntaxError::at(line, format!("unknown pad item `{other}`"))),
    }
    Ok(())
}

fn push_ring(out: &mut String, header: &str, ring: &[Point2]) {
    let _ = writeln!(out, "{header}");
    for p in ring {
        let _ = writeln!(out, "  vertex {} {}", p.x, p.y);
    }
}

/// Writes a board in `boardspec v1`. Components reference their package by
/// name, so parsing the output needs a library that defines them.
pub fn serialize_native(board: &BoardDesign) -> String {
    let mut out = format!("{BOARD_MAGIC} v{BOARD_VERSION}\n");
    let _ = writeln!(out, "name {}", Quoted(&board.name));
    let _ = writeln!(out, "thickness {}", board.thickness);
    push_ring(&mut out, "outline", board.outline.outer());
    for hole in board.outline.holes() {
        push_ring(&mut out, "cutout", hole);
    }
    for c in &board.components {
        let _ = writeln!(out, "component {}", Quoted(&c.ref_des));
        let _ = writeln!(out, "  package {}", Quoted(&c.package.name));
        let _ = writeln!(out, "  part {}", Quoted(&c.part_number));
        let _ = writeln!(out, "  at {} {}", c.placement.position.x, c.placement.position.y);
        let _ = writeln!(out, "  rotation {}", c.placement.rotation);
        for (pad, net) in &c.nets_by_pad {
            let _ = writeln!(out, "  net {} {}", Quoted(pad), Quoted(net));
        }
    }
    for p in &board.free_pads {
        let _ = writeln!(out, "pad {}", Quoted(&p.name));
        let r = p.rect;
        let _ = writeln!(out, "  rect {} {} {} {}", r.center.x, r.center.y, r.width, r.height);
        if let Some(net) = &p.net {
            let _ = writeln!(out, "  net {}", Quoted(net));
        }
    }
    out
}
