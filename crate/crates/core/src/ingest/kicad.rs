//! KiCad `.kicad_pcb` subset: footprints and the Edge.Cuts outline.
//!
//! Board y grows downward in KiCad and is negated on import. Arcs on
//! Edge.Cuts are replaced by chords. Back-side footprints are rejected.

use std::collections::{BTreeMap, BTreeSet};

use super::library::LibraryFile;
use super::sexpr::{self, Sexp};
use super::text::{decode_utf8, SyntaxError};
use super::{assemble_outline, IngestError, ParsedBoard};
use crate::geom::{signed_area, Placement, Point2, EPS};
use crate::model::{BoardDesign, ComponentInstance};

const DEFAULT_THICKNESS: f64 = 1.6;
const CHAIN_TOLERANCE: f64 = 1e-6;
const CIRCLE_SEGMENTS: usize = 32;

fn xy(form: &Sexp) -> Option<Point2> {
    Some(Point2::new(form.number(1)?, -form.number(2)?))
}

fn on_layer(form: &Sexp, layer: &str) -> bool {
    form.child("layer").and_then(|l| l.atom(1)) == Some(layer)
}

fn property(fp: &Sexp, key: &str) -> Option<String> {
    let from_property = fp
        .children("property")
        .find(|p| p.atom(1) == Some(key))
        .and_then(|p| p.atom(2));
    let from_text = || {
        fp.children("fp_text")
            .find(|t| t.atom(1).is_some_and(|k| k.eq_ignore_ascii_case(key)))
            .and_then(|t| t.atom(2))
    };
    from_property.or_else(from_text).map(str::to_string)
}

fn malformed(what: &str) -> IngestError {
    IngestError::Syntax(SyntaxError::new(0, 0, format!("malformed {what}")))
}

/// Collects Edge.Cuts geometry as straight segments.
fn edge_segments(item: &Sexp, warnings: &mut Vec<String>, segs: &mut Vec<(Point2, Point2)>) -> Result<(), IngestError> {
    let head = item.head().unwrap_or("");
    match head {
        "gr_line" => {
            let a = item.child("start").and_then(xy).ok_or_else(|| malformed("gr_line"))?;
            let b = item.child("end").and_then(xy).ok_or_else(|| malformed("gr_line"))?;
            segs.push((a, b));
        }
        "gr_rect" => {
            let a = item.child("start").and_then(xy).ok_or_else(|| malformed("gr_rect"))?;
            let b = item.child("end").and_then(xy).ok_or_else(|| malformed("gr_rect"))?;
            let c = [a, Point2::new(b.x, a.y), b, Point2::new(a.x, b.y)];
            for i in 0..4 {
                segs.push((c[i], c[(i + 1) % 4]));
            }
        }
        "gr_poly" => {
            let pts: Vec<Point2> = item
                .child("pts")
                .map(|p| p.children("xy").filter_map(xy).collect())
                .ok_or_else(|| malformed("gr_poly"))?;
            for i in 0..pts.len() {
                segs.push((pts[i], pts[(i + 1) % pts.len()]));
            }
        }
        "gr_arc" => {
            let a = item.child("start").and_then(xy).ok_or_else(|| malformed("gr_arc"))?;
            let b = item.child("end").and_then(xy).ok_or_else(|| malformed("gr_arc"))?;
            warnings.push("Edge.Cuts arc approximated by its chord".to_string());
            segs.push((a, b));
        }
        "gr_circle" => {
            let c = item.child("center").and_then(xy).ok_or_else(|| malformed("gr_circle"))?;
            let e = item.child("end").and_then(xy).ok_or_else(|| malformed("gr_circle"))?;
            let r = c.dist(e);
            let pts: Vec<Point2> = (0..CIRCLE_SEGMENTS)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / CIRCLE_SEGMENTS as f64;
                    Point2::new(c.x + r * a.cos(), c.y + r * a.sin())
                })
                .collect();
            for i in 0..pts.len() {
                segs.push((pts[i], pts[(i + 1) % pts.len()]));
            }
        }
        other => warnings.push(format!("Edge.Cuts item `{other}` ignored")),
    }
    Ok(())
}

/// Joins segments into closed loops by matching endpoints.
fn chain_loops(mut segs: Vec<(Point2, Point2)>) -> Result<Vec<Vec<Point2>>, IngestError> {
    segs.retain(|(a, b)| a.dist(*b) > CHAIN_TOLERANCE);
    let mut loops = Vec::new();
    while let Some((start, mut cur)) = segs.pop() {
        let mut ring = vec![start];
        while cur.dist(start) > CHAIN_TOLERANCE {
            ring.push(cur);
            let next = segs
                .iter()
                .position(|(a, b)| a.dist(cur) <= CHAIN_TOLERANCE || b.dist(cur) <= CHAIN_TOLERANCE)
                .ok_or_else(|| IngestError::DegenerateOutline(format!("Edge.Cuts path is open at ({}, {})", cur.x, -cur.y)))?;
            let (a, b) = segs.swap_remove(next);
            cur = if a.dist(cur) <= CHAIN_TOLERANCE { b } else { a };
        }
        loops.push(ring);
    }
    Ok(loops)
}

pub fn parse_kicad(bytes: &[u8], lib: &LibraryFile) -> Result<ParsedBoard, IngestError> {
    let src = decode_utf8(bytes)?;
    let root = sexpr::parse(src)?;
    if root.head() != Some("kicad_pcb") {
        return Err(SyntaxError::new(1, 1, "expected `(kicad_pcb ...)`").into());
    }
    let mut warnings = Vec::new();
    let thickness = root
        .child("general")
        .and_then(|g| g.child("thickness"))
        .and_then(|t| t.number(1))
        .unwrap_or(DEFAULT_THICKNESS);

    let mut segs = Vec::new();
    let mut components = Vec::new();
    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();
    let known: BTreeSet<&str> = ["version", "generator", "generator_version", "general", "paper", "layers", "setup", "net"]
        .into_iter()
        .collect();

    for item in root.as_list().unwrap_or(&[]).iter().skip(1) {
        let Some(head) = item.head() else { continue };
        match head {
            "footprint" | "module" => {
                let footprint = item.atom(1).ok_or_else(|| malformed("footprint"))?.to_string();
                let reference = property(item, "Reference").ok_or_else(|| malformed("footprint reference"))?;
                if on_layer(item, "B.Cu") {
                    return Err(IngestError::BottomSideComponent(reference));
                }
                let at = item.child("at").ok_or_else(|| malformed("footprint position"))?;
                let pos = xy(at).ok_or_else(|| malformed("footprint position"))?;
                let rotation = at.number(3).unwrap_or(0.0);
                let package = lib.resolve(&footprint).cloned().ok_or_else(|| IngestError::UnknownPackage {
                    ref_des: reference.clone(),
                    name: footprint.clone(),
                })?;
                let part_number = property(item, "MPN")
                    .or_else(|| property(item, "Value"))
                    .unwrap_or_else(|| package.name.clone());
                let mut nets_by_pad = BTreeMap::new();
                for pad in item.children("pad") {
                    let Some(name) = pad.atom(1).filter(|n| !n.is_empty()) else { continue };
                    if let Some(net) = pad.child("net").and_then(|n| n.atom(2).or(n.atom(1))) {
                        if !net.is_empty() {
                            nets_by_pad.insert(name.to_string(), net.to_string());
                        }
                    }
                }
                components.push(ComponentInstance {
                    ref_des: reference,
                    package,
                    placement: Placement::new(pos.x, pos.y, rotation),
                    part_number,
                    nets_by_pad,
                });
            }
            "gr_line" | "gr_rect" | "gr_poly" | "gr_arc" | "gr_circle" if on_layer(item, "Edge.Cuts") => {
                edge_segments(item, &mut warnings, &mut segs)?;
            }
            h if known.contains(h) => {}
            h => *skipped.entry(h.to_string()).or_default() += 1,
        }
    }
    for (head, n) in skipped {
        warnings.push(format!("skipped {n} `{head}` section(s)"));
    }

    // Zero-length edges are dropped while chaining, so check afterwards.
    let mut loops = chain_loops(segs)?;
    if loops.is_empty() {
        return Err(IngestError::MissingOutline);
    }
    loops.sort_by(|a, b| signed_area(b).abs().total_cmp(&signed_area(a).abs()));
    if signed_area(&loops[0]).abs() <= EPS {
        return Err(IngestError::DegenerateOutline("Edge.Cuts encloses no area".to_string()));
    }
    let outer = loops.remove(0);
    let outline = assemble_outline(outer, loops)?;

    let board = BoardDesign {
        name: "board".to_string(),
        outline,
        thickness,
        components,
        free_pads: Vec::new(),
    };
    board.validate()?;
    Ok(ParsedBoard { board, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::library::default_library;

    const BOARD: &str = r#"(kicad_pcb (version 20221018) (generator pcbnew)
  (general (thickness 1.6))
  (layers (0 "F.Cu" signal))
  (net 0 "") (net 1 "VCC")
  (footprint "Resistor_SMD:R_0805_2012Metric" (layer "F.Cu") (at 10 -5 90)
    (property "Reference" "R1") (property "Value" "10k")
    (pad "1" smd rect (at -0.9 0) (size 1 1.2) (layers "F.Cu") (net 1 "VCC"))
    (pad "2" smd rect (at 0.9 0) (size 1 1.2) (layers "F.Cu") (net 0 "")))
  (gr_rect (start 0 0) (end 20 -10) (layer "Edge.Cuts"))
  (gr_text "hello" (at 1 1) (layer "F.SilkS"))
  (segment (start 0 0) (end 1 1) (width 0.2) (layer "F.Cu") (net 1))
  (segment (start 1 1) (end 2 2) (width 0.2) (layer "F.Cu") (net 1)))"#;

    #[test]
    fn imports_footprints_and_outline() {
        let parsed = parse_kicad(BOARD.as_bytes(), &default_library()).unwrap();
        let b = &parsed.board;
        assert_eq!(b.components.len(), 1);
        let r1 = &b.components[0];
        assert_eq!(r1.package.name, "0805");
        assert_eq!(r1.part_number, "10k");
        assert_eq!(r1.placement.position, Point2::new(10.0, 5.0));
        assert_eq!(r1.placement.rotation, 90.0);
        assert_eq!(r1.nets_by_pad.get("1").map(String::as_str), Some("VCC"));
        assert!(!r1.nets_by_pad.contains_key("2"));
        assert!((b.outline.area() - 200.0).abs() < 1e-9);
        assert!(parsed.warnings.iter().any(|w| w.contains("2 `segment`")));
        assert!(parsed.warnings.iter().any(|w| w.contains("gr_text")));
    }

    #[test]
    fn rejects_back_side_and_unknown() {
        let back = BOARD.replace("(layer \"F.Cu\") (at 10", "(layer \"B.Cu\") (at 10");
        assert!(matches!(
            parse_kicad(back.as_bytes(), &default_library()),
            Err(IngestError::BottomSideComponent(r)) if r == "R1"
        ));
        let unknown = BOARD.replace("R_0805_2012Metric", "R_0402_1005Metric");
        assert!(matches!(
            parse_kicad(unknown.as_bytes(), &default_library()),
            Err(IngestError::UnknownPackage { .. })
        ));
        let open = BOARD.replace("(gr_rect (start 0 0) (end 20 -10) (layer \"Edge.Cuts\"))",
            "(gr_line (start 0 0) (end 20 0) (layer \"Edge.Cuts\")) (gr_line (start 20 0) (end 20 -10) (layer \"Edge.Cuts\"))");
        assert!(matches!(
            parse_kicad(open.as_bytes(), &default_library()),
            Err(IngestError::DegenerateOutline(_))
        ));
    }
}
