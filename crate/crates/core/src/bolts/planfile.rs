//! `boltplan v1` text format.
//!
//! ```text
//! boltplan v1
//! span-limit 27
//! hole 9.09 5.5 1 shared 0
//! hole 20 20 1 ic U1
//! cover R1 pair 0 1
//! cover R2 span 0 1 2 3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BoltPlan, Certificate, HoleOrigin, PlannedHole};
use crate::geom::Point2;
use crate::ingest::text::{decode_utf8, expect_header, tokenize, Line, Quoted, SyntaxError};

fn index(line: &Line, i: usize) -> Result<usize, SyntaxError> {
    line.tokens
        .get(i)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SyntaxError::at(line, format!("argument {i} must be a hole index")))
}

pub fn parse_plan(bytes: &[u8]) -> Result<BoltPlan, SyntaxError> {
    let src = decode_utf8(bytes)?;
    let lines = tokenize(src)?;
    let body = expect_header(&lines, "boltplan", 1)?;
    let mut plan = BoltPlan { holes: Vec::new(), coverage: BTreeMap::new(), span_limit: 0.0 };
    for line in body {
        match line.keyword() {
            "span-limit" => {
                line.expect_args(1)?;
                plan.span_limit = line.number_at(1)?;
            }
            "hole" => {
                let a = line.expect_args(5)?;
                let origin = match a[3].as_str() {
                    "shared" => HoleOrigin::Shared { station: index(line, 5)? },
                    "ic" => HoleOrigin::IcPreallocated(a[4].clone()),
                    other => return Err(SyntaxError::at(line, format!("unknown hole origin `{other}`"))),
                };
                let diameter = line.number_at(3)?;
                if diameter <= 0.0 {
                    return Err(SyntaxError::at(line, "hole diameter must be positive"));
                }
                plan.holes.push(PlannedHole {
                    center: Point2::new(line.number_at(1)?, line.number_at(2)?),
                    diameter,
                    origin,
                });
            }
            "cover" => {
                let a = line.args();
                if a.len() < 2 {
                    return Err(SyntaxError::at(line, "`cover` needs a reference and a certificate"));
                }
                let cert = match a[1].as_str() {
                    "pair" if a.len() == 4 => Certificate::Pair([index(line, 3)?, index(line, 4)?]),
                    "span" if a.len() == 6 => {
                        Certificate::Span([index(line, 3)?, index(line, 4)?, index(line, 5)?, index(line, 6)?])
                    }
                    _ => return Err(SyntaxError::at(line, "expected `pair i j` or `span a1 a2 b1 b2`")),
                };
                if plan.coverage.insert(a[0].clone(), cert).is_some() {
                    return Err(SyntaxError::at(line, format!("{} covered twice", a[0])));
                }
            }
            other => return Err(SyntaxError::at(line, format!("unknown keyword `{other}`"))),
        }
    }
    Ok(plan)
}

pub fn serialize_plan(plan: &BoltPlan) -> String {
    let mut out = String::from("boltplan v1\n");
    let _ = writeln!(out, "span-limit {}", plan.span_limit);
    for h in &plan.holes {
        let _ = write!(out, "hole {} {} {} ", h.center.x, h.center.y, h.diameter);
        match &h.origin {
            HoleOrigin::Shared { station } => {
                let _ = writeln!(out, "shared {station}");
            }
            HoleOrigin::IcPreallocated(r) => {
                let _ = writeln!(out, "ic {}", Quoted(r));
            }
        }
    }
    for (r, cert) in &plan.coverage {
        let _ = write!(out, "cover {} ", Quoted(r));
        match cert {
            Certificate::Pair([a, b]) => {
                let _ = writeln!(out, "pair {a} {b}");
            }
            Certificate::Span([a1, a2, b1, b2]) => {
                let _ = writeln!(out, "span {a1} {a2} {b1} {b2}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let plan = BoltPlan {
            holes: vec![
                PlannedHole { center: Point2::new(0.1, 2.0), diameter: 1.0, origin: HoleOrigin::Shared { station: 0 } },
                PlannedHole { center: Point2::new(4.9, 2.0), diameter: 1.0, origin: HoleOrigin::Shared { station: 0 } },
                PlannedHole { center: Point2::new(20.0, -3.5), diameter: 1.2, origin: HoleOrigin::IcPreallocated("U 1".into()) },
            ],
            coverage: [("R1".to_string(), Certificate::Pair([0, 1]))].into_iter().collect(),
            span_limit: 27.0,
        };
        let text = serialize_plan(&plan);
        assert_eq!(parse_plan(text.as_bytes()).unwrap(), plan);
        assert!(parse_plan(b"boltplan v1\nhole 1 2 1 shared x\n").is_err());
        assert!(parse_plan(b"boltplan v1\ncover R1 pair 0\n").is_err());
    }
}
