use super::*;
use crate::geom::{Placement, Polygon2};
use crate::ingest::default_library;

fn board(w: f64, h: f64, parts: &[(&str, &str, f64, f64, f64)]) -> BoardDesign {
    let lib = default_library();
    BoardDesign {
        name: "t".into(),
        outline: Polygon2::rect(Point2::new(0.0, 0.0), Point2::new(w, h)).unwrap(),
        thickness: 1.6,
        components: parts
            .iter()
            .map(|(r, p, x, y, rot)| ComponentInstance {
                ref_des: r.to_string(),
                package: lib.get(p).unwrap().clone(),
                placement: Placement::new(*x, *y, *rot),
                part_number: p.to_string(),
                nets_by_pad: Default::default(),
            })
            .collect(),
        free_pads: vec![],
    }
}

fn plan(b: &BoardDesign) -> BoltPlan {
    plan_bolts(b, 3.0, &SpanCalibration::default_model(), &PlanConfig::default()).unwrap()
}

#[test]
fn single_part_gets_one_flanking_pair() {
    let b = board(20.0, 20.0, &[("R1", "0805", 10.0, 10.0, 0.0)]);
    let p = plan(&b);
    assert_eq!(p.holes.len(), 2);
    assert_eq!(p.station_count(), 1);
    let (a, c) = (p.holes[0].center, p.holes[1].center);
    assert!((a.y - 10.0).abs() < 1e-9 && (c.y - 10.0).abs() < 1e-9);
    assert!(a.x < 10.0 && c.x > 10.0);
    assert!(verify_plan(&b, &p, 3.0, &SpanCalibration::default_model(), &PlanConfig::default()).is_empty());
}

#[test]
fn ic_offsets_are_transformed() {
    let b = board(30.0, 30.0, &[("U1", "TQFP-32", 10.0, 10.0, 90.0)]);
    let p = plan(&b);
    assert_eq!(p.ic_hole_count(), 4);
    let lib = default_library();
    for o in &lib.get("TQFP-32").unwrap().bolt_offsets {
        let want = Point2::new(10.0 - o.y, 10.0 + o.x);
        assert!(p.holes.iter().any(|h| h.center.dist(want) < 1e-9));
    }
}

#[test]
fn verifier_flags_deleted_and_crowded_holes() {
    let b = board(20.0, 20.0, &[("R1", "0805", 10.0, 10.0, 0.0)]);
    let cal = SpanCalibration::default_model();
    let cfg = PlanConfig::default();
    let mut p = plan(&b);
    p.holes.remove(1);
    let v = verify_plan(&b, &p, 3.0, &cal, &cfg);
    assert!(v.iter().any(|v| matches!(v, PlanViolation::Uncovered { ref_des } if ref_des == "R1")));
    let mut p = plan(&b);
    let extra = PlannedHole { center: p.holes[0].center + Point2::new(0.0, 0.5), diameter: 1.0, origin: HoleOrigin::Shared { station: 9 } };
    p.holes.push(extra);
    let v = verify_plan(&b, &p, 3.0, &cal, &cfg);
    assert!(v.iter().any(|v| matches!(v, PlanViolation::HoleSpacing { .. })));
}

#[test]
fn extending_a_covered_plan_adds_nothing() {
    let b = board(40.0, 60.0, &[
        ("R1", "0805", 10.0, 10.0, 0.0),
        ("R2", "0805", 10.0, 14.0, 0.0),
        ("R3", "0805", 10.0, 40.0, 0.0),
        ("C1", "1206", 30.0, 20.0, 90.0),
    ]);
    let p = plan(&b);
    let again = extend_plan(&b, 3.0, &SpanCalibration::default_model(), &PlanConfig::default(), &p.holes).unwrap();
    assert_eq!(again.holes, p.holes);
}
