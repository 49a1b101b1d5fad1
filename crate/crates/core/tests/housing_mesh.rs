mod common;

use std::f64::consts::PI;
use std::time::Instant;

use housingforge::bolts::{plan_bolts, BoltPlan, HoleOrigin, PlanConfig, PlannedHole, SpanCalibration};
use housingforge::drc::{error_count, run_drc};
use housingforge::geom::{Point2, Polygon2};
use housingforge::housing::{build_housing, hole_ring, HousingConfig, MeshError};
use housingforge::mesh::{emit_stl, mesh_diagnostics, point_in_mesh};
use housingforge::model::BoardDesign;

fn plan_for(board: &BoardDesign, t: f64) -> BoltPlan {
    plan_bolts(board, t, &SpanCalibration::default(), &PlanConfig::default()).unwrap()
}

fn empty_board(w: f64, h: f64) -> BoardDesign {
    BoardDesign {
        name: "blank".into(),
        outline: Polygon2::rect(Point2::new(0.0, 0.0), Point2::new(w, h)).unwrap(),
        thickness: 1.6,
        components: vec![],
        free_pads: vec![],
    }
}

#[test]
fn validation_boards_are_sound_and_match_the_reference() {
    let started = Instant::now();
    let cfg = HousingConfig::default();
    for name in common::VALIDATION {
        let board = common::load(name);
        let plan = plan_for(&board, cfg.thickness);
        let mesh = build_housing(&board, &plan, &cfg).unwrap();
        let d = mesh_diagnostics(&mesh);
        assert!(d.watertight && d.components == 1, "{name}: {}", d.summary());
        assert_eq!(d.degenerate_triangles, 0, "{name}");
        let report = common::oracle::sample(&board, &plan, &cfg, &mesh, 10_000, 7);
        assert!(report.mismatches.is_empty(), "{name}: {:?}", &report.mismatches[..report.mismatches.len().min(5)]);
        assert!(report.checked >= 9_000, "{name}: only {} probes decisive", report.checked);
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "{elapsed:.1} s");
}

#[test]
fn every_fixture_builds_a_sound_housing() {
    for name in common::board_fixtures() {
        let board = common::load(&name);
        for t in [2.0, 3.0, 5.0] {
            let cfg = HousingConfig { thickness: t, ..HousingConfig::default() };
            let plan = plan_for(&board, t);
            let mesh = match build_housing(&board, &plan, &cfg) {
                Ok(m) => m,
                // Refusals must be foreseen by the rule check.
                Err(e) => {
                    let v = run_drc(&board, &plan, &cfg, &SpanCalibration::default(), &PlanConfig::default());
                    assert!(error_count(&v) > 0, "{name} at {t}: {e} without a rule error");
                    continue;
                }
            };
            let d = mesh_diagnostics(&mesh);
            assert!(d.is_sound(), "{name} at {t}: {}", d.summary());
            assert!(d.signed_volume > 0.0);
            if !board.components.is_empty() {
                assert!(d.signed_volume < board.outline.area() * t, "{name}: nothing subtracted");
            }
            let (lo, hi) = d.bbox.unwrap();
            assert!(lo[2].abs() < 1e-9 && (hi[2] - t).abs() < 1e-9, "{name}: z range {lo:?} {hi:?}");
            let report = common::oracle::sample(&board, &plan, &cfg, &mesh, 2_000, 11);
            assert!(report.mismatches.is_empty(), "{name} at {t}: {:?}", report.mismatches.first());
        }
    }
}

#[test]
fn cavities_and_hole_axes_are_open() {
    let cfg = HousingConfig::default();
    for name in ["timer", "bristlebot-v3", "validation-tqfp32"] {
        let board = common::load(name);
        let plan = plan_for(&board, cfg.thickness);
        let mesh = build_housing(&board, &plan, &cfg).unwrap();
        for h in &plan.holes {
            assert!(!point_in_mesh(&mesh, [h.center.x, h.center.y, cfg.thickness / 2.0]), "{name}: hole at {:?}", h.center);
        }
        for c in &board.components {
            let p = c.placement.position;
            assert!(!point_in_mesh(&mesh, [p.x, p.y, 0.05]), "{name}: {} pocket is filled", c.ref_des);
        }
    }
}

#[test]
fn box_with_one_hole_matches_analytic_volume() {
    let started = Instant::now();
    let cfg = HousingConfig::default();
    let (w, h, d) = (30.0, 20.0, 3.0);
    let board = empty_board(w, h);
    let plan = BoltPlan {
        holes: vec![PlannedHole { center: Point2::new(15.0, 10.0), diameter: d, origin: HoleOrigin::Shared { station: 0 } }],
        coverage: Default::default(),
        span_limit: 27.0,
    };
    let mesh = build_housing(&board, &plan, &cfg).unwrap();
    let diag = mesh_diagnostics(&mesh);
    assert!(diag.is_sound(), "{}", diag.summary());
    let t = cfg.thickness;
    let analytic = w * h * t - PI * (d / 2.0).powi(2) * t;
    assert!((diag.signed_volume - analytic).abs() / analytic < 0.02);
    // Inscribed polygons remove less than the circle: the mesh is heavier.
    let n = cfg.circle_segments as f64;
    let inscribed = w * h * t - 0.5 * n * (d / 2.0).powi(2) * (2.0 * PI / n).sin() * t;
    assert!((diag.signed_volume - inscribed).abs() < 1e-6);
    assert!(diag.signed_volume > analytic);
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn hole_rings_are_inscribed() {
    for n in [8, 13, 32, 64] {
        let ring = hole_ring(Point2::new(2.0, -1.0), 1.0, n);
        assert_eq!(ring.len(), n);
        for p in ring {
            assert!((p.dist(Point2::new(2.0, -1.0)) - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let board = empty_board(20.0, 20.0);
    let hole = |x: f64, d: f64| BoltPlan {
        holes: vec![PlannedHole { center: Point2::new(x, 10.0), diameter: d, origin: HoleOrigin::Shared { station: 0 } }],
        coverage: Default::default(),
        span_limit: 27.0,
    };
    let cfg = HousingConfig::default();
    assert!(build_housing(&board, &hole(10.0, 0.5), &cfg).is_err(), "undersized bolt hole");
    assert!(build_housing(&board, &hole(19.8, 1.0), &cfg).is_err(), "hole crossing the edge");
    let thin = HousingConfig { thickness: 0.5, ..cfg };
    assert!(matches!(build_housing(&board, &hole(10.0, 1.0), &thin), Err(MeshError::Config(_))));
}

#[test]
fn stl_output_is_stable() {
    let cfg = HousingConfig::default();
    let board = common::load("timer");
    let plan = plan_for(&board, cfg.thickness);
    let a = build_housing(&board, &plan, &cfg).unwrap();
    let b = build_housing(&board, &plan, &cfg).unwrap();
    let (sa, sb) = (emit_stl(&a, false), emit_stl(&b, false));
    assert_eq!(sa, sb);
    assert_eq!(sa.len(), 84 + 50 * a.triangles.len());
    assert_eq!(u32::from_le_bytes(sa[80..84].try_into().unwrap()) as usize, a.triangles.len());
    let ascii = String::from_utf8(emit_stl(&a, true)).unwrap();
    assert_eq!(ascii.matches("facet normal").count(), a.triangles.len());
}
