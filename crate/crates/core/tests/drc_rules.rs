mod common;

use housingforge::bolts::{plan_bolts, BoltPlan, Certificate, HoleOrigin, PlanConfig, PlannedHole, SpanCalibration};
use housingforge::cavity::MaterialProfile;
use housingforge::drc::{
    assembly_report, error_count, estimate_contact_resistance, run_drc, ContactEstimate, DrcError, RuleViolation, Severity,
};
use housingforge::geom::{Placement, Point2, Polygon2};
use housingforge::housing::{build_housing, HousingConfig};
use housingforge::ingest::default_library;
use housingforge::mesh::mesh_diagnostics;
use housingforge::model::{BoardDesign, ComponentInstance, PackageClass, PackageSpec, Rect};
use proptest::prelude::*;

const REPLICAS: [&str; 9] = [
    "validation-soic8",
    "validation-tssop14",
    "validation-tqfp32",
    "validation-qfn20",
    "validation-ufbga15",
    "timer",
    "scoreboard",
    "bristlebot-v1",
    "bristlebot-v3",
];

fn part(r: &str, pkg: &PackageSpec, x: f64, y: f64, rot: f64) -> ComponentInstance {
    ComponentInstance {
        ref_des: r.into(),
        package: pkg.clone(),
        placement: Placement::new(x, y, rot),
        part_number: "P".into(),
        nets_by_pad: Default::default(),
    }
}

fn board(components: Vec<ComponentInstance>) -> BoardDesign {
    BoardDesign {
        name: "t".into(),
        outline: Polygon2::rect(Point2::new(0.0, 0.0), Point2::new(50.0, 30.0)).unwrap(),
        thickness: 1.6,
        components,
        free_pads: vec![],
    }
}

fn check(b: &BoardDesign, cfg: &HousingConfig) -> Vec<RuleViolation> {
    let plan = plan_bolts(b, cfg.thickness, &SpanCalibration::default(), &PlanConfig::default()).unwrap();
    run_drc(b, &plan, cfg, &SpanCalibration::default(), &PlanConfig::default())
}

fn rules(v: &[RuleViolation], severity: Severity) -> Vec<u8> {
    let mut r: Vec<u8> = v.iter().filter(|x| x.severity == severity).map(|x| x.rule).collect();
    r.dedup();
    r
}

#[test]
fn replica_fixtures_have_no_errors() {
    let cfg = HousingConfig::default();
    for name in REPLICAS {
        let v = check(&common::load(name), &cfg);
        assert_eq!(error_count(&v), 0, "{name}: {v:#?}");
    }
}

#[test]
fn r1_rejects_parts_below_0603() {
    let v = check(&common::load("tiny-0402"), &HousingConfig::default());
    let r1: Vec<_> = v.iter().filter(|x| x.rule == 1).collect();
    assert_eq!(r1.len(), 1);
    assert_eq!(r1[0].severity, Severity::Error);
    assert_eq!(r1[0].subject, "R1");
    assert_eq!(r1[0].rule_id(), "R1");
}

#[test]
fn r2_r3_flag_fine_pitch_and_small_pads() {
    let lib = default_library();
    let v = check(&common::load("validation-tssop14"), &HousingConfig::default());
    assert!(!v.iter().any(|x| x.rule == 2 || x.rule == 3), "{v:#?}");

    let mut fine = lib.get("TSSOP-14").unwrap().clone();
    fine.name = "FINE-14".into();
    for p in &mut fine.pins {
        let i: f64 = p.name.parse().unwrap();
        let col = if i <= 7.0 { i - 4.0 } else { 11.0 - i };
        p.rect = Rect::new(col * 0.5, p.rect.center.y, 0.2, 0.3);
    }
    fine.validate().unwrap();
    let v = check(&board(vec![part("U1", &fine, 25.0, 15.0, 0.0)]), &HousingConfig::default());
    let r2 = v.iter().find(|x| x.rule == 2).expect("R2");
    assert_eq!(r2.severity, Severity::Warning);
    assert_eq!((r2.measured, r2.limit), (Some(0.5), Some(0.6)));
    let r3 = v.iter().find(|x| x.rule == 3).expect("R3");
    assert_eq!(r3.severity, Severity::Warning);
    assert!((r3.measured.unwrap() - 0.06).abs() < 1e-12);
    assert_eq!(error_count(&v), 0, "{v:#?}");
}

#[test]
fn r4_flags_a_30mm_span_at_3mm() {
    let lib = default_library();
    let b = board(vec![part("R1", lib.get("0805").unwrap(), 25.0, 15.0, 90.0)]);
    let hole = |x: f64, s: usize| PlannedHole { center: Point2::new(x, 15.0), diameter: 1.0, origin: HoleOrigin::Shared { station: s } };
    let plan = BoltPlan {
        holes: vec![hole(10.0, 0), hole(40.0, 1)],
        coverage: [("R1".to_string(), Certificate::Pair([0, 1]))].into(),
        span_limit: 27.0,
    };
    let v = run_drc(&b, &plan, &HousingConfig::default(), &SpanCalibration::default(), &PlanConfig::default());
    let r4 = v.iter().find(|x| x.rule == 4).expect("R4");
    assert_eq!(r4.severity, Severity::Error);
    assert_eq!(r4.subject, "R1");
    assert_eq!(r4.measured, Some(30.0));
    assert_eq!(r4.limit, Some(27.0));
}

#[test]
fn r5_requires_raised_pads_for_bottom_contacts() {
    let lib = default_library();
    let qfn = lib.get("QFN-20").unwrap();
    assert!(matches!(qfn.class, PackageClass::IcBottomPad) && qfn.raised_pad_required);
    let v = check(&board(vec![part("U1", qfn, 25.0, 15.0, 0.0)]), &HousingConfig::default());
    assert_eq!(rules(&v, Severity::Error), Vec::<u8>::new());
    assert!(v.iter().any(|x| x.rule == 5 && x.severity == Severity::Info));

    let mut flat = qfn.clone();
    flat.raised_pad_required = false;
    let v = check(&board(vec![part("U1", &flat, 25.0, 15.0, 0.0)]), &HousingConfig::default());
    assert!(v.iter().any(|x| x.rule == 5 && x.severity == Severity::Error), "{v:#?}");
}

#[test]
fn r6_rejects_tabs_on_coarse_profiles() {
    let lib = default_library();
    let b = board(vec![part("R1", lib.get("0805").unwrap(), 25.0, 15.0, 0.0)]);
    for profile in [MaterialProfile::FdmPla, MaterialProfile::CncMdf] {
        let cfg = HousingConfig { profile, ..HousingConfig::default() };
        let plan = plan_bolts(&b, cfg.thickness, &SpanCalibration::default(), &PlanConfig::default()).unwrap();
        let v = run_drc(&b, &plan, &cfg, &SpanCalibration::default(), &PlanConfig::default());
        assert!(v.iter().any(|x| x.rule == 6 && x.severity == Severity::Error), "{profile:?}: {v:#?}");
    }
    let cfg = HousingConfig { profile: MaterialProfile::FdmPla, ..HousingConfig::default() };
    let soic = board(vec![part("U1", lib.get("SOIC-8").unwrap(), 25.0, 15.0, 0.0)]);
    assert!(!check(&soic, &cfg).iter().any(|x| x.rule == 6));
}

#[test]
fn r7_flags_holes_near_pads() {
    let lib = default_library();
    let b = board(vec![part("R1", lib.get("0805").unwrap(), 25.0, 15.0, 0.0)]);
    let mut plan = plan_bolts(&b, 3.0, &SpanCalibration::default(), &PlanConfig::default()).unwrap();
    plan.holes[0].center = Point2::new(25.0 + 1.6, 15.0);
    let v = run_drc(&b, &plan, &HousingConfig::default(), &SpanCalibration::default(), &PlanConfig::default());
    let r7 = v.iter().find(|x| x.rule == 7).expect("R7");
    assert_eq!(r7.severity, Severity::Error);
    assert!(r7.measured.unwrap() < 0.8 && r7.limit == Some(0.8));
}

#[test]
fn r8_flags_thin_ceilings() {
    let lib = default_library();
    let b = board(vec![part("U1", lib.get("SOIC-8").unwrap(), 25.0, 15.0, 0.0)]);
    let ok = check(&b, &HousingConfig::default());
    assert!(!ok.iter().any(|x| x.rule == 8));
    let thin = HousingConfig { thickness: 2.2, ..HousingConfig::default() };
    let v = check(&b, &thin);
    let r8 = v.iter().find(|x| x.rule == 8).expect("R8");
    assert_eq!(r8.severity, Severity::Error);
    assert_eq!(r8.limit, Some(0.6));
    assert!((r8.measured.unwrap() - (2.2 - 1.75 - 0.1)).abs() < 1e-9);
}

#[test]
fn contact_estimates_follow_the_model() {
    assert_eq!(ContactEstimate::for_contacts(0), ContactEstimate { contacts: 0, mean: 0.0, sigma: 0.0 });
    let one = ContactEstimate::for_contacts(1);
    assert_eq!((one.mean, one.sigma), (0.46, 0.139));
    let four = ContactEstimate::for_contacts(4);
    assert!((four.mean - 1.84).abs() < 1e-12 && (four.sigma - 0.278).abs() < 1e-12);

    let timer = common::load("timer");
    let gnd = estimate_contact_resistance(&timer, "GND").unwrap();
    let pads = timer.components.iter().flat_map(|c| c.nets_by_pad.values()).filter(|n| *n == "GND").count();
    assert_eq!(gnd, ContactEstimate::for_contacts(pads));
    assert!(matches!(estimate_contact_resistance(&timer, "NOPE"), Err(DrcError::UnknownNet(_))));
}

#[test]
fn assembly_report_lists_the_essentials() {
    let b = common::load("timer");
    let cfg = HousingConfig::default();
    let cal = SpanCalibration::default();
    let plan = plan_bolts(&b, cfg.thickness, &cal, &PlanConfig::default()).unwrap();
    let v = run_drc(&b, &plan, &cfg, &cal, &PlanConfig::default());
    let report = assembly_report(&b, &plan, &cfg, &cal, &v);
    assert_eq!(report.bolt_count, plan.holes.len());
    assert_eq!(report.torque_nm, 0.01);
    let text = report.render();
    assert!(text.contains("UNCALIBRATED"));
    assert!(text.contains("0.01 N"));
    assert!(text.contains("GND"));
}

proptest! {
    #[test]
    fn contact_estimates_add_over_disjoint_sets(a in 0usize..200, b in 0usize..200) {
        let (x, y, z) = (ContactEstimate::for_contacts(a), ContactEstimate::for_contacts(b), ContactEstimate::for_contacts(a + b));
        prop_assert!((x.mean + y.mean - z.mean).abs() < 1e-9);
        prop_assert!((x.sigma.powi(2) + y.sigma.powi(2) - z.sigma.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn clean_plans_always_mesh(
        parts in prop::collection::vec((0usize..9, 4.0f64..46.0, 4.0f64..26.0, 0.0f64..360.0), 1..5),
        t in prop::sample::select(vec![2.5, 3.0, 4.0]),
    ) {
        let lib = default_library();
        let pkgs: Vec<&PackageSpec> = lib.packages().collect();
        let comps: Vec<ComponentInstance> = parts
            .iter()
            .enumerate()
            .map(|(i, (k, x, y, rot))| part(&format!("X{i}"), pkgs[k % pkgs.len()], *x, *y, *rot))
            .collect();
        let b = board(comps);
        prop_assume!(b.validate().is_ok());
        let cfg = HousingConfig { thickness: t, ..HousingConfig::default() };
        let cal = SpanCalibration::default();
        let Ok(plan) = plan_bolts(&b, t, &cal, &PlanConfig::default()) else { return Ok(()) };
        let v = run_drc(&b, &plan, &cfg, &cal, &PlanConfig::default());
        if error_count(&v) == 0 {
            let mesh = build_housing(&b, &plan, &cfg);
            prop_assert!(mesh.is_ok(), "{:?}", mesh.err());
            let d = mesh_diagnostics(&mesh.unwrap());
            prop_assert!(d.is_sound(), "{}", d.summary());
        }
    }
}
