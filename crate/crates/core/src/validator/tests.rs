use super::*;
use crate::benchmarks::{make_instance, overfill_instance, reference_trajectory, Family, InstanceSpec, OVERFILL_CANDIDATE};
use crate::pddl::{ground_task, parse_domain, parse_problem};

fn fl(name: &str) -> FluentRef {
    FluentRef::new(name, &[])
}

#[test]
fn linear_generator_plan_is_valid() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let plan = Plan::parse("0.000: generate [1000.000]\n0.000: refuel(tank1) [10.000]\n").unwrap();
    let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
    assert!(r.is_valid(), "{r}");
    let t = &r.trajectory;
    assert!((t.value(&fl("fuel_level"), 10.0).unwrap() - 1000.0).abs() < 1e-9);
    assert!((t.value_before(&fl("fuel_level"), 1000.0).unwrap() - 10.0).abs() < 1e-9);
    assert!((t.value(&fl("fuel_level"), 5.0).unwrap() - 995.0).abs() < 1e-9);
    assert!(t.segments.iter().all(Segment::is_closed_form));
    assert_eq!(r.step_times, vec![0.0, 10.0, 1000.0]);
}

#[test]
fn overfill_candidate_violates_capacity() {
    let inst = overfill_instance();
    let plan = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
    assert_eq!(r.violations.len(), 1, "{r}");
    let v = &r.violations[0];
    assert_eq!(v.kind, ViolationKind::Invariant);
    assert!((v.lo - 18.75).abs() < 1e-9 && (v.hi - 25.0).abs() < 1e-9, "{v}");
    assert_eq!(v.step, 2);
    assert_eq!(v.owner, "refuel(tank1)");
    assert_eq!(v.to_string(), "violation: (<= (fuel_level) (capacity)) in [18.750,25.000] step 2 owner refuel(tank1)");
    // peak of the quadratic trajectory
    let peak = r.trajectory.value(&fl("fuel_level"), 21.875).unwrap();
    assert!((peak - 101.5625).abs() < 1e-9, "{peak}");
}

#[test]
fn trajectories_match_the_reference_formulas() {
    let cases = [
        (Family::GeneratorLinear, 1, "0: generate [1000]\n0: refuel(tank1) [10]\n"),
        (Family::GeneratorNonlinear, 2, "0: generate [1025]\n0: refuel(tank1) [12.5]\n12.5: refuel(tank2) [12.5]\n"),
        (Family::CarLinear, 1, "0: moving [30]\n0: accelerate\n30: decelerate\n"),
        (Family::CarNonlinear, 2, "0: moving [9]\n0: accelerate\n5: decelerate\n8: decelerate\n"),
    ];
    for (f, n, text) in cases {
        let inst = make_instance(&InstanceSpec::new(f, n)).unwrap();
        let plan = Plan::parse(text).unwrap();
        let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
        let oracle = reference_trajectory(&inst, &plan);
        let end = plan.makespan();
        for name in oracle.fluents() {
            for i in 0..=200 {
                // midpoints avoid the jumps at happenings
                let t = end * (i as f64 + 0.5) / 201.0;
                let got = r.trajectory.value(&fl_or_call(name), t).unwrap();
                let want = oracle.value(name, t).unwrap();
                assert!((got - want).abs() < 1e-6, "{} {name} at {t}: {got} vs {want}", f.name());
            }
        }
    }
}

fn fl_or_call(name: &str) -> FluentRef {
    match name.split_once('(') {
        Some((head, rest)) => FluentRef::new(head, &[rest.trim_end_matches(')')]),
        None => fl(name),
    }
}

#[test]
fn thermostat_events_follow_the_temperature() {
    let inst = make_instance(&InstanceSpec::new(Family::Thermostat, 1)).unwrap();
    let cfg = ValidatorConfig { until: Some(6.0), ..ValidatorConfig::default() };
    let r = validate(&inst.task, &Plan::default(), &cfg).unwrap();
    assert!(r.is_valid(), "{r}");
    let ons: Vec<f64> = r.timeline.iter().filter(|h| h.name == "switch_on").map(|h| h.t).collect();
    let first = 10.0 * (20.0f64 / 19.0).ln();
    assert!((ons[0] - first).abs() < 1e-6, "{ons:?}");
    let offs: Vec<f64> = r.timeline.iter().filter(|h| h.name == "switch_off").map(|h| h.t).collect();
    assert!((offs[0] - (first + 1.0)).abs() < 1e-6, "{offs:?}");
    let oracle = reference_trajectory(&inst, &Plan::default());
    for i in 0..=60 {
        let t = i as f64 * 0.1;
        let got = r.trajectory.value_before(&fl("x"), t).unwrap();
        assert!((got - oracle.value("x", t).unwrap()).abs() < 1e-5, "x({t}) = {got}");
    }
}

#[test]
fn empty_plan_without_dynamics_is_valid() {
    let d = parse_domain("(define (domain still) (:predicates (p)) (:action a :parameters () :precondition (p) :effect (not (p))))")
        .unwrap();
    let p = parse_problem("(define (problem s) (:domain still) (:init (p)) (:goal (p)))", &d).unwrap();
    let task = ground_task(&p);
    let r = validate(&task, &Plan::default(), &ValidatorConfig::default()).unwrap();
    assert!(r.is_valid());
}

#[test]
fn preconditions_goals_and_durations_are_checked() {
    let inst = make_instance(&InstanceSpec::new(Family::CarLinear, 1)).unwrap();
    let plan = Plan::parse("0: moving [20]\n0: accelerate\n1: accelerate\n20: decelerate\n").unwrap();
    let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
    let kinds: Vec<ViolationKind> = r.violations.iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::Precondition), "{r}");
    assert!(kinds.contains(&ViolationKind::Goal), "{r}");

    let gen = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let plan = Plan::parse("0: generate [1000]\n0: refuel(tank1) [7]\n").unwrap();
    let r = validate(&gen.task, &plan, &ValidatorConfig::default()).unwrap();
    assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Duration), "{r}");
}

#[test]
fn malformed_plans_are_rejected() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let cfg = ValidatorConfig::default();
    let e = validate(&inst.task, &Plan::parse("0: fly [1]").unwrap(), &cfg).unwrap_err();
    assert!(matches!(e, ValidateError::UnknownAction(_)));
    let twice = Plan::parse("0: refuel(tank1) [10]\n5: refuel(tank1) [10]").unwrap();
    assert!(matches!(validate(&inst.task, &twice, &cfg), Err(ValidateError::DuplicateOccurrence { .. })));
    let thermo = make_instance(&InstanceSpec::new(Family::Thermostat, 1)).unwrap();
    let e = validate(&thermo.task, &Plan::parse("0: switch_on").unwrap(), &cfg).unwrap_err();
    assert!(matches!(e, ValidateError::NotPlannable(_)));
}

#[test]
fn shrinking_eps_keeps_violations() {
    let inst = overfill_instance();
    let plan = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    let coarse = validate(&inst.task, &plan, &ValidatorConfig::with_eps(1e-3)).unwrap();
    let fine = validate(&inst.task, &plan, &ValidatorConfig::with_eps(1e-9)).unwrap();
    assert!(fine.violations.len() >= coarse.violations.len());
    for v in &coarse.violations {
        assert!(fine.violations.iter().any(|w| w.lo <= v.lo + 1e-9 && w.hi >= v.hi - 1e-9));
    }
}

#[test]
fn cyclic_events_are_reported() {
    let d = parse_domain(
        "(define (domain loop) (:requirements :fluents :events) (:functions (x))
           (:event bump :parameters () :precondition (>= (x) 0) :effect (increase (x) 1)))",
    )
    .unwrap();
    let p = parse_problem("(define (problem l) (:domain loop) (:init (= (x) 0)) (:goal (>= (x) 0)))", &d).unwrap();
    let e = validate(&ground_task(&p), &Plan::default(), &ValidatorConfig::default()).unwrap_err();
    assert!(matches!(e, ValidateError::CyclicTrigger { limit: 100, .. }));
}
