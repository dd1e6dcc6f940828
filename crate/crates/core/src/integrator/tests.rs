use super::*;
use crate::benchmarks::{make_instance, overfill_instance, Family, InstanceSpec, OVERFILL_CANDIDATE};
use crate::casp::parse_program;

fn session(text: &str) -> Session {
    Session::new(parse_program(text).unwrap(), CspConfig::default(), 0).unwrap()
}

#[test]
fn contradictory_constraints_have_no_solution() {
    let mut s = session("cspvar(x). required(x > 0). required(x < 0).");
    assert!(s.find_casp_solution().unwrap().is_none());
    assert_eq!(s.stats.answer_sets, 1);
    assert_eq!(s.stats.blocked, 1);
    assert!(!s.incomplete);
}

#[test]
fn infeasible_answer_set_is_skipped() {
    let mut s = session(
        "1{occurs(a,0); occurs(b,0)}1. cspvar(x).
         required(x > 0) :- occurs(a,0). required(x < 0) :- occurs(a,0).
         required(x = 3) :- occurs(b,0).",
    );
    let sol = s.find_casp_solution().unwrap().expect("b is feasible");
    assert!(sol.answer.iter().any(|a| a.to_string() == "occurs(b,0)"));
    assert_eq!(sol.value(&Term::sym("x")), Some(3.0));
    assert_eq!(s.stats.blocked, s.stats.answer_sets - 1);
    assert!(s.stats.blocked <= 1);
    assert!(s.find_casp_solution().unwrap().is_none());
}

#[test]
fn generator_solution_times() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let mut cfg = PlannerConfig::for_instance(&inst);
    cfg.encoding.last_step = 3;
    cfg.encoding.hints = vec![("start(generate)".into(), 0), ("start(refuel(tank1))".into(), 0)];
    let p = encode(&inst.task, &cfg.encoding).unwrap();
    let mut s = Session::new(p, CspConfig::default(), 0).unwrap();
    let sol = s.find_casp_solution().unwrap().unwrap();
    let ends = step_ends(&sol).ends;
    assert_eq!(&ends[..3], &[0.0, 10.0, 1000.0]);
    let (plan, listing) = extract_plan(&inst.task, &sol).unwrap();
    assert_eq!(plan.to_string(), "0.000: refuel(tank1) [10.000]\n");
    assert_eq!(listing.to_string(), "0.000: generate [1000.000]\n0.000: refuel(tank1) [10.000]\n");
}

#[test]
fn no_occurrences_give_an_empty_plan() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let sol = CaspSolution { answer: AnswerSet::new(), alpha: BTreeMap::new() };
    let (plan, listing) = extract_plan(&inst.task, &sol).unwrap();
    assert!(plan.steps.is_empty() && listing.steps.is_empty());
}

#[test]
fn unmatched_start_is_an_error() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let p = parse_program("occurs(start(generate),0).").unwrap();
    let answer: AnswerSet = p.rules.iter().filter_map(|r| r.head_atoms().first().map(|a| (*a).clone())).collect();
    let mut alpha = BTreeMap::new();
    alpha.insert(Term::func("tend", vec![Term::int(0)]), 0.0);
    let e = extract_plan(&inst.task, &CaspSolution { answer, alpha }).unwrap_err();
    assert!(matches!(e, IntegratorError::UnmatchedStart(ref d) if d == "generate"), "{e}");
}

#[test]
fn overfill_candidate_listing() {
    let inst = overfill_instance();
    let mut cfg = PlannerConfig::for_instance(&inst);
    cfg.encoding.hints = vec![
        ("start(generate)".into(), 0),
        ("start(refuel(tank1))".into(), 1),
        ("end(refuel(tank1))".into(), 2),
        ("end(generate)".into(), 3),
    ];
    // pin the refuel start at the known bad candidate
    let mut p = encode(&inst.task, &cfg.encoding).unwrap();
    p.extend(parse_program("required(tend(1) = 12.5).").unwrap().rules);
    let mut s = Session::new(p, CspConfig::default(), 0).unwrap();
    let sol = s.find_casp_solution().unwrap().unwrap();
    let (_, listing) = extract_plan(&inst.task, &sol).unwrap();
    assert_eq!(listing.to_string(), OVERFILL_CANDIDATE);
}

#[test]
fn linear_generator_plan() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let cfg = PlannerConfig::for_instance(&inst);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Fixed(3)).unwrap();
    let plan = r.plan().expect("plan");
    assert_eq!(plan.steps.len(), 1);
    assert_eq!(plan.steps[0].name, "refuel(tank1)");
    assert!((plan.steps[0].duration - 10.0).abs() < 1e-9);
    let listing = r.listing.unwrap();
    let gen = listing.steps.iter().find(|s| s.name == "generate").unwrap();
    assert_eq!((gen.t, gen.duration), (0.0, 1000.0));
    assert!(r.stats.validations >= 1);
}

#[test]
fn overfill_is_repaired_by_expansion() {
    let inst = overfill_instance();
    let mut cfg = PlannerConfig::for_instance(&inst);
    cfg.seed_plan = Some(Plan::parse(OVERFILL_CANDIDATE).unwrap());
    let r = plan_with_validation(&inst.task, &cfg, Mode::Fixed(inst.last_step)).unwrap();
    assert!(r.stats.expansions >= 1, "{}", r.stats);
    assert!(r.stats.validations <= 20);
    let plan = r.plan().unwrap_or_else(|| panic!("{:?}\n{}", r.outcome, r.stats));
    let refuel = plan.steps.iter().find(|s| s.name == "refuel(tank1)").unwrap();
    assert!(refuel.t >= 14.0625 - 1e-3, "{plan}");
}

#[test]
fn cumulative_mode_returns_the_first_horizon_with_a_plan() {
    let inst = make_instance(&InstanceSpec::new(Family::CarLinear, 1)).unwrap();
    let cfg = PlannerConfig::for_instance(&inst);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Cumulative(6)).unwrap();
    let h = r.last_step.expect("plan");
    assert!(r.plan().is_some());
    assert_eq!(r.stats.horizons, (1..=h).collect::<Vec<_>>());
    if h > 1 {
        let below = plan_with_validation(&inst.task, &cfg, Mode::Fixed(h - 1)).unwrap();
        assert_eq!(below.outcome, Outcome::NoPlanAtHorizon);
    }
}

#[test]
fn snapping_rounds_to_milliseconds() {
    let p = Plan::new(vec![PlanStep::new(1.00049, "a", 2.0)]);
    let s = snapped(&p);
    assert_eq!(s.steps[0].t, 1.0);
    assert!((s.steps[0].duration - 2.0).abs() < 1e-12);
}
