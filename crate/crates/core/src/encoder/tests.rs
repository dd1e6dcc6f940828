use super::*;
use crate::asp::{ground, GroundingContext};
use crate::benchmarks::{make_instance, Family, InstanceSpec};
use crate::casp::{ConstraintAtom, Constraint, NumTerm};

fn generator(n: usize, last_step: usize, variant: Variant) -> (GroundTask, EncodingConfig) {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, n)).unwrap();
    let cfg = EncodingConfig { last_step, variant, ..EncodingConfig::default() };
    (inst.task, cfg)
}

fn lines(p: &CaspProgram) -> Vec<String> {
    p.rules.iter().map(|r| {
        let mut r = r.clone();
        r.note = None;
        r.to_string()
    }).collect()
}

fn has(p: &CaspProgram, rule: &str) -> bool {
    let want = parse_program(rule).unwrap().rules[0].to_string();
    lines(p).contains(&want)
}

#[test]
fn generator_rules_are_present() {
    let (task, cfg) = generator(1, 3, Variant::Basic);
    let p = encode(&task, &cfg).unwrap();
    for r in [
        "step(0..3).",
        "cspvar(tstart(I)) :- step(I).",
        "required(tstart(I2) = tend(I1)) :- step(I1), step(I2), I2 = I1+1.",
        "required(v_initial(fuel_level,I2) = v_final(fuel_level,I1)) :- step(I1), step(I2), I2 = I1+1.",
        "required(v(contrib(fuel_level,decr),I) >= 0) :- step(I).",
        "decr(fuel_level,I,v(contrib(fuel_level,decr,D),I)) :- step(I), cspvar(v(contrib(fuel_level,decr,D),I)).",
        "required(sum([decr(fuel_level,I)/3],=,v(contrib(fuel_level,decr),I))) :- step(I).",
        "required(v_final(fuel_level,I) = v_initial(fuel_level,I)+v(contrib(fuel_level,incr),I)-v(contrib(fuel_level,decr),I)) :- step(I).",
        "required(v(contrib(fuel_level,decr,generate),I) = tend(I)-tstart(I)) :- step(I), holds(inprogr(generate),I).",
        "ab(contrib(fuel_level,decr,generate),I) :- step(I), holds(inprogr(generate),I).",
        "required(v(contrib(fuel_level,decr,generate),I) = 0) :- step(I), not ab(contrib(fuel_level,decr,generate),I).",
        "required(v(contrib(fuel_level,incr,refuel(tank1)),I) = 2*(tend(I)-tstart(I))) :- step(I), holds(inprogr(refuel(tank1)),I).",
        "holds(inprogr(refuel(tank1)),I2) :- step(I1), step(I2), I2 = I1+1, occurs(start(refuel(tank1)),I1).",
        "-holds(inprogr(refuel(tank1)),I2) :- step(I1), step(I2), I2 = I1+1, occurs(end(refuel(tank1)),I1).",
        "1{occurs(end(refuel(tank1)),I2) : step(I2), I2 > I1, I2 < 3}1 :- occurs(start(refuel(tank1)),I1).",
        "duration(refuel(tank1),10).",
        "required(v_final(fuel_level,I) <= 1000) :- holds(inprogr(refuel(tank1)),I).",
        "required(v_initial(fuel_level,I) <= 1000) :- holds(inprogr(refuel(tank1)),I).",
        "1{occurs(start(generate),I); is_false(gamma(generate,0),I)}1 :- step(I), I < 3, -holds(inprogr(generate),I).",
        "required(v_final(fuel_level,I) < 0) :- is_false(gamma(generate,0),I).",
        "0{occurs(start(refuel(tank1)),I) : step(I)}1.",
        "required(v_initial(fuel_level,0) = 990).",
        "-holds(inprogr(generate),0).",
        "required(tstart(0) = 0).",
        "duration(generate,1000).",
        "required(tend(I2)-tend(I1) = D) :- duration(generate,D), occurs(end(generate),I2), occurs(start(generate),I1), I1 < I2.",
    ] {
        assert!(has(&p, r), "missing rule {r}\n{}", p.dump());
    }
    // capacity is never changed and is substituted by its value
    assert!(!p.dump().contains("v_initial(capacity"));
}

/// Every CSP variable used by a ground `required` atom is declared.
fn assert_declared(p: &CaspProgram) {
    let g = ground(p, &GroundingContext::default()).unwrap();
    let declared: BTreeSet<Term> = g
        .atoms
        .iter()
        .filter_map(|a| match ConstraintAtom::from_atom(a) {
            Some(ConstraintAtom::Var(t)) => Some(t),
            _ => None,
        })
        .collect();
    let mut checked = 0;
    for a in &g.atoms {
        let Some(ConstraintAtom::Required(c)) = ConstraintAtom::from_atom(a) else {
            assert!(a.pred != "required", "unreadable constraint {a}");
            continue;
        };
        let mut vars = BTreeSet::new();
        match c {
            Constraint::Cmp(c) => {
                c.lhs.vars(&mut vars);
                c.rhs.vars(&mut vars);
            }
            Constraint::Sum(s) => NumTerm::from_term(&s.target).unwrap().vars(&mut vars),
        }
        for v in vars {
            assert!(declared.contains(&v), "{v} in {a} is not declared");
        }
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn every_constraint_variable_is_declared() {
    for f in [Family::GeneratorLinear, Family::GeneratorNonlinear, Family::CarLinear, Family::CarNonlinear] {
        let inst = make_instance(&InstanceSpec::new(f, 2)).unwrap();
        let cfg = EncodingConfig { last_step: inst.last_step, variant: Variant::Estimator, ..Default::default() };
        assert_declared(&encode(&inst.task, &cfg).unwrap());
    }
}

#[test]
fn variants_only_add_rules() {
    let (task, base) = generator(2, 5, Variant::Basic);
    let basic: BTreeSet<String> = lines(&encode(&task, &base).unwrap()).into_iter().collect();
    for v in [Variant::Heuristic, Variant::Estimator] {
        let cfg = EncodingConfig { variant: v, ..base.clone() };
        let more: BTreeSet<String> = lines(&encode(&task, &cfg).unwrap()).into_iter().collect();
        assert!(basic.is_subset(&more), "{v:?} drops rules");
        assert!(more.len() > basic.len());
    }
}

#[test]
fn rule_count_grows_linearly_in_tanks() {
    let count = |n| {
        let (task, cfg) = generator(n, 4, Variant::Basic);
        encode(&task, &cfg).unwrap().rules.len()
    };
    let c: Vec<usize> = (1..=4).map(count).collect();
    let d: Vec<usize> = c.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(d.iter().all(|x| *x == d[0] && *x > 0), "{c:?}");
}

#[test]
fn estimator_tracks_integer_values() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let cfg = EncodingConfig { variant: Variant::Estimator, ..Default::default() };
    let p = encode(&inst.task, &cfg).unwrap();
    assert!(has(&p, "holds(has_val(fuel_level,990),0)."));
    // no assignment effects in this domain
    assert!(has(&p, "warning(no_integer_assignments)."));
}

#[test]
fn nonlinear_refuel_uses_the_drain_closed_form() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorNonlinear, 1)).unwrap();
    let p = encode(&inst.task, &EncodingConfig::default()).unwrap();
    let d = p.dump();
    assert!(d.contains("sqrt(v_initial(tank_level(tank1),I))"), "{d}");
    assert!(d.contains("<= 2*sqrt(v_initial(tank_level(tank1),I))"));
}

#[test]
fn car_flows_use_riccati_terms() {
    let inst = make_instance(&InstanceSpec::new(Family::CarNonlinear, 3)).unwrap();
    let p = encode(&inst.task, &EncodingConfig { last_step: 4, ..Default::default() }).unwrap();
    let d = p.dump();
    assert!(d.contains("ric_v(v_initial(a,I),-0.1,v_initial(v,I),tend(I)-tstart(I))-v_initial(v,I)"), "{d}");
    assert!(d.contains("ric_x(v_initial(a,I),-0.1,v_initial(v,I),tend(I)-tstart(I))"));
    assert!(has(&p, "required(v_final(a,I) < 3) :- occurs(accelerate,I)."));
    assert!(has(&p, "ab(jump(a),I2) :- step(I1), step(I2), I2 = I1+1, occurs(accelerate,I1)."));
}

#[test]
fn exponential_cooling_is_reported() {
    let inst = make_instance(&InstanceSpec::new(Family::Thermostat, 1)).unwrap();
    let e = encode(&inst.task, &EncodingConfig::default()).unwrap_err();
    assert!(matches!(e, EncodeError::UnsupportedEffect { ref schema, .. } if schema == "cooling"), "{e}");
}

#[test]
fn identifiers() {
    assert_eq!(asp_ident("fuel-level"), "fuel_level");
    assert_eq!(asp_ident("Tank1"), "tank1");
    assert_eq!(asp_ident("9lives"), "x_9lives");
    assert_eq!("heuristic".parse::<Variant>().unwrap(), Variant::Heuristic);
}
