use super::*;
use crate::benchmarks::{make_instance, overfill_instance, Family, InstanceSpec, OVERFILL_CANDIDATE};
use crate::casp::{parse_term, NumTerm};
use crate::encoder::{encode, EncodingConfig};
use crate::plan::Plan;
use crate::validator::{validate, ValidatorConfig};

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[test]
fn timepoints() {
    let k3 = ExpansionConfig { k: 3 };
    assert!(close(&select_timepoints(18.75, 25.0, &k3), &[18.75, 21.875, 25.0]));
    assert!(close(&select_timepoints(5.0, 5.0, &k3), &[5.0]));
    assert!(close(&select_timepoints(0.0, 1.0, &ExpansionConfig { k: 5 }), &[0.0, 0.25, 0.5, 0.75, 1.0]));
    assert!(close(&select_timepoints(2.0, 4.0, &ExpansionConfig { k: 1 }), &[3.0]));
}

#[test]
fn offsets() {
    assert_eq!(offset(18.75, 12.5, 25.0), 0.5);
    assert_eq!(offset(30.0, 12.5, 25.0), 1.0);
    assert_eq!(offset(10.0, 12.5, 25.0), 0.0);
    assert_eq!(offset(3.0, 3.0, 3.0), 0.0);
}

#[test]
fn labels_are_canonical() {
    assert_eq!(delta_label(18.75), "18.75");
    assert_eq!(delta_label(25.0), "25");
    assert_eq!(delta_label(21.875), "21.875");
    assert_eq!(delta_label(1.0 / 3.0), "0.333333");
    assert_eq!(delta_label(-0.0), "0");
}

#[test]
fn steps_split_ranges_at_boundaries() {
    let st = Steps::new(vec![0.0, 12.5, 25.0, 100.0]);
    assert_eq!(st.window(0), Some((0.0, 0.0)));
    assert_eq!(st.window(2), Some((12.5, 25.0)));
    assert_eq!(st.step_of(18.75), Some(2));
    assert_eq!(st.split(18.75, 25.0), vec![(2, 18.75, 25.0)]);
    assert_eq!(st.split(20.0, 30.0), vec![(2, 20.0, 25.0), (3, 25.0, 30.0)]);
    assert_eq!(st.split(50.0, 50.0), vec![(3, 50.0, 50.0)]);
}

fn overfill_setup() -> (crate::pddl::GroundTask, CaspProgram, Vec<Violation>, Steps) {
    let inst = overfill_instance();
    let cfg = EncodingConfig { last_step: inst.last_step, variant: inst.variant, ..EncodingConfig::default() };
    let p = encode(&inst.task, &cfg).unwrap();
    let plan = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
    let steps = Steps::new(r.step_times.clone());
    (inst.task, p, r.violations, steps)
}

fn text(rules: &[Rule]) -> Vec<String> {
    rules.iter().map(|r| strip_note(r).to_string()).collect()
}

#[test]
fn overfill_expansion_block() {
    let (task, p, vs, steps) = overfill_setup();
    let (q, e) = expand(&p, &task, &vs, &steps, &ExpansionConfig::default()).unwrap();
    assert_eq!(e.deltas.len(), 3);
    let all: Vec<String> = text(&e.rules().cloned().collect::<Vec<_>>());
    for label in ["18.75", "21.875", "25"] {
        let cap = format!("required(v_final_{label}(fuel_level,2) <= 100) :- holds(inprogr(refuel(tank1)),2).");
        assert!(all.contains(&cap), "missing {cap}\n{}", all.join("\n"));
        let bal = format!(
            "required(v_final_{label}(fuel_level,2) = v_initial(fuel_level,2)+v_{label}(contrib(fuel_level,incr),2)-v_{label}(contrib(fuel_level,decr),2))."
        );
        assert!(all.contains(&bal), "missing {bal}");
    }
    // the refuel copy at 18.75 runs for half of the step
    let half = all
        .iter()
        .find(|r| r.starts_with("required(v_18.75(contrib(fuel_level,incr,refuel(tank1)),2) = "))
        .expect("refuel copy");
    assert!(half.contains("sq(0.5*(tend(2)-tstart(2)))"), "{half}");
    assert!(half.ends_with(":- holds(inprogr(refuel(tank1)),2)."), "{half}");
    assert_eq!(q.rules.len(), p.rules.len() + e.rules().count());
    // notes carry the provenance
    assert!(q.dump().contains("% expansion:"));
}

#[test]
fn empty_violation_list_is_identity() {
    let (task, p, _, steps) = overfill_setup();
    let (q, e) = expand(&p, &task, &[], &steps, &ExpansionConfig::default()).unwrap();
    assert!(e.is_empty());
    assert_eq!(q, p);
}

#[test]
fn repeated_expansion_adds_nothing() {
    let (task, p, vs, steps) = overfill_setup();
    let cfg = ExpansionConfig::default();
    let (q, _) = expand(&p, &task, &vs, &steps, &cfg).unwrap();
    let (r, e) = expand(&q, &task, &vs, &steps, &cfg).unwrap();
    assert!(e.is_empty());
    assert_eq!(q, r);
}

#[test]
fn same_timepoint_with_another_fraction_gets_a_new_name() {
    let (task, p, vs, steps) = overfill_setup();
    let cfg = ExpansionConfig { k: 1 };
    let (q, _) = expand(&p, &task, &vs, &steps, &cfg).unwrap();
    // pretend the refuel step now spans [15, 25]
    let moved = Steps::new(vec![0.0, 15.0, 25.0, 100.0]);
    let (_, e) = expand(&q, &task, &vs, &moved, &cfg).unwrap();
    let all = text(&e.rules().cloned().collect::<Vec<_>>());
    assert!(all.iter().any(|r| r.contains("v_final_21.875_2(fuel_level,2)")), "{}", all.join("\n"));
}

#[test]
fn expansion_only_adds_fresh_heads() {
    let (task, p, vs, steps) = overfill_setup();
    let (_, e) = expand(&p, &task, &vs, &steps, &ExpansionConfig::default()).unwrap();
    let old = p.dump();
    for r in e.rules() {
        let Head::Atom(h) = &r.head else { panic!("{r}") };
        assert!(h.pred == "required" || h.pred == "cspvar", "{r}");
    }
    for d in &e.deltas {
        for v in &d.vars {
            assert!(is_expansion_var(v), "{v}");
            assert!(!old.contains(&v.to_string()), "{v} is not fresh");
        }
    }
}

fn contribution_value(rules: &[Rule], prefix: &str) -> NumTerm {
    let r = rules.iter().find(|r| strip_note(r).to_string().starts_with(prefix)).unwrap_or_else(|| panic!("{prefix}"));
    let Head::Atom(h) = &r.head else { unreachable!() };
    let Term::Rel(_, _, v) = &h.args[0] else { unreachable!() };
    NumTerm::from_term(v).unwrap()
}

#[test]
fn linear_copy_is_half_the_full_contribution() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let p = encode(&inst.task, &EncodingConfig::default()).unwrap();
    let n = parse_term("fuel_level").unwrap();
    let d = expand_fluent(&p, &n, 1, 5.0, 0.5);
    let copy = contribution_value(&d.rules, "required(v_5(contrib(fuel_level,incr,refuel(tank1)),1) = ");
    let full = NumTerm::from_term(&parse_term("2*(tend(1)-tstart(1))").unwrap()).unwrap();
    for (a, b) in [(0.0, 10.0), (3.0, 7.5), (100.0, 1000.0)] {
        let env = |t: &Term| match t.to_string().as_str() {
            "tstart(1)" => Some(a),
            "tend(1)" => Some(b),
            _ => None,
        };
        let (c, f) = (copy.eval(&env).unwrap(), full.eval(&env).unwrap());
        assert!((c - 0.5 * f).abs() < 1e-12, "{c} vs {f}");
    }
}

#[test]
fn zero_fraction_keeps_the_initial_value() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorNonlinear, 1)).unwrap();
    let p = encode(&inst.task, &EncodingConfig::default()).unwrap();
    let n = parse_term("fuel_level").unwrap();
    let d = expand_fluent(&p, &n, 1, 0.0, 0.0);
    let env = |t: &Term| match t.to_string().as_str() {
        "tstart(1)" => Some(4.0),
        "tend(1)" => Some(11.0),
        _ if t.to_string().starts_with("v_initial") => Some(37.0),
        _ => None,
    };
    let mut copies = 0;
    for r in &d.rules {
        let s = strip_note(r).to_string();
        if s.starts_with("required(v_0(contrib(fuel_level,") && s.contains(":- holds(") {
            let Head::Atom(h) = &r.head else { unreachable!() };
            let Term::Rel(_, _, v) = &h.args[0] else { unreachable!() };
            let x = NumTerm::from_term(v).unwrap().eval(&env).unwrap();
            assert!(x.abs() < 1e-12, "{s} = {x}");
            copies += 1;
        }
    }
    assert!(copies >= 2);
}

#[test]
fn fluent_without_contributions_gets_only_a_balance() {
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let p = encode(&inst.task, &EncodingConfig::default()).unwrap();
    let d = expand_fluent(&p, &parse_term("nothing").unwrap(), 2, 1.0, 0.5);
    assert_eq!(text(&d.rules), vec!["cspvar(v_final_1(nothing,2)).", "required(v_final_1(nothing,2) = v_initial(nothing,2))."]);
}
