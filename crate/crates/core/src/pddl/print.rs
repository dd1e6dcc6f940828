//! Canonical PDDL rendering. Output re-parses to an equal model.

use super::*;
use std::fmt::Write;

fn typed(items: &[(String, String)]) -> String {
    items.iter().map(|(n, t)| format!("{n} - {t}")).collect::<Vec<_>>().join(" ")
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} - {}", p.name, p.ty)).collect::<Vec<_>>().join(" ")
}

fn sig(s: &Signature) -> String {
    if s.params.is_empty() {
        format!("({})", s.name)
    } else {
        format!("({} {})", s.name, params(&s.params))
    }
}

fn and<T: fmt::Display>(xs: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("(and {})", parts.join(" ")).replace("(and )", "(and)")
}

fn timing_wrap(t: Timing, body: &Conjunct) -> String {
    match t {
        Timing::Untimed => body.to_string(),
        Timing::AtStart => format!("(at start {body})"),
        Timing::AtEnd => format!("(at end {body})"),
        Timing::OverAll => format!("(over all {body})"),
    }
}

fn effect(e: &Effect) -> String {
    let body = match e {
        Effect::Lit { lit, .. } => lit.to_string(),
        Effect::Num { op, fluent, expr, .. } => format!("({} {} {expr})", op.keyword(), NumExpr::Fluent(fluent.clone())),
    };
    match e.timing() {
        EffectTiming::AtStart => format!("(at start {body})"),
        EffectTiming::AtEnd => format!("(at end {body})"),
        _ => body,
    }
}

pub fn print_domain(d: &DomainModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(s, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        let _ = writeln!(s, "  (:types {})", typed(&d.types));
    }
    if !d.constants.is_empty() {
        let _ = writeln!(s, "  (:constants {})", typed(&d.constants));
    }
    if !d.predicates.is_empty() {
        let _ = writeln!(s, "  (:predicates {})", d.predicates.iter().map(sig).collect::<Vec<_>>().join(" "));
    }
    if !d.functions.is_empty() {
        let _ = writeln!(s, "  (:functions {})", d.functions.iter().map(sig).collect::<Vec<_>>().join(" "));
    }
    for sc in &d.schemas {
        let _ = writeln!(s, "  ({} {}", sc.kind.keyword(), sc.name);
        let _ = writeln!(s, "    :parameters ({})", params(&sc.params));
        if let Some((op, e)) = &sc.duration {
            let _ = writeln!(s, "    :duration ({} ?duration {e})", op.pddl_symbol());
        }
        let conds: Vec<String> =
            sc.conditions.iter().flat_map(|c| c.conjuncts.iter().map(move |x| timing_wrap(c.timing, x))).collect();
        let key = match sc.kind {
            SchemaKind::Durative | SchemaKind::Process => ":condition",
            _ => ":precondition",
        };
        if !conds.is_empty() {
            let _ = writeln!(s, "    {key} {}", and(conds));
        }
        let _ = writeln!(s, "    :effect {})", and(sc.effects.iter().map(effect)));
    }
    s.push_str(")\n");
    s
}

pub fn print_problem(p: &PlanningInstance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", p.problem);
    let _ = writeln!(s, "  (:domain {})", p.domain.name);
    if !p.objects.is_empty() {
        let _ = writeln!(s, "  (:objects {})", typed(&p.objects));
    }
    let mut init: Vec<String> = p.init_facts.iter().map(|f| Literal { atom: f.clone(), neg: false }.to_string()).collect();
    init.extend(p.init_values.iter().map(|(f, v)| format!("(= {} {})", NumExpr::Fluent(f.clone()), fmt_rat(v))));
    let _ = writeln!(s, "  (:init {})", init.join(" "));
    let _ = writeln!(s, "  (:goal {}))", and(p.goal.iter()));
    s
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_problem};
    use super::*;

    const DOM: &str = "(define (domain gen)
 (:requirements :fluents :durative-actions :duration-inequalities :continuous-effects :typing)
 (:types tank)
 (:predicates (generator-ran) (available ?t - tank) (refueling))
 (:functions (fuel-level) (capacity) (generator_time) (ratio ?t - tank))
 (:durative-action generate
  :parameters ()
  :duration (<= ?duration 1000)
  :condition (and (over all (>= (fuel-level) 0)) (over all (not (= (capacity) 3))))
  :effect (and (decrease (fuel-level) (* #t 1)) (at end (generator-ran))
               (at end (assign (generator_time) ?duration))))
 (:durative-action refuel
  :parameters (?t - tank)
  :duration (= ?duration 10)
  :condition (and (at start (available ?t)) (over all (< (fuel-level) (capacity))))
  :effect (and (at start (not (available ?t)))
               (increase (fuel-level) (* #t (/ (^ (ratio ?t) 2) (sqrt 4)))))))";

    #[test]
    fn round_trip() {
        let d = parse_domain(DOM).unwrap();
        let printed = print_domain(&d);
        let d2 = parse_domain(&printed).unwrap();
        assert_eq!(d, d2);
        let p = parse_problem(
            "(define (problem g1) (:domain gen) (:objects t1 t2 - tank)
              (:init (available t1) (= (fuel-level) 990) (= (capacity) 1000) (= (ratio t1) -0.5))
              (:goal (and (generator-ran) (>= (generator_time) 1000))))",
            &d,
        )
        .unwrap();
        let p2 = parse_problem(&print_problem(&p), &d).unwrap();
        assert_eq!(p, p2);
    }
}
