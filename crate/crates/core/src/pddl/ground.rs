//! Grounding of schemas over the typed objects of a problem.

use super::*;
use std::collections::BTreeSet;

/// A schema instance with all parameters replaced by objects.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSchema {
    pub kind: SchemaKind,
    pub schema: String,
    pub args: Vec<String>,
    pub conditions: Vec<Condition>,
    pub effects: Vec<Effect>,
    pub duration: Option<(CmpOp, NumExpr)>,
}

impl GroundSchema {
    /// `refuel(tank1)`, or the bare schema name without arguments.
    pub fn name(&self) -> String {
        FluentRef { name: self.schema.clone(), args: self.args.clone() }.to_string()
    }
    pub fn conjuncts(&self, t: Timing) -> impl Iterator<Item = &Conjunct> {
        self.conditions.iter().filter(move |c| c.timing == t).flat_map(|c| c.conjuncts.iter())
    }
    pub fn is_durative(&self) -> bool {
        self.kind == SchemaKind::Durative
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTask {
    pub instance: PlanningInstance,
    /// Actions, durative actions, processes and events, in schema order.
    pub actions: Vec<GroundSchema>,
    /// Every ground predicate atom.
    pub props: Vec<FluentRef>,
    /// Every ground function term.
    pub fluents: Vec<FluentRef>,
}

impl GroundTask {
    pub fn by_name(&self, name: &str) -> Option<&GroundSchema> {
        self.actions.iter().find(|a| a.name() == name)
    }
    pub fn of_kind(&self, k: SchemaKind) -> impl Iterator<Item = &GroundSchema> {
        self.actions.iter().filter(move |a| a.kind == k)
    }
    /// Fluents never changed by any effect.
    pub fn static_fluents(&self) -> BTreeSet<FluentRef> {
        let changed: BTreeSet<&FluentRef> = self
            .actions
            .iter()
            .flat_map(|a| &a.effects)
            .filter_map(|e| match e {
                Effect::Num { fluent, .. } => Some(fluent),
                _ => None,
            })
            .collect();
        self.fluents.iter().filter(|f| !changed.contains(f)).cloned().collect()
    }
    pub fn init_value(&self, f: &FluentRef) -> Option<&Rat> {
        self.instance.init_value(f)
    }
}

fn subst_ref(f: &FluentRef, m: &dyn Fn(&str) -> String) -> FluentRef {
    FluentRef { name: f.name.clone(), args: f.args.iter().map(|a| m(a)).collect() }
}

fn subst_conjunct(c: &Conjunct, m: &dyn Fn(&str) -> String) -> Conjunct {
    match c {
        Conjunct::Lit(l) => Conjunct::Lit(Literal { atom: subst_ref(&l.atom, m), neg: l.neg }),
        Conjunct::Cmp(c) => Conjunct::Cmp(Comparison { lhs: c.lhs.subst_args(m), op: c.op, rhs: c.rhs.subst_args(m) }),
    }
}

fn subst_effect(e: &Effect, m: &dyn Fn(&str) -> String) -> Effect {
    match e {
        Effect::Lit { timing, lit } => Effect::Lit { timing: *timing, lit: Literal { atom: subst_ref(&lit.atom, m), neg: lit.neg } },
        Effect::Num { timing, op, fluent, expr } => {
            Effect::Num { timing: *timing, op: *op, fluent: subst_ref(fluent, m), expr: expr.subst_args(m) }
        }
    }
}

/// All argument tuples whose objects are type-compatible with `params`.
fn tuples(inst: &PlanningInstance, params: &[Param]) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    for p in params {
        let objs: Vec<&String> =
            inst.all_objects().filter(|(_, t)| inst.domain.is_subtype(t, &p.ty)).map(|(o, _)| o).collect();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                objs.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push((*o).clone());
                    v
                })
            })
            .collect();
    }
    out
}

pub fn ground_task(inst: &PlanningInstance) -> GroundTask {
    let dom = &inst.domain;
    let mut actions = Vec::new();
    for s in &dom.schemas {
        for args in tuples(inst, &s.params) {
            let map = |a: &str| match s.params.iter().position(|p| p.name == a) {
                Some(i) => args[i].clone(),
                None => a.to_string(),
            };
            actions.push(GroundSchema {
                kind: s.kind,
                schema: s.name.clone(),
                args: args.clone(),
                conditions: s
                    .conditions
                    .iter()
                    .map(|c| Condition { timing: c.timing, conjuncts: c.conjuncts.iter().map(|x| subst_conjunct(x, &map)).collect() })
                    .collect(),
                effects: s.effects.iter().map(|e| subst_effect(e, &map)).collect(),
                duration: s.duration.as_ref().map(|(op, e)| (*op, e.subst_args(&map))),
            });
        }
    }
    let expand = |sigs: &[Signature]| -> Vec<FluentRef> {
        sigs.iter()
            .flat_map(|s| tuples(inst, &s.params).into_iter().map(|args| FluentRef { name: s.name.clone(), args }))
            .collect()
    };
    GroundTask { instance: inst.clone(), actions, props: expand(&dom.predicates), fluents: expand(&dom.functions) }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_problem};
    use super::*;

    const DOM: &str = "(define (domain g)
 (:requirements :typing :fluents :durative-actions)
 (:types tank car - object small - tank)
 (:predicates (available ?t - tank))
 (:functions (fuel) (level ?t - tank))
 (:durative-action refuel
  :parameters (?t - tank)
  :duration (= ?duration 10)
  :condition (at start (available ?t))
  :effect (and (at start (not (available ?t))) (increase (fuel) (* #t 2))))
 (:action swap
  :parameters (?a - tank ?b - tank ?c - car)
  :effect (increase (level ?a) (level ?b))))";

    #[test]
    fn counts_are_products_of_compatible_objects() {
        let d = parse_domain(DOM).unwrap();
        let p = parse_problem("(define (problem p) (:domain g) (:objects t1 - tank t2 - small c1 c2 c3 - car))", &d).unwrap();
        let g = ground_task(&p);
        assert_eq!(g.actions.iter().filter(|a| a.schema == "refuel").count(), 2);
        assert_eq!(g.actions.iter().filter(|a| a.schema == "swap").count(), 2 * 2 * 3);
        assert_eq!(g.props.len(), 2);
        assert_eq!(g.fluents.len(), 3);
        let r = g.by_name("refuel(t2)").unwrap();
        assert_eq!(r.conjuncts(Timing::AtStart).next().unwrap().to_string(), "(available t2)");
        assert!(g.static_fluents().is_empty());
    }

    #[test]
    fn zero_tanks_give_no_refuel() {
        let d = parse_domain(DOM).unwrap();
        let p = parse_problem("(define (problem p) (:domain g))", &d).unwrap();
        let g = ground_task(&p);
        assert!(g.actions.is_empty());
        assert_eq!(g.fluents, vec![FluentRef::new("fuel", &[])]);
    }
}
