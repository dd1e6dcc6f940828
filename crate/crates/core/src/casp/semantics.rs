//! Reduct-based answer-set semantics, kept deliberately simple so it can act
//! as the reference for the search engine.

use super::{Atom, BodyLit, GroundProgram, Head, Rule, Term};
use crate::rel::CmpOp;
use std::collections::BTreeSet;

/// `required(..)` atoms of an answer set.
pub fn gamma(a: &BTreeSet<Atom>) -> BTreeSet<Atom> {
    a.iter().filter(|x| !x.neg && x.pred == "required" && x.args.len() == 1).cloned().collect()
}

fn guard_holds(op: CmpOp, l: &Term, r: &Term) -> bool {
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => op.holds(a, b),
        _ => match op {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            _ => op.holds(l, r),
        },
    }
}

fn blocked(body: &[BodyLit], a: &BTreeSet<Atom>) -> bool {
    body.iter().any(|l| match l {
        BodyLit::Neg(x) => a.contains(x),
        BodyLit::Guard(op, x, y) => !guard_holds(*op, x, y),
        BodyLit::Pos(_) => false,
    })
}

fn positive(body: &[BodyLit]) -> Vec<BodyLit> {
    body.iter().filter(|l| matches!(l, BodyLit::Pos(_))).cloned().collect()
}

/// Gelfond–Lifschitz reduct with choice rules read as generate-and-test:
/// a choice rule contributes `e :- body+` for each of its elements in `a`.
pub fn reduct(p: &GroundProgram, a: &BTreeSet<Atom>) -> GroundProgram {
    let mut out = Vec::new();
    for r in &p.rules {
        if blocked(&r.body, a) {
            continue;
        }
        let body = positive(&r.body);
        match &r.head {
            Head::Atom(h) => out.push(Rule::normal(h.clone(), body)),
            Head::Denial => out.push(Rule::denial(body)),
            Head::Choice { elems, .. } => {
                for e in elems {
                    if a.contains(&e.atom) && !blocked(&e.cond, a) {
                        let mut b = body.clone();
                        b.extend(positive(&e.cond));
                        out.push(Rule::normal(e.atom.clone(), b));
                    }
                }
            }
        }
    }
    GroundProgram { rules: out, atoms: p.atoms.clone() }
}

/// Least model of the definite part of a negation-free program.
pub fn least_model(p: &GroundProgram) -> BTreeSet<Atom> {
    let mut m = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in &p.rules {
            if let Head::Atom(h) = &r.head {
                if !m.contains(h) && r.pos_body().all(|x| m.contains(x)) {
                    m.insert(h.clone());
                    changed = true;
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

fn body_true(body: &[BodyLit], a: &BTreeSet<Atom>) -> bool {
    body.iter().all(|l| match l {
        BodyLit::Pos(x) => a.contains(x),
        BodyLit::Neg(x) => !a.contains(x),
        BodyLit::Guard(op, x, y) => guard_holds(*op, x, y),
    })
}

/// Whether `a` is an answer set of `p`.
pub fn is_answer_set(p: &GroundProgram, a: &BTreeSet<Atom>) -> bool {
    if a.iter().any(|x| a.contains(&x.complement())) {
        return false;
    }
    for r in &p.rules {
        if let Head::Choice { lb, ub, elems } = &r.head {
            if body_true(&r.body, a) {
                let n = elems.iter().filter(|e| body_true(&e.cond, a) && a.contains(&e.atom)).map(|e| &e.atom).collect::<BTreeSet<_>>().len() as u64;
                if lb.is_some_and(|l| n < l) || ub.is_some_and(|u| n > u) {
                    return false;
                }
            }
        }
    }
    let red = reduct(p, a);
    if red.rules.iter().any(|r| matches!(r.head, Head::Denial) && r.pos_body().all(|x| a.contains(x))) {
        return false;
    }
    least_model(&red) == *a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casp::parse_program;

    fn ground(src: &str) -> GroundProgram {
        GroundProgram::from_rules(parse_program(src).unwrap().rules)
    }

    fn set(atoms: &[&str]) -> BTreeSet<Atom> {
        atoms.iter().map(|s| Atom::prop(s)).collect()
    }

    #[test]
    fn reduct_keeps_unblocked_rule() {
        let p = ground("p :- not q.");
        let r = reduct(&p, &set(&["p"]));
        assert_eq!(r.rules, vec![Rule::fact(Atom::prop("p"))]);
    }

    #[test]
    fn reduct_deletes_blocked_rule() {
        let p = ground("p :- not q.");
        assert!(reduct(&p, &set(&["p", "q"])).rules.is_empty());
    }

    #[test]
    fn even_loop_answer_sets() {
        let p = ground("p :- not q. q :- not p.");
        assert!(is_answer_set(&p, &set(&["p"])));
        assert!(is_answer_set(&p, &set(&["q"])));
        assert!(!is_answer_set(&p, &set(&["p", "q"])));
        assert!(!is_answer_set(&p, &set(&[])));
    }

    #[test]
    fn choice_bounds_example() {
        let p = ground("q(a). q(b). 1{ p(a); p(b) }2 :- q(a), q(b).");
        let base = ["q(a)", "q(b)"];
        let mk = |extra: &[&str]| -> BTreeSet<Atom> {
            base.iter()
                .chain(extra.iter())
                .map(|s| crate::casp::parse_program(&format!("{s}.")).unwrap().rules[0].head_atoms()[0].clone())
                .collect()
        };
        assert!(is_answer_set(&p, &mk(&["p(a)"])));
        assert!(is_answer_set(&p, &mk(&["p(b)"])));
        assert!(is_answer_set(&p, &mk(&["p(a)", "p(b)"])));
        assert!(!is_answer_set(&p, &mk(&[])));
    }

    #[test]
    fn classical_negation_must_be_consistent() {
        let p = ground("a. -a.");
        let a = Atom::prop("a");
        let s: BTreeSet<Atom> = [a.clone(), a.complement()].into_iter().collect();
        assert!(!is_answer_set(&p, &s));
    }

    #[test]
    fn denial_rejects() {
        let p = ground("{ a }. :- a.");
        assert!(is_answer_set(&p, &set(&[])));
        assert!(!is_answer_set(&p, &set(&["a"])));
    }

    #[test]
    fn gamma_picks_required_atoms() {
        let p = parse_program("required(x > 0). cspvar(x). q.").unwrap();
        let a: BTreeSet<Atom> = p.rules.iter().map(|r| r.head_atoms()[0].clone()).collect();
        let g = gamma(&a);
        assert_eq!(g.len(), 1);
        assert!(g.is_subset(&a));
        assert!(g.iter().all(|x| crate::casp::tau_inverse(x).is_ok()));
        assert!(gamma(&set(&["q"])).is_empty());
    }
}
