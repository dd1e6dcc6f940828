//! Bottom-up grounder.
//!
//! Predicates are processed in dependency order; within a component rules are
//! re-instantiated until no new possible atom appears. A final pass emits the
//! ground rules and simplifies them against the atoms that are certainly true.

use crate::casp::{ArithOp, Atom, BodyLit, CaspProgram, ChoiceElem, GroundProgram, Head, Rule, Term};
use crate::num::Rat;
use crate::rel::CmpOp;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error("unsafe rule (variable {var} not bound by a positive literal): {rule}")]
    Unsafe { var: String, rule: String },
    #[error("range term outside a fact: {0}")]
    Range(String),
    #[error("choice element condition is not a domain literal: {0}")]
    Condition(String),
}

/// Named constants (such as `last_step`) and extra extensional facts.
#[derive(Clone, Debug, Default)]
pub struct GroundingContext {
    pub constants: BTreeMap<String, Term>,
    pub facts: Vec<Atom>,
}

impl GroundingContext {
    pub fn with_constant(mut self, name: &str, value: Term) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }
}

type Subst = Vec<(String, Term)>;

fn lookup<'a>(s: &'a Subst, v: &str) -> Option<&'a Term> {
    s.iter().find(|(k, _)| k == v).map(|(_, t)| t)
}

/// Substitutes bound variables and folds constant arithmetic.
pub fn instantiate(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => lookup(s, v).cloned().unwrap_or_else(|| t.clone()),
        Term::Num(_) | Term::Sym(_) => t.clone(),
        Term::Func(f, a) => Term::Func(f.clone(), a.iter().map(|x| instantiate(x, s)).collect()),
        Term::Arith(op, a) => fold(op, a.iter().map(|x| instantiate(x, s)).collect()),
        Term::Range(a, b) => Term::Range(Box::new(instantiate(a, s)), Box::new(instantiate(b, s))),
        Term::Rel(op, a, b) => Term::Rel(*op, Box::new(instantiate(a, s)), Box::new(instantiate(b, s))),
        Term::Agg { selector, arity, op, target } => Term::Agg {
            selector: Box::new(instantiate(selector, s)),
            arity: *arity,
            op: *op,
            target: Box::new(instantiate(target, s)),
        },
    }
}

fn fold(op: &ArithOp, a: Vec<Term>) -> Term {
    let nums: Option<Vec<&Rat>> = a.iter().map(Term::as_num).collect();
    if let Some(n) = nums {
        let r = match (op, n.as_slice()) {
            (ArithOp::Add, [x, y]) => Some(*x + *y),
            (ArithOp::Sub, [x, y]) => Some(*x - *y),
            (ArithOp::Mul, [x, y]) => Some(*x * *y),
            (ArithOp::Div, [x, y]) if !y.is_zero() => Some(*x / *y),
            (ArithOp::Neg, [x]) => Some(-(*x).clone()),
            (ArithOp::Sq, [x]) => Some(*x * *x),
            _ => None,
        };
        if let Some(r) = r {
            return Term::Num(r);
        }
    }
    Term::Arith(op.clone(), a)
}

fn has_unbound_arith(t: &Term, s: &Subst) -> bool {
    match t {
        Term::Arith(_, a) => {
            let mut vs = BTreeSet::new();
            t.collect_vars(&mut vs);
            vs.iter().any(|v| lookup(s, v).is_none()) || a.iter().any(|x| has_unbound_arith(x, s))
        }
        Term::Func(_, a) => a.iter().any(|x| has_unbound_arith(x, s)),
        _ => false,
    }
}

/// Matches a pattern against a ground term, extending the substitution.
fn unify(p: &Term, g: &Term, s: &mut Subst) -> bool {
    match p {
        Term::Var(v) => match lookup(s, v) {
            Some(b) => b == g,
            None => {
                s.push((v.clone(), g.clone()));
                true
            }
        },
        Term::Func(f, a) => match g {
            Term::Func(gf, ga) if gf == f && ga.len() == a.len() => a.iter().zip(ga).all(|(x, y)| unify(x, y, s)),
            _ => false,
        },
        Term::Num(_) | Term::Sym(_) => p == g,
        _ => instantiate(p, s) == *g,
    }
}

pub(crate) fn guard_holds(op: CmpOp, l: &Term, r: &Term) -> bool {
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => op.holds(a, b),
        _ => match op {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            _ => op.holds(l, r),
        },
    }
}

type Key = (bool, String, usize);

fn key(a: &Atom) -> Key {
    (a.neg, a.pred.clone(), a.args.len())
}

#[derive(Default)]
struct Store {
    by_key: HashMap<Key, Vec<Atom>>,
    set: HashSet<Atom>,
}

impl Store {
    fn insert(&mut self, a: Atom) -> bool {
        if self.set.contains(&a) {
            return false;
        }
        self.by_key.entry(key(&a)).or_default().push(a.clone());
        self.set.insert(a);
        true
    }
    fn candidates(&self, k: &Key) -> &[Atom] {
        self.by_key.get(k).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug)]
enum Step {
    Pos(Atom),
    Guard(CmpOp, Term, Term),
}

fn vars_of_term(t: &Term) -> BTreeSet<String> {
    let mut v = BTreeSet::new();
    t.collect_vars(&mut v);
    v
}

/// Orders positive literals and guards so that each guard runs as soon as it
/// can be decided or used as an assignment.
fn plan_steps(lits: &[BodyLit], bound0: &BTreeSet<String>) -> Vec<Step> {
    let mut pos: Vec<&Atom> = lits
        .iter()
        .filter_map(|l| match l {
            BodyLit::Pos(a) => Some(a),
            _ => None,
        })
        .collect();
    let mut guards: Vec<(CmpOp, &Term, &Term)> = lits
        .iter()
        .filter_map(|l| match l {
            BodyLit::Guard(o, a, b) => Some((*o, a, b)),
            _ => None,
        })
        .collect();
    let mut bound = bound0.clone();
    let mut steps = Vec::new();
    loop {
        // guards that are decidable or assignments
        let mut progress = true;
        while progress {
            progress = false;
            let mut i = 0;
            while i < guards.len() {
                let (o, a, b) = guards[i];
                let va = vars_of_term(a);
                let vb = vars_of_term(b);
                let fa = va.iter().all(|v| bound.contains(v));
                let fb = vb.iter().all(|v| bound.contains(v));
                let assign_a = o == CmpOp::Eq && matches!(a, Term::Var(_)) && !fa && fb;
                let assign_b = o == CmpOp::Eq && matches!(b, Term::Var(_)) && !fb && fa;
                if (fa && fb) || assign_a || assign_b {
                    steps.push(Step::Guard(o, a.clone(), b.clone()));
                    bound.extend(va);
                    bound.extend(vb);
                    guards.remove(i);
                    progress = true;
                } else {
                    i += 1;
                }
            }
        }
        if pos.is_empty() {
            break;
        }
        // most constrained positive literal next
        let score = |a: &Atom| -> (usize, usize) {
            let mut vs = BTreeSet::new();
            a.collect_vars(&mut vs);
            let unbound = vs.iter().filter(|v| !bound.contains(*v)).count();
            let blocked_arith = a.args.iter().any(|t| {
                matches!(t, Term::Arith(..)) && vars_of_term(t).iter().any(|v| !bound.contains(v))
            });
            (usize::from(blocked_arith), unbound)
        };
        let (bi, _) = pos.iter().enumerate().min_by_key(|(_, a)| score(a)).unwrap();
        let a = pos.remove(bi);
        a.collect_vars(&mut bound);
        steps.push(Step::Pos(a.clone()));
    }
    for (o, a, b) in guards {
        steps.push(Step::Guard(o, a.clone(), b.clone()));
    }
    steps
}

fn join(steps: &[Step], store: &Store, s: &mut Subst, out: &mut dyn FnMut(&Subst)) {
    let Some((first, rest)) = steps.split_first() else {
        out(s);
        return;
    };
    match first {
        Step::Guard(op, a, b) => {
            let ia = instantiate(a, s);
            let ib = instantiate(b, s);
            let ga = ia.is_ground();
            let gb = ib.is_ground();
            if ga && gb {
                if guard_holds(*op, &ia, &ib) {
                    join(rest, store, s, out);
                }
            } else if *op == CmpOp::Eq && !ga && gb {
                if let Term::Var(v) = &ia {
                    s.push((v.clone(), ib));
                    join(rest, store, s, out);
                    s.pop();
                }
            } else if *op == CmpOp::Eq && ga && !gb {
                if let Term::Var(v) = &ib {
                    s.push((v.clone(), ia));
                    join(rest, store, s, out);
                    s.pop();
                }
            }
        }
        Step::Pos(p) => {
            if p.args.iter().any(|t| has_unbound_arith(t, s)) {
                return;
            }
            let pat: Vec<Term> = p.args.iter().map(|t| instantiate(t, s)).collect();
            for cand in store.candidates(&key(p)) {
                let mark = s.len();
                if pat.iter().zip(&cand.args).all(|(x, y)| unify(x, y, s)) {
                    join(rest, store, s, out);
                }
                s.truncate(mark);
            }
        }
    }
}

fn inst_atom(a: &Atom, s: &Subst) -> Atom {
    Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| instantiate(t, s)).collect(), neg: a.neg }
}

fn check_safety(r: &Rule) -> Result<(), GroundError> {
    let body_steps = plan_steps(&r.body, &BTreeSet::new());
    let mut bound = BTreeSet::new();
    for st in &body_steps {
        match st {
            Step::Pos(a) => a.collect_vars(&mut bound),
            Step::Guard(o, a, b) => {
                if *o == CmpOp::Eq {
                    if let Term::Var(v) = a {
                        if vars_of_term(b).iter().all(|x| bound.contains(x)) {
                            bound.insert(v.clone());
                        }
                    }
                    if let Term::Var(v) = b {
                        if vars_of_term(a).iter().all(|x| bound.contains(x)) {
                            bound.insert(v.clone());
                        }
                    }
                }
            }
        }
    }
    let unsafe_var = |vs: BTreeSet<String>, bound: &BTreeSet<String>| vs.into_iter().find(|v| !bound.contains(v));
    let mut need = BTreeSet::new();
    for l in &r.body {
        l.collect_vars(&mut need);
    }
    match &r.head {
        Head::Atom(a) => a.collect_vars(&mut need),
        Head::Denial => {}
        Head::Choice { elems, .. } => {
            for e in elems {
                let mut local = bound.clone();
                for st in plan_steps(&e.cond, &bound) {
                    match st {
                        Step::Pos(a) => a.collect_vars(&mut local),
                        Step::Guard(CmpOp::Eq, Term::Var(v), _) | Step::Guard(CmpOp::Eq, _, Term::Var(v)) => {
                            local.insert(v);
                        }
                        _ => {}
                    }
                }
                let mut ev = BTreeSet::new();
                e.atom.collect_vars(&mut ev);
                e.cond.iter().for_each(|c| c.collect_vars(&mut ev));
                if let Some(v) = unsafe_var(ev, &local) {
                    return Err(GroundError::Unsafe { var: v, rule: r.to_string() });
                }
            }
        }
    }
    if let Some(v) = unsafe_var(need, &bound) {
        return Err(GroundError::Unsafe { var: v, rule: r.to_string() });
    }
    Ok(())
}

fn expand_ranges(a: &Atom) -> Result<Vec<Atom>, GroundError> {
    let mut out = vec![Vec::new()];
    for t in &a.args {
        let opts: Vec<Term> = match t {
            Term::Range(lo, hi) => {
                let lo = instantiate(lo, &vec![]);
                let hi = instantiate(hi, &vec![]);
                match (lo.as_int(), hi.as_int()) {
                    (Some(l), Some(h)) => (l..=h).map(Term::int).collect(),
                    _ => return Err(GroundError::Range(a.to_string())),
                }
            }
            t => vec![instantiate(t, &vec![])],
        };
        let mut next = Vec::new();
        for prefix in &out {
            for o in &opts {
                let mut p: Vec<Term> = prefix.clone();
                p.push(o.clone());
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out.into_iter().map(|args| Atom { pred: a.pred.clone(), args, neg: a.neg }).collect())
}

fn has_range(a: &Atom) -> bool {
    a.args.iter().any(|t| matches!(t, Term::Range(..)))
}

fn substitute_constants(r: &Rule, c: &BTreeMap<String, Term>) -> Rule {
    if c.is_empty() {
        return r.clone();
    }
    let mut f = |t: Term| match &t {
        Term::Sym(s) => c.get(s).cloned().unwrap_or(t),
        _ => t,
    };
    let mut ta = |a: &Atom| Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| t.map_bottom_up(&mut f)).collect(), neg: a.neg };
    let tl = |l: &BodyLit, ta: &mut dyn FnMut(&Atom) -> Atom| match l {
        BodyLit::Pos(a) => BodyLit::Pos(ta(a)),
        BodyLit::Neg(a) => BodyLit::Neg(ta(a)),
        BodyLit::Guard(o, a, b) => {
            let mut g = |t: Term| match &t {
                Term::Sym(s) => c.get(s).cloned().unwrap_or(t),
                _ => t,
            };
            BodyLit::Guard(*o, a.map_bottom_up(&mut g), b.map_bottom_up(&mut g))
        }
    };
    let head = match &r.head {
        Head::Atom(a) => Head::Atom(ta(a)),
        Head::Denial => Head::Denial,
        Head::Choice { lb, ub, elems } => Head::Choice {
            lb: *lb,
            ub: *ub,
            elems: elems
                .iter()
                .map(|e| ChoiceElem { atom: ta(&e.atom), cond: e.cond.iter().map(|l| tl(l, &mut ta)).collect() })
                .collect(),
        },
    };
    let body = r.body.iter().map(|l| tl(l, &mut ta)).collect();
    Rule { head, body, note: r.note.clone() }
}

/// Strongly connected components of the predicate graph in dependency order.
fn components(rules: &[Rule]) -> Vec<Vec<usize>> {
    let mut preds: Vec<Key> = Vec::new();
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut id = |k: Key, preds: &mut Vec<Key>| -> usize {
        *index.entry(k.clone()).or_insert_with(|| {
            preds.push(k);
            preds.len() - 1
        })
    };
    let mut edges: Vec<(usize, usize)> = Vec::new(); // body -> head
    let mut rule_heads: Vec<Vec<usize>> = Vec::new();
    for r in rules {
        let heads: Vec<usize> = r.head_atoms().into_iter().map(|a| id(key(a), &mut preds)).collect();
        let mut bodies: Vec<usize> = Vec::new();
        for l in &r.body {
            if let BodyLit::Pos(a) | BodyLit::Neg(a) = l {
                bodies.push(id(key(a), &mut preds));
            }
        }
        if let Head::Choice { elems, .. } = &r.head {
            for e in elems {
                for l in &e.cond {
                    if let BodyLit::Pos(a) | BodyLit::Neg(a) = l {
                        bodies.push(id(key(a), &mut preds));
                    }
                }
            }
        }
        for &h in &heads {
            for &b in &bodies {
                edges.push((b, h));
            }
        }
        rule_heads.push(heads);
    }
    let n = preds.len();
    let mut adj = vec![Vec::new(); n];
    for (b, h) in edges {
        adj[b].push(h);
    }
    // Tarjan, iterative
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut stack = Vec::new();
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        idx[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on[root] = true;
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei < adj[v].len() {
                let w = adj[v][*ei];
                *ei += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on[w] = true;
                    call.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == idx[v] {
                    let mut c = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on[w] = false;
                        comp_of[w] = comps.len();
                        c.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(c);
                }
            }
        }
    }
    // Tarjan emits components in reverse topological order of the edge
    // direction body -> head, so reverse to process bodies first.
    let ncomp = comps.len();
    let mut rules_by_comp: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (ri, heads) in rule_heads.iter().enumerate() {
        // a choice rule may define predicates of several components; it
        // takes part in the fixpoint of each of them
        let mut cs: Vec<usize> = heads.iter().map(|&x| comp_of[x]).collect();
        cs.sort_unstable();
        cs.dedup();
        for c in cs {
            rules_by_comp[c].push(ri);
        }
    }
    rules_by_comp.into_iter().rev().filter(|v| !v.is_empty()).collect()
}

struct Prepared {
    rule: Rule,
    steps: Vec<Step>,
}

fn prepare(r: Rule) -> Result<Prepared, GroundError> {
    check_safety(&r)?;
    let steps = plan_steps(&r.body, &BTreeSet::new());
    Ok(Prepared { rule: r, steps })
}

fn derive_heads(p: &Prepared, store: &Store, out: &mut Vec<Atom>) {
    let mut s = Subst::new();
    join(&p.steps, store, &mut s, &mut |s| match &p.rule.head {
        Head::Atom(a) => out.push(inst_atom(a, s)),
        Head::Denial => {}
        Head::Choice { elems, .. } => {
            let bound: BTreeSet<String> = s.iter().map(|(k, _)| k.clone()).collect();
            for e in elems {
                let steps = plan_steps(&e.cond, &bound);
                let mut s2 = s.clone();
                join(&steps, store, &mut s2, &mut |s3| out.push(inst_atom(&e.atom, s3)));
            }
        }
    });
}

/// Grounds `p` under `ctx`.
pub fn ground(p: &CaspProgram, ctx: &GroundingContext) -> Result<GroundProgram, GroundError> {
    let mut store = Store::default();
    let mut facts: Vec<Atom> = Vec::new();
    let mut rules: Vec<Rule> = Vec::new();
    for f in &ctx.facts {
        facts.extend(expand_ranges(f)?);
    }
    for r in &p.rules {
        let r = substitute_constants(r, &ctx.constants);
        if let (Head::Atom(a), true) = (&r.head, r.body.is_empty()) {
            if a.is_ground() || has_range(a) {
                facts.extend(expand_ranges(a)?);
                continue;
            }
        }
        let mut any_range = false;
        for a in r.head_atoms() {
            any_range |= has_range(a);
        }
        for l in &r.body {
            if let BodyLit::Pos(a) | BodyLit::Neg(a) = l {
                any_range |= has_range(a);
            }
        }
        if any_range {
            return Err(GroundError::Range(r.to_string()));
        }
        rules.push(r);
    }
    for f in &facts {
        store.insert(f.clone());
    }
    let prepared: Vec<Prepared> = rules.into_iter().map(prepare).collect::<Result<_, _>>()?;
    let plain: Vec<Rule> = prepared.iter().map(|p| p.rule.clone()).collect();
    for comp in components(&plain) {
        loop {
            let mut new_atoms = Vec::new();
            for &ri in &comp {
                derive_heads(&prepared[ri], &store, &mut new_atoms);
            }
            let mut changed = false;
            for a in new_atoms {
                changed |= store.insert(a);
            }
            if !changed {
                break;
            }
        }
    }
    // final instantiation
    let mut ground_rules: Vec<Rule> = Vec::new();
    for p in &prepared {
        let mut s = Subst::new();
        join(&p.steps, &store, &mut s, &mut |s| {
            let body: Vec<BodyLit> = p
                .rule
                .body
                .iter()
                .filter_map(|l| match l {
                    BodyLit::Pos(a) => Some(BodyLit::Pos(inst_atom(a, s))),
                    BodyLit::Neg(a) => Some(BodyLit::Neg(inst_atom(a, s))),
                    BodyLit::Guard(..) => None,
                })
                .collect();
            let head = match &p.rule.head {
                Head::Atom(a) => Head::Atom(inst_atom(a, s)),
                Head::Denial => Head::Denial,
                Head::Choice { lb, ub, elems } => {
                    let bound: BTreeSet<String> = s.iter().map(|(k, _)| k.clone()).collect();
                    let mut ge = Vec::new();
                    for e in elems {
                        let steps = plan_steps(&e.cond, &bound);
                        let mut s2 = s.clone();
                        join(&steps, &store, &mut s2, &mut |s3| {
                            let cond: Vec<BodyLit> = e
                                .cond
                                .iter()
                                .filter_map(|l| match l {
                                    BodyLit::Pos(a) => Some(BodyLit::Pos(inst_atom(a, s3))),
                                    BodyLit::Neg(a) => Some(BodyLit::Neg(inst_atom(a, s3))),
                                    BodyLit::Guard(..) => None,
                                })
                                .collect();
                            ge.push(ChoiceElem { atom: inst_atom(&e.atom, s3), cond });
                        });
                    }
                    Head::Choice { lb: *lb, ub: *ub, elems: ge }
                }
            };
            ground_rules.push(Rule { head, body, note: p.rule.note.clone() });
        });
    }
    simplify(facts, ground_rules, &store)
}

fn simplify(facts: Vec<Atom>, rules: Vec<Rule>, possible: &Store) -> Result<GroundProgram, GroundError> {
    // certain atoms: facts plus heads of rules whose bodies are certainly true
    let mut certain: HashSet<Atom> = facts.iter().cloned().collect();
    loop {
        let mut changed = false;
        for r in &rules {
            if let Head::Atom(h) = &r.head {
                if certain.contains(h) {
                    continue;
                }
                let ok = r.body.iter().all(|l| match l {
                    BodyLit::Pos(a) => certain.contains(a),
                    BodyLit::Neg(a) => !possible.set.contains(a),
                    BodyLit::Guard(..) => true,
                });
                if ok {
                    certain.insert(h.clone());
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<Rule> = Vec::new();
    let mut seen: HashSet<Rule> = HashSet::new();
    let mut fact_list: Vec<Atom> = certain.iter().cloned().collect();
    fact_list.sort();
    for a in fact_list {
        let r = Rule::fact(a);
        seen.insert(r.clone());
        out.push(r);
    }
    for r in rules {
        if r.body.iter().any(|l| match l {
            BodyLit::Neg(a) => certain.contains(a),
            BodyLit::Pos(a) => !possible.set.contains(a),
            _ => false,
        }) {
            continue;
        }
        if let Head::Atom(h) = &r.head {
            if certain.contains(h) {
                continue;
            }
        }
        let mut body: Vec<BodyLit> = r
            .body
            .iter()
            .filter(|l| match l {
                BodyLit::Pos(a) => !certain.contains(a),
                BodyLit::Neg(a) => possible.set.contains(a),
                BodyLit::Guard(..) => false,
            })
            .cloned()
            .collect();
        let head = match r.head {
            Head::Choice { lb, ub, elems } => {
                let mut ge = Vec::new();
                for e in elems {
                    if e.cond.iter().any(|l| match l {
                        BodyLit::Pos(a) => !possible.set.contains(a),
                        BodyLit::Neg(a) => certain.contains(a),
                        _ => false,
                    }) {
                        continue;
                    }
                    let rest: Vec<&BodyLit> = e
                        .cond
                        .iter()
                        .filter(|l| match l {
                            BodyLit::Pos(a) => !certain.contains(a),
                            BodyLit::Neg(a) => possible.set.contains(a),
                            _ => false,
                        })
                        .collect();
                    if let Some(l) = rest.first() {
                        return Err(GroundError::Condition(l.to_string()));
                    }
                    if !ge.iter().any(|x: &ChoiceElem| x.atom == e.atom) {
                        ge.push(ChoiceElem { atom: e.atom, cond: vec![] });
                    }
                }
                Head::Choice { lb, ub, elems: ge }
            }
            Head::Denial if body.is_empty() => {
                // body certainly true: keep one certain literal so the rule stays a denial
                if let Some(BodyLit::Pos(a)) = r.body.iter().find(|l| matches!(l, BodyLit::Pos(_))) {
                    body.push(BodyLit::Pos(a.clone()));
                } else {
                    let f = Atom::prop("_false");
                    body.push(BodyLit::Neg(f));
                }
                Head::Denial
            }
            h => h,
        };
        let rule = Rule { head, body, note: None };
        if seen.insert(rule.clone()) {
            out.push(rule);
        }
    }
    Ok(GroundProgram::from_rules(out))
}
