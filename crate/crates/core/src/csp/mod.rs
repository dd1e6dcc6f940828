//! Numeric constraint solving.
//!
//! A [`Csp`] is extracted from the constraint atoms of an answer set. The
//! solver first eliminates equalities exactly, then hands the rest either
//! to an exact simplex (linear case) or to interval branch-and-prune.

mod bnp;
pub mod closed;
pub mod expr;
pub mod interval;
pub mod simplex;

use crate::casp::{tau_inverse, AnswerSet, Atom, Constraint, ConstraintAtom, CspDomain, NumCmp, NumTerm, SumConstraint, Term};
use crate::num::{from_f64, to_f64, Rat};
use crate::rel::CmpOp;
use expr::{Expr, Lin, Node, Tape};
use interval::Iv;
use num_traits::{Signed, Zero};
use simplex::{Prov, Simplex};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CspError {
    #[error("constraint {constraint} uses undeclared CSP variable {var}")]
    Undeclared { var: String, constraint: String },
    #[error("malformed constraint {0}")]
    Malformed(String),
}

pub type Assignment = BTreeMap<Term, f64>;

#[derive(Clone, Debug)]
pub struct CspConfig {
    pub tol: f64,
    /// Pivot or search-node limit.
    pub budget: u64,
    pub domain: (f64, f64),
    pub deadline: Option<Instant>,
}

impl Default for CspConfig {
    fn default() -> Self {
        CspConfig { tol: 1e-6, budget: 1_000_000, domain: (-1e9, 1e9), deadline: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CspOutcome {
    Sat(Assignment),
    /// `core` lists constraint indices that are jointly unsatisfiable, when known.
    Infeasible { core: Option<Vec<usize>> },
    Exhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspConstraint {
    pub lhs: NumTerm,
    pub op: CmpOp,
    pub rhs: NumTerm,
    /// The `required(..)` atom this constraint came from.
    pub origin: Atom,
    pub sum: Option<SumConstraint>,
    /// Atoms whose values were summed, for aggregate constraints.
    pub selected: Vec<Atom>,
}

impl CspConstraint {
    pub fn cmp(&self) -> NumCmp {
        NumCmp::new(self.lhs.clone(), self.op, self.rhs.clone())
    }
}

#[derive(Clone, Debug)]
pub struct Csp {
    pub domain: CspDomain,
    pub vars: Vec<Term>,
    index: BTreeMap<Term, usize>,
    pub constraints: Vec<CspConstraint>,
    exprs: Vec<Expr>,
}

/// `d = lhs - rhs` tested against `op` with the usual tolerance rules.
pub fn holds_with_tol(d: f64, op: CmpOp, tol: f64) -> bool {
    match op {
        CmpOp::Le => d <= tol,
        CmpOp::Ge => d >= -tol,
        CmpOp::Eq => d.abs() <= tol,
        CmpOp::Lt => d < 0.0,
        CmpOp::Gt => d > 0.0,
        CmpOp::Ne => d.abs() > tol,
    }
}

impl Csp {
    pub fn new(domain: CspDomain) -> Csp {
        Csp { domain, vars: Vec::new(), index: BTreeMap::new(), constraints: Vec::new(), exprs: Vec::new() }
    }

    pub fn declare(&mut self, t: Term) -> usize {
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        self.vars.push(t.clone());
        self.index.insert(t, self.vars.len() - 1);
        self.vars.len() - 1
    }

    pub fn var_index(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }

    fn to_expr(&self, t: &NumTerm, origin: &Atom) -> Result<Expr, CspError> {
        let mut missing = None;
        let e = Expr::from_num(t, &mut |v| match self.index.get(v) {
            Some(&i) => i,
            None => {
                missing.get_or_insert_with(|| v.to_string());
                0
            }
        });
        match missing {
            Some(var) => Err(CspError::Undeclared { var, constraint: origin.to_string() }),
            None => Ok(e),
        }
    }

    fn push(&mut self, c: CspConstraint) -> Result<(), CspError> {
        let e = Expr::Sub(Box::new(self.to_expr(&c.lhs, &c.origin)?), Box::new(self.to_expr(&c.rhs, &c.origin)?));
        self.exprs.push(e.simplify());
        self.constraints.push(c);
        Ok(())
    }

    /// Adds `lhs op rhs`; every variable must already be declared.
    pub fn add(&mut self, c: NumCmp) -> Result<(), CspError> {
        let origin = crate::casp::tau(&Constraint::Cmp(c.clone()));
        self.push(CspConstraint { lhs: c.lhs, op: c.op, rhs: c.rhs, origin, sum: None, selected: Vec::new() })
    }

    /// Reads `cspdomain`, `cspvar` and `required` atoms.
    pub fn from_answer_set(a: &AnswerSet) -> Result<Csp, CspError> {
        let mut csp = Csp::new(CspDomain::R);
        let mut required = Vec::new();
        for atom in a {
            match ConstraintAtom::from_atom(atom) {
                Some(ConstraintAtom::Domain(d)) => csp.domain = d,
                Some(ConstraintAtom::Var(t)) => {
                    csp.declare(t);
                }
                Some(ConstraintAtom::Required(c)) => required.push((atom.clone(), c)),
                None if !atom.neg && atom.pred == "required" => {
                    return Err(CspError::Malformed(atom.to_string()));
                }
                None => {}
            }
        }
        for (origin, c) in required {
            match c {
                Constraint::Cmp(c) => csp.push(CspConstraint {
                    lhs: c.lhs,
                    op: c.op,
                    rhs: c.rhs,
                    origin,
                    sum: None,
                    selected: Vec::new(),
                })?,
                Constraint::Sum(s) => {
                    let mut selected = Vec::new();
                    let mut total: Option<NumTerm> = None;
                    for atom in a {
                        if let Some(v) = s.select(atom) {
                            let v = NumTerm::from_term(v).map_err(|_| CspError::Malformed(origin.to_string()))?;
                            total = Some(match total {
                                None => v,
                                Some(t) => NumTerm::add(t, v),
                            });
                            selected.push(atom.clone());
                        }
                    }
                    let target = NumTerm::from_term(&s.target).map_err(|_| CspError::Malformed(origin.to_string()))?;
                    csp.push(CspConstraint {
                        lhs: total.unwrap_or(NumTerm::Const(Rat::zero())),
                        op: s.op,
                        rhs: target,
                        origin,
                        sum: Some(s),
                        selected,
                    })?
                }
            }
        }
        Ok(csp)
    }

    /// Indices of the constraints that `alpha` violates.
    pub fn violations(&self, alpha: &Assignment, tol: f64) -> Vec<usize> {
        let env = |t: &Term| alpha.get(t).copied();
        (0..self.constraints.len())
            .filter(|&i| {
                let c = &self.constraints[i];
                match (c.lhs.eval(&env), c.rhs.eval(&env)) {
                    (Some(l), Some(r)) => !holds_with_tol(l - r, c.op, tol),
                    _ => true,
                }
            })
            .collect()
    }

    pub fn check(&self, alpha: &Assignment, tol: f64) -> bool {
        self.violations(alpha, tol).is_empty()
    }

    /// Human-readable listing of variables, domains and constraints.
    pub fn dump(&self, cfg: &CspConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "domain {}", self.domain.name());
        for v in &self.vars {
            let _ = writeln!(s, "var {v} in [{}, {}]", cfg.domain.0, cfg.domain.1);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "c{i}: {} {} {}", c.lhs, c.op.symbol(), c.rhs);
        }
        s
    }

    pub fn solve(&self, cfg: &CspConfig) -> CspOutcome {
        Solver { csp: self, cfg }.run()
    }
}

/// Step index of a variable term: its last integer argument.
fn step_of(t: &Term) -> i64 {
    match t.functor() {
        Some((_, args)) => args.last().and_then(Term::as_int).unwrap_or(-1),
        None => -1,
    }
}

/// Elimination preference: state values go first, times last.
fn rank_of(t: &Term) -> u8 {
    match t.functor() {
        Some(("tend", _)) => 3,
        Some(("tstart", _)) => 2,
        Some(("v", args)) => match args.first().and_then(Term::functor) {
            Some(("contrib", inner)) if inner.len() == 3 => 1,
            _ => 0,
        },
        _ => 0,
    }
}

struct Con {
    e: Expr,
    op: CmpOp,
    prov: Prov,
}

struct Def {
    var: usize,
    e: Expr,
}

enum LpRes {
    Sat(Vec<Rat>),
    Unsat(Prov),
    Out,
}

struct Solver<'a> {
    csp: &'a Csp,
    cfg: &'a CspConfig,
}

fn normalize(e: Expr) -> Expr {
    let e = e.simplify();
    match e.linear() {
        Some(l) => l.to_expr(),
        None => e.collect(),
    }
}

impl Solver<'_> {
    fn better_pivot(&self, a: usize, b: usize) -> bool {
        let key = |v: usize| {
            let t = &self.csp.vars[v];
            (-step_of(t), rank_of(t), v)
        };
        key(a) < key(b)
    }

    fn substitute(cons: &mut [Con], defs: &mut [Def], d: &Def, prov: &Prov) {
        let f = |v: usize| (v == d.var).then(|| d.e.clone());
        for c in cons.iter_mut() {
            if c.e.contains(d.var) {
                c.e = normalize(c.e.subst(&f));
                c.prov.extend(prov.iter().copied());
            }
        }
        for o in defs.iter_mut() {
            if o.e.contains(d.var) {
                o.e = normalize(o.e.subst(&f));
            }
        }
    }

    fn run(&self) -> CspOutcome {
        let n = self.csp.vars.len();
        let mut cons: Vec<Con> = self
            .csp
            .exprs
            .iter()
            .enumerate()
            .map(|(i, e)| Con { e: normalize(e.clone()), op: self.csp.constraints[i].op, prov: [i].into_iter().collect() })
            .collect();
        let mut defs: Vec<Def> = Vec::new();
        let mut def_prov: Vec<Prov> = Vec::new();
        let mut pivot = vec![false; n];
        loop {
            // Exact elimination of linear equalities.
            loop {
                let mut best: Option<(usize, (i64, i64), Lin)> = None;
                for (i, c) in cons.iter().enumerate() {
                    if c.op != CmpOp::Eq {
                        continue;
                    }
                    let Some(l) = c.e.linear() else { continue };
                    if l.is_constant() {
                        continue;
                    }
                    let top = l.coef.keys().map(|&v| step_of(&self.csp.vars[v])).max().unwrap_or(-1);
                    let key = (top, -(l.coef.len() as i64));
                    if best.as_ref().is_none_or(|b| key < b.1) {
                        best = Some((i, key, l));
                    }
                }
                let Some((i, _, l)) = best else { break };
                let c = cons.remove(i);
                let mut x = *l.coef.keys().next().unwrap();
                for &v in l.coef.keys() {
                    if self.better_pivot(v, x) {
                        x = v;
                    }
                }
                let a = l.coef[&x].clone();
                let mut rest = l.clone();
                rest.coef.remove(&x);
                let def = Def { var: x, e: rest.scale(&(-Rat::from_integer(1.into()) / a)).to_expr() };
                Self::substitute(&mut cons, &mut defs, &def, &c.prov);
                pivot[x] = true;
                defs.push(def);
                def_prov.push(c.prov);
            }
            // Constant constraints are decided on the spot.
            let mut k = 0;
            while k < cons.len() {
                let mut vs = BTreeSet::new();
                cons[k].e.vars(&mut vs);
                if vs.is_empty() {
                    let d = cons[k].e.eval(&[]);
                    let ok = match cons[k].e.as_const() {
                        Some(r) if cons[k].op.is_strict() || cons[k].op == CmpOp::Ne => holds_with_tol(to_f64(r), cons[k].op, self.cfg.tol),
                        Some(r) => cons[k].op.holds(r.clone(), Rat::zero()) || holds_with_tol(d, cons[k].op, self.cfg.tol),
                        None => holds_with_tol(d, cons[k].op, self.cfg.tol),
                    };
                    if !ok {
                        return CspOutcome::Infeasible { core: Some(cons[k].prov.iter().copied().collect()) };
                    }
                    cons.remove(k);
                } else {
                    k += 1;
                }
            }
            // One nonlinear definition `c·x + g = 0`, then back to the linear pass.
            let mut found = None;
            for (i, c) in cons.iter().enumerate() {
                if c.op != CmpOp::Eq {
                    continue;
                }
                let mut vs = BTreeSet::new();
                c.e.vars(&mut vs);
                let mut cand: Option<(usize, Rat, Expr)> = None;
                for v in vs {
                    if let Some((a, g)) = c.e.split_linear_in(v) {
                        if cand.as_ref().is_none_or(|(w, _, _)| self.better_pivot(v, *w)) {
                            cand = Some((v, a, g));
                        }
                    }
                }
                if let Some(x) = cand {
                    found = Some((i, x));
                    break;
                }
            }
            let Some((i, (x, a, g))) = found else { break };
            let c = cons.remove(i);
            let def = Def {
                var: x,
                e: Expr::Div(Box::new(Expr::Neg(Box::new(g))), Box::new(Expr::C(a))).simplify(),
            };
            Self::substitute(&mut cons, &mut defs, &def, &c.prov);
            pivot[x] = true;
            defs.push(def);
            def_prov.push(c.prov);
        }

        let mut used = BTreeSet::new();
        for c in &cons {
            c.e.vars(&mut used);
        }
        let free: Vec<usize> = used.into_iter().collect();
        let col: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let remap = |e: &Expr| e.subst(&|v| Some(Expr::V(col[&v])));
        let lins: Option<Vec<Lin>> = cons.iter().map(|c| remap(&c.e).linear()).collect();

        let mut exact: Vec<Option<Rat>> = vec![None; n];
        let mut value = vec![0.0f64; n];
        match lins {
            Some(lins) => match self.linear(&free, &cons, &lins) {
                LpRes::Sat(m) => {
                    for (i, &v) in free.iter().enumerate() {
                        value[v] = to_f64(&m[i]);
                        exact[v] = Some(m[i].clone());
                    }
                }
                LpRes::Unsat(p) => return CspOutcome::Infeasible { core: Some(p.into_iter().collect()) },
                LpRes::Out => return CspOutcome::Exhausted,
            },
            None => {
                // Step end times become durations, so flows see a single
                // variable where they would otherwise see a difference.
                let mut chain: Vec<usize> =
                    (0..free.len()).filter(|&j| rank_of(&self.csp.vars[free[j]]) == 3).collect();
                chain.sort_by_key(|&j| step_of(&self.csp.vars[free[j]]));
                let mut prefix: BTreeMap<usize, Expr> = BTreeMap::new();
                let mut acc: Option<Expr> = None;
                for &j in &chain {
                    let e = match acc {
                        None => Expr::V(j),
                        Some(p) => Expr::Add(Box::new(p), Box::new(Expr::V(j))),
                    };
                    prefix.insert(j, e.clone());
                    acc = Some(e);
                }
                let reparam = |e: &Expr| {
                    let e = remap(e).subst(&|j| prefix.get(&j).cloned());
                    normalize(e)
                };
                let tapes: Vec<(Tape, CmpOp)> = cons.iter().map(|c| (Tape::compile(&reparam(&c.e)), c.op)).collect();
                let vars = tapes
                    .iter()
                    .map(|(t, _)| {
                        let mut vs: Vec<usize> = t.nodes.iter().filter_map(|n| if let Node::V(k) = n { Some(*k) } else { None }).collect();
                        vs.sort_unstable();
                        vs.dedup();
                        vs
                    })
                    .collect();
                let span = self.cfg.domain.1 - self.cfg.domain.0;
                let mut domain = vec![Iv::new(self.cfg.domain.0, self.cfg.domain.1); free.len()];
                for &j in chain.iter().skip(1) {
                    domain[j] = Iv::new(-span, span);
                }
                let p = bnp::Problem {
                    cons: &tapes,
                    vars,
                    domain,
                    integer: self.csp.domain == CspDomain::Fd,
                    tol: self.cfg.tol,
                };
                match p.solve(self.cfg.budget, self.cfg.deadline) {
                    bnp::BnpResult::Found(mut x) => {
                        let mut sum = 0.0;
                        for &j in &chain {
                            sum += x[j];
                            x[j] = sum;
                        }
                        for (i, &v) in free.iter().enumerate() {
                            value[v] = x[i];
                        }
                    }
                    bnp::BnpResult::Infeasible => return CspOutcome::Infeasible { core: None },
                    bnp::BnpResult::Exhausted => return CspOutcome::Exhausted,
                }
            }
        }
        // Unconstrained variables sit at zero, clamped into the domain.
        for v in 0..n {
            if !pivot[v] && !col.contains_key(&v) {
                value[v] = 0.0f64.clamp(self.cfg.domain.0, self.cfg.domain.1);
                exact[v] = Some(from_f64(value[v]));
            }
        }
        for d in &defs {
            let lin = d.e.linear();
            value[d.var] = match lin {
                Some(l) if l.coef.keys().all(|v| exact[*v].is_some()) => {
                    let mut r = l.c.clone();
                    for (v, a) in &l.coef {
                        r += a * exact[*v].as_ref().unwrap();
                    }
                    let f = to_f64(&r);
                    exact[d.var] = Some(r);
                    f
                }
                _ => d.e.eval(&value),
            };
        }
        if defs.iter().any(|d| !(value[d.var] >= self.cfg.domain.0 && value[d.var] <= self.cfg.domain.1)) {
            return CspOutcome::Exhausted;
        }
        if self.csp.domain == CspDomain::Fd && value.iter().any(|x| x.fract() != 0.0) {
            return CspOutcome::Exhausted;
        }
        let alpha: Assignment = self.csp.vars.iter().cloned().zip(value).collect();
        if !self.csp.check(&alpha, self.cfg.tol) {
            return CspOutcome::Exhausted;
        }
        CspOutcome::Sat(alpha)
    }

    fn linear(&self, free: &[usize], cons: &[Con], lins: &[Lin]) -> LpRes {
        let mut s = Simplex::new(free.len());
        let (lo, hi) = (from_f64(self.cfg.domain.0), from_f64(self.cfg.domain.1));
        for j in 0..free.len() {
            let x = Lin::var(j);
            let r1 = s.assert_lin(&{
                let mut l = x.clone();
                l.c = -lo.clone();
                l
            }, CmpOp::Ge, Prov::new());
            let r2 = s.assert_lin(&{
                let mut l = x;
                l.c = -hi.clone();
                l
            }, CmpOp::Le, Prov::new());
            if r1.is_err() || r2.is_err() {
                return LpRes::Unsat(Prov::new());
            }
        }
        let mut ne = Vec::new();
        for (c, l) in cons.iter().zip(lins) {
            if c.op == CmpOp::Ne {
                ne.push((l.clone(), c.prov.clone()));
                continue;
            }
            if let Err(p) = s.assert_lin(l, c.op, c.prov.clone()) {
                return LpRes::Unsat(p);
            }
        }
        let mut budget = self.cfg.budget;
        self.branch(s, &ne, &mut budget)
    }

    fn branch(&self, mut s: Simplex, ne: &[(Lin, Prov)], budget: &mut u64) -> LpRes {
        if self.cfg.deadline.is_some_and(|d| Instant::now() > d) {
            return LpRes::Out;
        }
        match s.check(budget) {
            None => return LpRes::Out,
            Some(Err(p)) => return LpRes::Unsat(p),
            Some(Ok(())) => {}
        }
        let m = s.model();
        let tol = from_f64(self.cfg.tol);
        let mut split: Option<(Lin, Rat, Prov)> = None;
        for (l, p) in ne {
            let mut v = l.c.clone();
            for (j, a) in &l.coef {
                v += a * &m[*j];
            }
            if v.abs() <= tol {
                split = Some((l.clone(), tol.clone(), p.clone()));
                break;
            }
        }
        if split.is_none() && self.csp.domain == CspDomain::Fd {
            if let Some(j) = (0..m.len()).find(|&j| !m[j].is_integer()) {
                // x <= floor or x >= floor + 1
                let f = m[j].floor();
                let mut l = Lin::var(j);
                l.c = -f.clone();
                let mut a = s.clone();
                let mut b = s;
                let ra = match a.assert_lin(&l, CmpOp::Le, Prov::new()) {
                    Err(p) => LpRes::Unsat(p),
                    Ok(()) => self.branch(a, ne, budget),
                };
                if let LpRes::Sat(_) | LpRes::Out = ra {
                    return ra;
                }
                l.c = -(f + Rat::from_integer(1.into()));
                let rb = match b.assert_lin(&l, CmpOp::Ge, Prov::new()) {
                    Err(p) => LpRes::Unsat(p),
                    Ok(()) => self.branch(b, ne, budget),
                };
                return match (ra, rb) {
                    (_, LpRes::Sat(m)) => LpRes::Sat(m),
                    (LpRes::Unsat(p), LpRes::Unsat(q)) => LpRes::Unsat(&p | &q),
                    _ => LpRes::Out,
                };
            }
        }
        let Some((l, tol, p)) = split else { return LpRes::Sat(m) };
        // |l| > tol splits into l < -tol or l > tol
        let mut below = l.clone();
        below.c += &tol;
        let mut above = l;
        above.c -= &tol;
        let mut a = s.clone();
        let mut b = s;
        let ra = match a.assert_lin(&below, CmpOp::Lt, p.clone()) {
            Err(q) => LpRes::Unsat(q),
            Ok(()) => self.branch(a, ne, budget),
        };
        if let LpRes::Sat(_) | LpRes::Out = ra {
            return ra;
        }
        let rb = match b.assert_lin(&above, CmpOp::Gt, p.clone()) {
            Err(q) => LpRes::Unsat(q),
            Ok(()) => self.branch(b, ne, budget),
        };
        match (ra, rb) {
            (_, LpRes::Sat(m)) => LpRes::Sat(m),
            (LpRes::Unsat(x), LpRes::Unsat(y)) => LpRes::Unsat(&(&x | &y) | &p),
            _ => LpRes::Out,
        }
    }
}

/// Maps an infeasibility core to the `required` atoms it came from.
pub fn core_atoms(csp: &Csp, core: &[usize]) -> Vec<Atom> {
    core.iter().filter_map(|&i| csp.constraints.get(i)).map(|c| c.origin.clone()).collect()
}

/// Reads a single `required` atom, for callers that build systems by hand.
pub fn constraint_of(a: &Atom) -> Option<Constraint> {
    tau_inverse(a).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casp::parse_term;

    fn num(s: &str) -> NumTerm {
        NumTerm::from_term(&parse_term(s).unwrap()).unwrap()
    }

    fn system(vars: &[&str], cons: &[(&str, CmpOp, &str)]) -> Csp {
        let mut csp = Csp::new(CspDomain::R);
        for v in vars {
            csp.declare(parse_term(v).unwrap());
        }
        for (l, op, r) in cons {
            csp.add(NumCmp::new(num(l), *op, num(r))).unwrap();
        }
        csp
    }

    fn sat(csp: &Csp) -> Assignment {
        match csp.solve(&CspConfig::default()) {
            CspOutcome::Sat(a) => a,
            o => panic!("expected a solution, got {o:?}"),
        }
    }

    #[test]
    fn squeezed_variable() {
        let csp = system(&["x"], &[("x", CmpOp::Ge, "0"), ("x", CmpOp::Le, "0")]);
        assert_eq!(sat(&csp)[&Term::sym("x")], 0.0);
    }

    #[test]
    fn generator_fragment() {
        let csp = system(
            &["tstart(0)", "tend(0)", "tstart(1)", "tend(1)", "tend(2)", "tstart(2)"],
            &[
                ("tstart(0)", CmpOp::Eq, "0"),
                ("tend(0)", CmpOp::Eq, "tstart(0)"),
                ("tstart(1)", CmpOp::Eq, "tend(0)"),
                ("tend(1)-tstart(1)", CmpOp::Eq, "10"),
                ("tstart(2)", CmpOp::Eq, "tend(1)"),
                ("tend(2)-tstart(0)", CmpOp::Eq, "1000"),
                ("tend(2)", CmpOp::Ge, "tstart(2)"),
            ],
        );
        let a = sat(&csp);
        assert_eq!(a[&parse_term("tend(1)").unwrap()], 10.0);
        assert_eq!(a[&parse_term("tend(2)").unwrap()], 1000.0);
    }

    #[test]
    fn falling_body_speed() {
        let csp = system(&["v", "h"], &[("v", CmpOp::Eq, "sqrt(2*9.8*h)"), ("h", CmpOp::Eq, "5"), ("v", CmpOp::Ge, "0")]);
        let a = sat(&csp);
        assert!((a[&Term::sym("v")] - 9.899495).abs() < 1e-6);
    }

    #[test]
    fn infeasible_with_core() {
        let csp = system(
            &["x", "y", "z"],
            &[("x+y", CmpOp::Le, "1"), ("x", CmpOp::Ge, "1"), ("z", CmpOp::Ge, "3"), ("y", CmpOp::Gt, "0")],
        );
        match csp.solve(&CspConfig::default()) {
            CspOutcome::Infeasible { core: Some(c) } => assert_eq!(c, vec![0, 1, 3]),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn nonlinear_inequalities() {
        let csp = system(&["x", "y"], &[("x*x+y*y", CmpOp::Le, "4"), ("x*y", CmpOp::Ge, "1.5"), ("x", CmpOp::Ge, "0")]);
        let a = sat(&csp);
        assert!(csp.check(&a, 1e-6));
        let csp = system(&["x"], &[("x*x", CmpOp::Le, "-1")]);
        assert!(matches!(csp.solve(&CspConfig::default()), CspOutcome::Infeasible { .. }));
    }

    #[test]
    fn disequality_branches() {
        let csp = system(&["x"], &[("x", CmpOp::Ge, "0"), ("x", CmpOp::Le, "1"), ("x", CmpOp::Ne, "0"), ("x", CmpOp::Ne, "1")]);
        let a = sat(&csp);
        assert!(csp.check(&a, 1e-6));
        let csp = system(&["x"], &[("x", CmpOp::Ge, "0"), ("x", CmpOp::Le, "0"), ("x", CmpOp::Ne, "0")]);
        assert!(matches!(csp.solve(&CspConfig::default()), CspOutcome::Infeasible { .. }));
    }

    #[test]
    fn integer_domain() {
        let mut csp = system(&["x", "y"], &[("2*x+2*y", CmpOp::Eq, "3")]);
        csp.domain = CspDomain::Fd;
        assert!(!matches!(csp.solve(&CspConfig::default()), CspOutcome::Sat(_)));
        let mut csp = system(&["x"], &[("3*x", CmpOp::Ge, "4"), ("x", CmpOp::Le, "5")]);
        csp.domain = CspDomain::Fd;
        assert_eq!(sat(&csp)[&Term::sym("x")], 2.0);
    }

    #[test]
    fn undeclared_variable_is_an_error() {
        let mut csp = Csp::new(CspDomain::R);
        csp.declare(Term::sym("x"));
        let e = csp.add(NumCmp::new(num("x+y"), CmpOp::Le, num("1"))).unwrap_err();
        assert!(matches!(e, CspError::Undeclared { ref var, .. } if var == "y"));
    }

    #[test]
    fn perturbed_witness_fails_check() {
        let csp = system(&["x", "y"], &[("x+y", CmpOp::Eq, "3"), ("x", CmpOp::Ge, "1")]);
        let mut a = sat(&csp);
        assert!(csp.check(&a, 1e-6));
        *a.get_mut(&Term::sym("x")).unwrap() += 1e-3;
        assert!(!csp.check(&a, 1e-6));
    }

    #[test]
    fn sums_over_selected_atoms() {
        let prog = crate::casp::parse_program(
            "cspdomain(r). cspvar(t). cspvar(x). part(a,2). part(b,t). required(t >= 1). required(sum([part/2],=,x)). required(t <= 1).",
        )
        .unwrap();
        let g = crate::asp::ground(&prog, &Default::default()).unwrap();
        let ans = crate::asp::enumerate(&g, 0).remove(0);
        let csp = Csp::from_answer_set(&ans).unwrap();
        let a = sat(&csp);
        assert!((a[&Term::sym("x")] - 3.0).abs() < 1e-9);
        assert!(csp.dump(&CspConfig::default()).contains("var x in"));
    }
}
