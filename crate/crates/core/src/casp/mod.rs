//! Constraint answer set programs: ASP rules whose atoms may reify numeric
//! constraints (`cspdomain`, `cspvar`, `required`).
//!
//! Terms double as the carrier for numeric expressions. `tau` embeds a
//! constraint into a `required(..)` atom and `tau_inverse` reads it back.

mod parse;
mod semantics;

pub use parse::{parse_program, parse_term};
pub use semantics::{gamma, is_answer_set, least_model, reduct};

use crate::num::{fmt_rat, Rat};
use crate::rel::CmpOp;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaspError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("not a constraint atom: {0}")]
    NotConstraint(String),
    #[error("malformed constraint term: {0}")]
    BadConstraint(String),
}

/// Registered closed-form functions usable inside numeric constraints.
///
/// Both solve `v' = a + b·v²` from `v(0) = v0`; `RicV` gives `v(t)` and
/// `RicX` gives the integral of `v` over `[0, t]`. Arguments: `(a, b, v0, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumFn {
    RicV,
    RicX,
}

impl NumFn {
    pub fn name(self) -> &'static str {
        match self {
            NumFn::RicV => "ric_v",
            NumFn::RicX => "ric_x",
        }
    }
    pub fn arity(self) -> usize {
        4
    }
    pub fn from_name(s: &str) -> Option<NumFn> {
        match s {
            "ric_v" => Some(NumFn::RicV),
            "ric_x" => Some(NumFn::RicX),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Sq,
    Fn(NumFn),
}

impl ArithOp {
    fn prec(&self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
            ArithOp::Neg => 3,
            _ => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Num(Rat),
    Sym(String),
    Var(String),
    Func(String, Vec<Term>),
    Arith(ArithOp, Vec<Term>),
    /// `a..b`, expanded by the grounder.
    Range(Box<Term>, Box<Term>),
    /// A reified comparison, the argument of `required`.
    Rel(CmpOp, Box<Term>, Box<Term>),
    /// `sum([sel/arity], op, target)`.
    Agg { selector: Box<Term>, arity: usize, op: CmpOp, target: Box<Term> },
}

impl Term {
    pub fn sym(s: &str) -> Term {
        Term::Sym(s.to_string())
    }
    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }
    pub fn int(v: i64) -> Term {
        Term::Num(crate::num::int(v))
    }
    pub fn func(name: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Sym(name.to_string())
        } else {
            Term::Func(name.to_string(), args)
        }
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::Arith(ArithOp::Add, vec![a, b])
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::Arith(ArithOp::Sub, vec![a, b])
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::Arith(ArithOp::Mul, vec![a, b])
    }
    pub fn rel(op: CmpOp, a: Term, b: Term) -> Term {
        Term::Rel(op, Box::new(a), Box::new(b))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Num(_) | Term::Sym(_) => true,
            Term::Var(_) => false,
            Term::Func(_, a) | Term::Arith(_, a) => a.iter().all(Term::is_ground),
            Term::Range(a, b) | Term::Rel(_, a, b) => a.is_ground() && b.is_ground(),
            Term::Agg { selector, target, .. } => selector.is_ground() && target.is_ground(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Num(_) | Term::Sym(_) => {}
            Term::Func(_, a) | Term::Arith(_, a) => a.iter().for_each(|t| t.collect_vars(out)),
            Term::Range(a, b) | Term::Rel(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Agg { selector, target, .. } => {
                selector.collect_vars(out);
                target.collect_vars(out);
            }
        }
    }

    pub fn as_num(&self) -> Option<&Rat> {
        match self {
            Term::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Num(r) if r.is_integer() => num_traits::ToPrimitive::to_i64(r.numer()),
            _ => None,
        }
    }

    /// Functor name and arguments of a symbolic term.
    pub fn functor(&self) -> Option<(&str, &[Term])> {
        match self {
            Term::Sym(s) => Some((s, &[])),
            Term::Func(s, a) => Some((s, a)),
            _ => None,
        }
    }

    /// Replaces every subterm equal to `from` by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Func(f, a) => Term::Func(f.clone(), a.iter().map(|t| t.replace(from, to)).collect()),
            Term::Arith(o, a) => Term::Arith(o.clone(), a.iter().map(|t| t.replace(from, to)).collect()),
            Term::Range(a, b) => Term::Range(Box::new(a.replace(from, to)), Box::new(b.replace(from, to))),
            Term::Rel(op, a, b) => Term::Rel(*op, Box::new(a.replace(from, to)), Box::new(b.replace(from, to))),
            Term::Agg { selector, arity, op, target } => Term::Agg {
                selector: Box::new(selector.replace(from, to)),
                arity: *arity,
                op: *op,
                target: Box::new(target.replace(from, to)),
            },
            t => t.clone(),
        }
    }

    /// Applies `f` bottom-up to every subterm.
    pub fn map_bottom_up(&self, f: &mut dyn FnMut(Term) -> Term) -> Term {
        let t = match self {
            Term::Func(n, a) => Term::Func(n.clone(), a.iter().map(|t| t.map_bottom_up(f)).collect()),
            Term::Arith(o, a) => Term::Arith(o.clone(), a.iter().map(|t| t.map_bottom_up(f)).collect()),
            Term::Range(a, b) => Term::Range(Box::new(a.map_bottom_up(f)), Box::new(b.map_bottom_up(f))),
            Term::Rel(op, a, b) => Term::Rel(*op, Box::new(a.map_bottom_up(f)), Box::new(b.map_bottom_up(f))),
            Term::Agg { selector, arity, op, target } => Term::Agg {
                selector: Box::new(selector.map_bottom_up(f)),
                arity: *arity,
                op: *op,
                target: Box::new(target.map_bottom_up(f)),
            },
            t => t.clone(),
        };
        f(t)
    }

    pub fn contains(&self, needle: &Term) -> bool {
        if self == needle {
            return true;
        }
        match self {
            Term::Func(_, a) | Term::Arith(_, a) => a.iter().any(|t| t.contains(needle)),
            Term::Range(a, b) | Term::Rel(_, a, b) => a.contains(needle) || b.contains(needle),
            Term::Agg { selector, target, .. } => selector.contains(needle) || target.contains(needle),
            _ => false,
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Arith(op, _) => op.prec(),
        Term::Num(r) if r.is_negative() => 3,
        _ => 4,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
    if term_prec(t) < min {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(r) => f.write_str(&fmt_rat(r)),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::Func(n, a) => {
                write!(f, "{n}(")?;
                write_args(f, a)?;
                f.write_str(")")
            }
            Term::Arith(op, a) => match op {
                ArithOp::Add | ArithOp::Sub | ArithOp::Mul | ArithOp::Div => {
                    let p = op.prec();
                    let sym = match op {
                        ArithOp::Add => "+",
                        ArithOp::Sub => "-",
                        ArithOp::Mul => "*",
                        _ => "/",
                    };
                    write_operand(f, &a[0], p)?;
                    f.write_str(sym)?;
                    let right_min = if matches!(op, ArithOp::Sub | ArithOp::Div) { p + 1 } else { p };
                    write_operand(f, &a[1], right_min.max(if term_prec(&a[1]) == 3 { 4 } else { 0 }))
                }
                ArithOp::Neg => {
                    f.write_str("-")?;
                    write_operand(f, &a[0], 4)
                }
                ArithOp::Sqrt => {
                    f.write_str("sqrt(")?;
                    write_args(f, a)?;
                    f.write_str(")")
                }
                ArithOp::Sq => {
                    f.write_str("sq(")?;
                    write_args(f, a)?;
                    f.write_str(")")
                }
                ArithOp::Fn(g) => {
                    write!(f, "{}(", g.name())?;
                    write_args(f, a)?;
                    f.write_str(")")
                }
            },
            Term::Range(a, b) => write!(f, "{a}..{b}"),
            Term::Rel(op, a, b) => write!(f, "{a} {op} {b}"),
            Term::Agg { selector, arity, op, target } => {
                write!(f, "sum([{selector}/{arity}],{op},{target})")
            }
        }
    }
}

/// A (possibly classically negated) atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
    pub neg: bool,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: pred.to_string(), args, neg: false }
    }
    pub fn negated(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: pred.to_string(), args, neg: true }
    }
    pub fn prop(pred: &str) -> Atom {
        Atom::new(pred, vec![])
    }
    /// The classical complement `a` ↔ `-a`.
    pub fn complement(&self) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.clone(), neg: !self.neg }
    }
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
    }
    pub fn signature(&self) -> (bool, &str, usize) {
        (self.neg, &self.pred, self.args.len())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.neg {
            f.write_str("-")?;
        }
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_args(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BodyLit {
    Pos(Atom),
    /// Default negation `not a`.
    Neg(Atom),
    /// Arithmetic guard evaluated at grounding time.
    Guard(CmpOp, Term, Term),
}

impl BodyLit {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BodyLit::Pos(a) | BodyLit::Neg(a) => a.collect_vars(out),
            BodyLit::Guard(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for BodyLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyLit::Pos(a) => write!(f, "{a}"),
            BodyLit::Neg(a) => write!(f, "not {a}"),
            BodyLit::Guard(op, a, b) => write!(f, "{a} {op} {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoiceElem {
    pub atom: Atom,
    pub cond: Vec<BodyLit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Atom(Atom),
    Denial,
    Choice { lb: Option<u64>, ub: Option<u64>, elems: Vec<ChoiceElem> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<BodyLit>,
    /// Comment printed on the line before the rule in dumps.
    pub note: Option<String>,
}

impl Rule {
    pub fn fact(a: Atom) -> Rule {
        Rule { head: Head::Atom(a), body: vec![], note: None }
    }
    pub fn normal(a: Atom, body: Vec<BodyLit>) -> Rule {
        Rule { head: Head::Atom(a), body, note: None }
    }
    pub fn denial(body: Vec<BodyLit>) -> Rule {
        Rule { head: Head::Denial, body, note: None }
    }
    pub fn choice(lb: Option<u64>, ub: Option<u64>, elems: Vec<ChoiceElem>, body: Vec<BodyLit>) -> Rule {
        Rule { head: Head::Choice { lb, ub, elems }, body, note: None }
    }
    pub fn with_note(mut self, note: impl Into<String>) -> Rule {
        self.note = Some(note.into());
        self
    }

    pub fn pos_body(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            BodyLit::Pos(a) => Some(a),
            _ => None,
        })
    }
    pub fn neg_body(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            BodyLit::Neg(a) => Some(a),
            _ => None,
        })
    }

    /// Head atoms (all choice elements for a choice rule).
    pub fn head_atoms(&self) -> Vec<&Atom> {
        match &self.head {
            Head::Atom(a) => vec![a],
            Head::Denial => vec![],
            Head::Choice { elems, .. } => elems.iter().map(|e| &e.atom).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        let mut v = BTreeSet::new();
        self.collect_vars(&mut v);
        v.is_empty()
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.head {
            Head::Atom(a) => a.collect_vars(out),
            Head::Denial => {}
            Head::Choice { elems, .. } => {
                for e in elems {
                    e.atom.collect_vars(out);
                    e.cond.iter().for_each(|l| l.collect_vars(out));
                }
            }
        }
        self.body.iter().for_each(|l| l.collect_vars(out));
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.note {
            for line in n.lines() {
                writeln!(f, "% {line}")?;
            }
        }
        match &self.head {
            Head::Atom(a) => write!(f, "{a}")?,
            Head::Denial => {}
            Head::Choice { lb, ub, elems } => {
                if let Some(l) = lb {
                    write!(f, "{l}")?;
                }
                f.write_str("{ ")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", e.atom)?;
                    if !e.cond.is_empty() {
                        f.write_str(" : ")?;
                        for (j, c) in e.cond.iter().enumerate() {
                            if j > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{c}")?;
                        }
                    }
                }
                f.write_str(" }")?;
                if let Some(u) = ub {
                    write!(f, "{u}")?;
                }
            }
        }
        if !self.body.is_empty() {
            if matches!(self.head, Head::Denial) {
                f.write_str(":- ")?;
            } else {
                f.write_str(" :- ")?;
            }
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        } else if matches!(self.head, Head::Denial) {
            f.write_str(":-")?;
        }
        f.write_str(".")
    }
}

/// A non-ground program as produced by the encoder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CaspProgram {
    pub rules: Vec<Rule>,
}

impl CaspProgram {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn push(&mut self, r: Rule) {
        self.rules.push(r);
    }
    pub fn extend(&mut self, other: impl IntoIterator<Item = Rule>) {
        self.rules.extend(other);
    }
    /// One rule per line, notes as `%` comments.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }
}

/// A variable-free program together with its atom universe.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundProgram {
    pub rules: Vec<Rule>,
    pub atoms: BTreeSet<Atom>,
}

impl GroundProgram {
    /// Builds a ground program, collecting the universe from the rules.
    pub fn from_rules(rules: Vec<Rule>) -> GroundProgram {
        let mut atoms = BTreeSet::new();
        for r in &rules {
            for a in r.head_atoms() {
                atoms.insert(a.clone());
            }
            for l in &r.body {
                if let BodyLit::Pos(a) | BodyLit::Neg(a) = l {
                    atoms.insert(a.clone());
                }
            }
        }
        GroundProgram { rules, atoms }
    }
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }
}

pub type AnswerSet = BTreeSet<Atom>;

/// An answer set paired with values for its numeric variables.
#[derive(Clone, Debug, PartialEq)]
pub struct CaspSolution {
    pub answer: AnswerSet,
    pub alpha: BTreeMap<Term, f64>,
}

impl CaspSolution {
    pub fn value(&self, t: &Term) -> Option<f64> {
        self.alpha.get(t).copied()
    }
}

/// Numeric expression over CSP variables (named by ground terms).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumTerm {
    Const(Rat),
    Var(Term),
    Add(Box<NumTerm>, Box<NumTerm>),
    Sub(Box<NumTerm>, Box<NumTerm>),
    Mul(Box<NumTerm>, Box<NumTerm>),
    Div(Box<NumTerm>, Box<NumTerm>),
    Neg(Box<NumTerm>),
    Sqrt(Box<NumTerm>),
    Sq(Box<NumTerm>),
    Fn(NumFn, Vec<NumTerm>),
}

impl NumTerm {
    pub fn var(t: Term) -> NumTerm {
        NumTerm::Var(t)
    }
    pub fn konst(r: Rat) -> NumTerm {
        NumTerm::Const(r)
    }
    pub fn add(a: NumTerm, b: NumTerm) -> NumTerm {
        NumTerm::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: NumTerm, b: NumTerm) -> NumTerm {
        NumTerm::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: NumTerm, b: NumTerm) -> NumTerm {
        NumTerm::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: NumTerm, b: NumTerm) -> NumTerm {
        NumTerm::Div(Box::new(a), Box::new(b))
    }

    pub fn to_term(&self) -> Term {
        let bin = |op: ArithOp, a: &NumTerm, b: &NumTerm| Term::Arith(op, vec![a.to_term(), b.to_term()]);
        match self {
            NumTerm::Const(r) => Term::Num(r.clone()),
            NumTerm::Var(t) => t.clone(),
            NumTerm::Add(a, b) => bin(ArithOp::Add, a, b),
            NumTerm::Sub(a, b) => bin(ArithOp::Sub, a, b),
            NumTerm::Mul(a, b) => bin(ArithOp::Mul, a, b),
            NumTerm::Div(a, b) => bin(ArithOp::Div, a, b),
            NumTerm::Neg(a) => Term::Arith(ArithOp::Neg, vec![a.to_term()]),
            NumTerm::Sqrt(a) => Term::Arith(ArithOp::Sqrt, vec![a.to_term()]),
            NumTerm::Sq(a) => Term::Arith(ArithOp::Sq, vec![a.to_term()]),
            NumTerm::Fn(g, args) => Term::Arith(ArithOp::Fn(*g), args.iter().map(NumTerm::to_term).collect()),
        }
    }

    pub fn from_term(t: &Term) -> Result<NumTerm, CaspError> {
        let bad = || CaspError::BadConstraint(t.to_string());
        Ok(match t {
            Term::Num(r) => NumTerm::Const(r.clone()),
            Term::Sym(_) | Term::Func(..) | Term::Var(_) => NumTerm::Var(t.clone()),
            Term::Arith(op, a) => {
                let arg = |i: usize| -> Result<Box<NumTerm>, CaspError> {
                    Ok(Box::new(NumTerm::from_term(a.get(i).ok_or_else(bad)?)?))
                };
                let want = |n: usize| if a.len() == n { Ok(()) } else { Err(bad()) };
                match op {
                    ArithOp::Add => {
                        want(2)?;
                        NumTerm::Add(arg(0)?, arg(1)?)
                    }
                    ArithOp::Sub => {
                        want(2)?;
                        NumTerm::Sub(arg(0)?, arg(1)?)
                    }
                    ArithOp::Mul => {
                        want(2)?;
                        NumTerm::Mul(arg(0)?, arg(1)?)
                    }
                    ArithOp::Div => {
                        want(2)?;
                        NumTerm::Div(arg(0)?, arg(1)?)
                    }
                    ArithOp::Neg => {
                        want(1)?;
                        NumTerm::Neg(arg(0)?)
                    }
                    ArithOp::Sqrt => {
                        want(1)?;
                        NumTerm::Sqrt(arg(0)?)
                    }
                    ArithOp::Sq => {
                        want(1)?;
                        NumTerm::Sq(arg(0)?)
                    }
                    ArithOp::Fn(g) => {
                        want(g.arity())?;
                        NumTerm::Fn(*g, a.iter().map(NumTerm::from_term).collect::<Result<_, _>>()?)
                    }
                }
            }
            _ => return Err(bad()),
        })
    }

    pub fn vars(&self, out: &mut BTreeSet<Term>) {
        match self {
            NumTerm::Const(_) => {}
            NumTerm::Var(t) => {
                out.insert(t.clone());
            }
            NumTerm::Add(a, b) | NumTerm::Sub(a, b) | NumTerm::Mul(a, b) | NumTerm::Div(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            NumTerm::Neg(a) | NumTerm::Sqrt(a) | NumTerm::Sq(a) => a.vars(out),
            NumTerm::Fn(_, args) => args.iter().for_each(|x| x.vars(out)),
        }
    }

    /// Substitutes variables through `f` (returning `None` keeps the variable).
    pub fn subst(&self, f: &dyn Fn(&Term) -> Option<NumTerm>) -> NumTerm {
        let b = |x: &NumTerm| Box::new(x.subst(f));
        match self {
            NumTerm::Const(_) => self.clone(),
            NumTerm::Var(t) => f(t).unwrap_or_else(|| self.clone()),
            NumTerm::Add(x, y) => NumTerm::Add(b(x), b(y)),
            NumTerm::Sub(x, y) => NumTerm::Sub(b(x), b(y)),
            NumTerm::Mul(x, y) => NumTerm::Mul(b(x), b(y)),
            NumTerm::Div(x, y) => NumTerm::Div(b(x), b(y)),
            NumTerm::Neg(x) => NumTerm::Neg(b(x)),
            NumTerm::Sqrt(x) => NumTerm::Sqrt(b(x)),
            NumTerm::Sq(x) => NumTerm::Sq(b(x)),
            NumTerm::Fn(g, a) => NumTerm::Fn(*g, a.iter().map(|x| x.subst(f)).collect()),
        }
    }

    /// Evaluates with `f64` arithmetic; `None` on an unknown variable.
    pub fn eval(&self, env: &dyn Fn(&Term) -> Option<f64>) -> Option<f64> {
        Some(match self {
            NumTerm::Const(r) => crate::num::to_f64(r),
            NumTerm::Var(t) => env(t)?,
            NumTerm::Add(a, b) => a.eval(env)? + b.eval(env)?,
            NumTerm::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            NumTerm::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            NumTerm::Div(a, b) => a.eval(env)? / b.eval(env)?,
            NumTerm::Neg(a) => -a.eval(env)?,
            NumTerm::Sqrt(a) => a.eval(env)?.sqrt(),
            NumTerm::Sq(a) => {
                let v = a.eval(env)?;
                v * v
            }
            NumTerm::Fn(g, a) => {
                let v: Option<Vec<f64>> = a.iter().map(|x| x.eval(env)).collect();
                let v = v?;
                crate::csp::closed::eval_fn(*g, &v)
            }
        })
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, NumTerm::Const(r) if r.is_zero())
    }
}

impl fmt::Display for NumTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// `lhs op rhs` over CSP variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NumCmp {
    pub lhs: NumTerm,
    pub op: CmpOp,
    pub rhs: NumTerm,
}

impl NumCmp {
    pub fn new(lhs: NumTerm, op: CmpOp, rhs: NumTerm) -> NumCmp {
        NumCmp { lhs, op, rhs }
    }
    pub fn complement(&self) -> NumCmp {
        NumCmp { lhs: self.lhs.clone(), op: self.op.complement(), rhs: self.rhs.clone() }
    }
}

impl fmt::Display for NumCmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

/// `sum([sel/arity], op, target)`: the last argument of every atom of
/// relation `sel/arity` whose leading arguments match `sel`'s arguments is
/// summed and compared with `target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SumConstraint {
    pub selector: Term,
    pub arity: usize,
    pub op: CmpOp,
    pub target: Term,
}

impl SumConstraint {
    /// Whether `a` is selected; returns the summed term.
    pub fn select<'a>(&self, a: &'a Atom) -> Option<&'a Term> {
        let (name, prefix) = self.selector.functor()?;
        if a.neg || a.pred != name || a.args.len() != self.arity || prefix.len() >= self.arity {
            return None;
        }
        if a.args[..prefix.len()] != *prefix {
            return None;
        }
        a.args.last()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Cmp(NumCmp),
    Sum(SumConstraint),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", constraint_term(self))
    }
}

fn constraint_term(c: &Constraint) -> Term {
    match c {
        Constraint::Cmp(c) => Term::Rel(c.op, Box::new(c.lhs.to_term()), Box::new(c.rhs.to_term())),
        Constraint::Sum(s) => Term::Agg {
            selector: Box::new(s.selector.clone()),
            arity: s.arity,
            op: s.op,
            target: Box::new(s.target.clone()),
        },
    }
}

/// Embeds a constraint as a `required(..)` atom.
pub fn tau(c: &Constraint) -> Atom {
    Atom::new("required", vec![constraint_term(c)])
}

/// Reads a constraint back from a `required(..)` atom.
pub fn tau_inverse(a: &Atom) -> Result<Constraint, CaspError> {
    if a.neg || a.pred != "required" || a.args.len() != 1 {
        return Err(CaspError::NotConstraint(a.to_string()));
    }
    match &a.args[0] {
        Term::Rel(op, l, r) => Ok(Constraint::Cmp(NumCmp {
            lhs: NumTerm::from_term(l)?,
            op: *op,
            rhs: NumTerm::from_term(r)?,
        })),
        Term::Agg { selector, arity, op, target } => Ok(Constraint::Sum(SumConstraint {
            selector: (**selector).clone(),
            arity: *arity,
            op: *op,
            target: (**target).clone(),
        })),
        t => Err(CaspError::BadConstraint(t.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CspDomain {
    Fd,
    Q,
    R,
}

impl CspDomain {
    pub fn name(self) -> &'static str {
        match self {
            CspDomain::Fd => "fd",
            CspDomain::Q => "q",
            CspDomain::R => "r",
        }
    }
}

/// Typed view of the three reified constraint atom shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintAtom {
    Domain(CspDomain),
    Var(Term),
    Required(Constraint),
}

impl ConstraintAtom {
    pub fn from_atom(a: &Atom) -> Option<ConstraintAtom> {
        if a.neg || a.args.len() != 1 {
            return None;
        }
        match a.pred.as_str() {
            "cspdomain" => match &a.args[0] {
                Term::Sym(s) if s == "fd" => Some(ConstraintAtom::Domain(CspDomain::Fd)),
                Term::Sym(s) if s == "q" => Some(ConstraintAtom::Domain(CspDomain::Q)),
                Term::Sym(s) if s == "r" => Some(ConstraintAtom::Domain(CspDomain::R)),
                _ => None,
            },
            "cspvar" => Some(ConstraintAtom::Var(a.args[0].clone())),
            "required" => tau_inverse(a).ok().map(ConstraintAtom::Required),
            _ => None,
        }
    }

    pub fn to_atom(&self) -> Atom {
        match self {
            ConstraintAtom::Domain(d) => Atom::new("cspdomain", vec![Term::sym(d.name())]),
            ConstraintAtom::Var(t) => Atom::new("cspvar", vec![t.clone()]),
            ConstraintAtom::Required(c) => tau(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    fn v(i: i64) -> NumTerm {
        NumTerm::Var(Term::func("v", vec![Term::int(i)]))
    }

    #[test]
    fn tau_round_trip_sum_bound() {
        let c = Constraint::Cmp(NumCmp::new(
            NumTerm::add(NumTerm::add(v(1), v(2)), v(3)),
            CmpOp::Le,
            NumTerm::Const(int(6)),
        ));
        let a = tau(&c);
        assert_eq!(a.to_string(), "required(v(1)+v(2)+v(3) <= 6)");
        assert_eq!(tau_inverse(&a).unwrap(), c);
    }

    #[test]
    fn tau_identity_comparison() {
        let x = NumTerm::Var(Term::sym("x"));
        let c = Constraint::Cmp(NumCmp::new(x.clone(), CmpOp::Eq, x));
        assert_eq!(tau_inverse(&tau(&c)).unwrap(), c);
    }

    #[test]
    fn tau_inverse_rejects_plain_atoms() {
        assert!(tau_inverse(&Atom::prop("p")).is_err());
    }

    #[test]
    fn sum_constraint_prints_in_list_form() {
        let s = SumConstraint {
            selector: Term::func("decr", vec![Term::var("I")]),
            arity: 2,
            op: CmpOp::Eq,
            target: Term::func("v", vec![Term::func("contrib", vec![Term::sym("fuel_level"), Term::sym("decr")]), Term::var("I")]),
        };
        let a = tau(&Constraint::Sum(s.clone()));
        assert_eq!(a.to_string(), "required(sum([decr(I)/2],=,v(contrib(fuel_level,decr),I)))");
        assert_eq!(tau_inverse(&a).unwrap(), Constraint::Sum(s));
    }

    #[test]
    fn rule_display_matches_dump_syntax() {
        let r = Rule::normal(
            tau(&Constraint::Cmp(NumCmp::new(
                NumTerm::Var(Term::func("tend", vec![Term::var("I")])),
                CmpOp::Ge,
                NumTerm::Var(Term::func("tstart", vec![Term::var("I")])),
            ))),
            vec![BodyLit::Pos(Atom::new("step", vec![Term::var("I")]))],
        );
        assert_eq!(r.to_string(), "required(tend(I) >= tstart(I)) :- step(I).");
        let d = Rule::denial(vec![BodyLit::Pos(Atom::prop("a")), BodyLit::Neg(Atom::negated("b", vec![]))]);
        assert_eq!(d.to_string(), ":- a, not -b.");
    }

    #[test]
    fn arithmetic_parenthesisation() {
        let t = Term::mul(Term::int(2), Term::sub(Term::var("A"), Term::var("B")));
        assert_eq!(t.to_string(), "2*(A-B)");
        let t = Term::sub(Term::var("A"), Term::sub(Term::var("B"), Term::var("C")));
        assert_eq!(t.to_string(), "A-(B-C)");
        let t = Term::sub(Term::var("A"), Term::int(-3));
        assert_eq!(t.to_string(), "A-(-3)");
    }
}
