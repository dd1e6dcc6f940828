//! PDDL+ front end: reader, typed model, printer and grounding.

mod ground;
mod parse;
mod print;
pub mod sexpr;

pub use ground::{ground_task, GroundSchema, GroundTask};
pub use parse::{parse_domain, parse_domain_named, parse_problem, parse_problem_named};
pub use print::{print_domain, print_problem};

use crate::num::{fmt_rat, Rat};
use crate::rel::CmpOp;
use std::fmt;
use thiserror::Error;

/// A located diagnostic, rendered as `file:line:col: message`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{file}:{line}:{col}: {message}")]
pub struct PddlError {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl PddlError {
    pub fn new(file: &str, line: usize, col: usize, message: &str) -> PddlError {
        PddlError { file: file.to_string(), line, col, message: message.to_string() }
    }
}

/// `name(args)`; arguments are objects once ground, `?vars` in schemas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FluentRef {
    pub name: String,
    pub args: Vec<String>,
}

impl FluentRef {
    pub fn new(name: &str, args: &[&str]) -> FluentRef {
        FluentRef { name: name.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for FluentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}({})", self.name, self.args.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NumExpr {
    Const(Rat),
    Fluent(FluentRef),
    Add(Box<NumExpr>, Box<NumExpr>),
    Sub(Box<NumExpr>, Box<NumExpr>),
    Mul(Box<NumExpr>, Box<NumExpr>),
    Div(Box<NumExpr>, Box<NumExpr>),
    Neg(Box<NumExpr>),
    Sqrt(Box<NumExpr>),
    Sq(Box<NumExpr>),
    /// `#t`
    Time,
    /// `?duration`
    Duration,
}

impl NumExpr {
    pub fn mentions_time(&self) -> bool {
        self.any(&|e| matches!(e, NumExpr::Time))
    }

    pub fn any(&self, p: &dyn Fn(&NumExpr) -> bool) -> bool {
        if p(self) {
            return true;
        }
        match self {
            NumExpr::Add(a, b) | NumExpr::Sub(a, b) | NumExpr::Mul(a, b) | NumExpr::Div(a, b) => a.any(p) || b.any(p),
            NumExpr::Neg(a) | NumExpr::Sqrt(a) | NumExpr::Sq(a) => a.any(p),
            _ => false,
        }
    }

    pub fn fluents(&self, out: &mut Vec<FluentRef>) {
        match self {
            NumExpr::Fluent(f) => {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
            NumExpr::Add(a, b) | NumExpr::Sub(a, b) | NumExpr::Mul(a, b) | NumExpr::Div(a, b) => {
                a.fluents(out);
                b.fluents(out);
            }
            NumExpr::Neg(a) | NumExpr::Sqrt(a) | NumExpr::Sq(a) => a.fluents(out),
            _ => {}
        }
    }

    /// Rewrites fluent references bottom-up.
    pub fn map_fluents(&self, f: &dyn Fn(&FluentRef) -> NumExpr) -> NumExpr {
        let b = |e: &NumExpr| Box::new(e.map_fluents(f));
        match self {
            NumExpr::Fluent(r) => f(r),
            NumExpr::Add(x, y) => NumExpr::Add(b(x), b(y)),
            NumExpr::Sub(x, y) => NumExpr::Sub(b(x), b(y)),
            NumExpr::Mul(x, y) => NumExpr::Mul(b(x), b(y)),
            NumExpr::Div(x, y) => NumExpr::Div(b(x), b(y)),
            NumExpr::Neg(x) => NumExpr::Neg(b(x)),
            NumExpr::Sqrt(x) => NumExpr::Sqrt(b(x)),
            NumExpr::Sq(x) => NumExpr::Sq(b(x)),
            e => e.clone(),
        }
    }

    /// The rate `r` of a `#t`-scaled expression `(* #t r)` or `(* r #t)`.
    pub fn time_rate(&self) -> Option<&NumExpr> {
        match self {
            NumExpr::Mul(a, b) if matches!(**a, NumExpr::Time) && !b.mentions_time() => Some(b),
            NumExpr::Mul(a, b) if matches!(**b, NumExpr::Time) && !a.mentions_time() => Some(a),
            _ => None,
        }
    }

    /// Evaluates with fluent values from `env`; `#t` and `?duration` from `t`, `d`.
    pub fn eval(&self, env: &dyn Fn(&FluentRef) -> Option<f64>, t: f64, d: f64) -> Option<f64> {
        Some(match self {
            NumExpr::Const(r) => crate::num::to_f64(r),
            NumExpr::Fluent(f) => env(f)?,
            NumExpr::Add(a, b) => a.eval(env, t, d)? + b.eval(env, t, d)?,
            NumExpr::Sub(a, b) => a.eval(env, t, d)? - b.eval(env, t, d)?,
            NumExpr::Mul(a, b) => a.eval(env, t, d)? * b.eval(env, t, d)?,
            NumExpr::Div(a, b) => {
                let q = b.eval(env, t, d)?;
                if q == 0.0 {
                    return None;
                }
                a.eval(env, t, d)? / q
            }
            NumExpr::Neg(a) => -a.eval(env, t, d)?,
            NumExpr::Sqrt(a) => a.eval(env, t, d)?.sqrt(),
            NumExpr::Sq(a) => {
                let v = a.eval(env, t, d)?;
                v * v
            }
            NumExpr::Time => t,
            NumExpr::Duration => d,
        })
    }

    fn subst_args(&self, m: &dyn Fn(&str) -> String) -> NumExpr {
        self.map_fluents(&|f| NumExpr::Fluent(FluentRef { name: f.name.clone(), args: f.args.iter().map(|a| m(a)).collect() }))
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Const(r) => write!(f, "{}", fmt_rat(r)),
            NumExpr::Fluent(r) if r.args.is_empty() => write!(f, "({})", r.name),
            NumExpr::Fluent(r) => write!(f, "({} {})", r.name, r.args.join(" ")),
            NumExpr::Add(a, b) => write!(f, "(+ {a} {b})"),
            NumExpr::Sub(a, b) => write!(f, "(- {a} {b})"),
            NumExpr::Mul(a, b) => write!(f, "(* {a} {b})"),
            NumExpr::Div(a, b) => write!(f, "(/ {a} {b})"),
            NumExpr::Neg(a) => write!(f, "(- {a})"),
            NumExpr::Sqrt(a) => write!(f, "(sqrt {a})"),
            NumExpr::Sq(a) => write!(f, "(^ {a} 2)"),
            NumExpr::Time => write!(f, "#t"),
            NumExpr::Duration => write!(f, "?duration"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub lhs: NumExpr,
    pub op: CmpOp,
    pub rhs: NumExpr,
}

impl Comparison {
    pub fn complement(&self) -> Comparison {
        Comparison { lhs: self.lhs.clone(), op: self.op.complement(), rhs: self.rhs.clone() }
    }
    pub fn fluents(&self) -> Vec<FluentRef> {
        let mut v = Vec::new();
        self.lhs.fluents(&mut v);
        self.rhs.fluents(&mut v);
        v
    }
    /// `lhs - rhs` under `env`.
    pub fn margin(&self, env: &dyn Fn(&FluentRef) -> Option<f64>) -> Option<f64> {
        Some(self.lhs.eval(env, 0.0, 0.0)? - self.rhs.eval(env, 0.0, 0.0)?)
    }
    pub fn holds(&self, env: &dyn Fn(&FluentRef) -> Option<f64>, eps: f64) -> Option<bool> {
        Some(crate::csp::holds_with_tol(self.margin(env)?, self.op, eps))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.op == CmpOp::Ne {
            write!(f, "(not (= {} {}))", self.lhs, self.rhs)
        } else {
            write!(f, "({} {} {})", self.op.pddl_symbol(), self.lhs, self.rhs)
        }
    }
}

/// Boolean literal `p(args)` or its negation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: FluentRef,
    pub neg: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = if self.atom.args.is_empty() {
            format!("({})", self.atom.name)
        } else {
            format!("({} {})", self.atom.name, self.atom.args.join(" "))
        };
        if self.neg {
            write!(f, "(not {a})")
        } else {
            write!(f, "{a}")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Conjunct {
    Lit(Literal),
    Cmp(Comparison),
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjunct::Lit(l) => write!(f, "{l}"),
            Conjunct::Cmp(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Timing {
    Untimed,
    AtStart,
    OverAll,
    AtEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub timing: Timing,
    pub conjuncts: Vec<Conjunct>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumOp {
    Assign,
    Increase,
    Decrease,
}

impl NumOp {
    pub fn keyword(self) -> &'static str {
        match self {
            NumOp::Assign => "assign",
            NumOp::Increase => "increase",
            NumOp::Decrease => "decrease",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EffectTiming {
    /// Instantaneous actions and events.
    Instant,
    AtStart,
    AtEnd,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Lit { timing: EffectTiming, lit: Literal },
    Num { timing: EffectTiming, op: NumOp, fluent: FluentRef, expr: NumExpr },
}

impl Effect {
    pub fn timing(&self) -> EffectTiming {
        match self {
            Effect::Lit { timing, .. } | Effect::Num { timing, .. } => *timing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaKind {
    Action,
    Durative,
    Process,
    Event,
}

impl SchemaKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SchemaKind::Action => ":action",
            SchemaKind::Durative => ":durative-action",
            SchemaKind::Process => ":process",
            SchemaKind::Event => ":event",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    pub kind: SchemaKind,
    pub name: String,
    pub params: Vec<Param>,
    pub conditions: Vec<Condition>,
    pub effects: Vec<Effect>,
    /// `?duration op expr` for durative actions.
    pub duration: Option<(CmpOp, NumExpr)>,
}

impl Schema {
    pub fn conjuncts(&self, t: Timing) -> impl Iterator<Item = &Conjunct> {
        self.conditions.iter().filter(move |c| c.timing == t).flat_map(|c| c.conjuncts.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)`; the implicit root is `object`.
    pub types: Vec<(String, String)>,
    pub constants: Vec<(String, String)>,
    pub predicates: Vec<Signature>,
    pub functions: Vec<Signature>,
    pub schemas: Vec<Schema>,
}

impl DomainModel {
    pub fn function(&self, name: &str) -> Option<&Signature> {
        self.functions.iter().find(|s| s.name == name)
    }
    pub fn predicate(&self, name: &str) -> Option<&Signature> {
        self.predicates.iter().find(|s| s.name == name)
    }
    pub fn has_type(&self, t: &str) -> bool {
        t == "object" || self.types.iter().any(|(n, _)| n == t)
    }
    /// Whether `sub` equals or descends from `sup`.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub.to_string();
        for _ in 0..=self.types.len() {
            if cur == sup || sup == "object" {
                return true;
            }
            match self.types.iter().find(|(n, _)| *n == cur) {
                Some((_, p)) => cur = p.clone(),
                None => return false,
            }
        }
        false
    }
    pub fn schema(&self, name: &str) -> Option<&Schema> {
        self.schemas.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanningInstance {
    pub domain: DomainModel,
    pub problem: String,
    pub objects: Vec<(String, String)>,
    pub init_facts: Vec<FluentRef>,
    pub init_values: Vec<(FluentRef, Rat)>,
    pub goal: Vec<Conjunct>,
}

impl PlanningInstance {
    /// Objects and domain constants with their types.
    pub fn all_objects(&self) -> impl Iterator<Item = &(String, String)> {
        self.domain.constants.iter().chain(self.objects.iter())
    }
    pub fn init_value(&self, f: &FluentRef) -> Option<&Rat> {
        self.init_values.iter().find(|(g, _)| g == f).map(|(_, v)| v)
    }
}

/// Every `#t` sits under a continuous effect (AST walk).
pub fn time_only_in_continuous_effects(d: &DomainModel) -> bool {
    let cmp_ok = |c: &Comparison| !c.lhs.mentions_time() && !c.rhs.mentions_time();
    d.schemas.iter().all(|s| {
        s.conditions.iter().flat_map(|c| &c.conjuncts).all(|c| match c {
            Conjunct::Cmp(c) => cmp_ok(c),
            Conjunct::Lit(_) => true,
        }) && s.duration.as_ref().is_none_or(|(_, e)| !e.mentions_time())
            && s.effects.iter().all(|e| match e {
                Effect::Num { timing, expr, .. } => *timing == EffectTiming::Continuous || !expr.mentions_time(),
                Effect::Lit { .. } => true,
            })
    })
}
