//! Translation of a ground PDDL+ task into a CASP program.
//!
//! States are indexed by steps `0..=last_step`; happenings of step `I`
//! occur at `tend(I)`. Numeric fluents become CSP variables `v_initial(n,I)`
//! and `v_final(n,I)`, continuous change is split into per-source
//! contributions summed by aggregates.

pub mod flow;

use crate::casp::{parse_program, parse_term, ArithOp, CaspProgram, NumFn, Term};
use crate::num::fmt_rat;
use crate::pddl::{
    Comparison, Conjunct, Effect, EffectTiming, FluentRef, GroundSchema, GroundTask, Literal, NumExpr, NumOp,
    SchemaKind, Timing,
};
use crate::rel::CmpOp;
use flow::{Contribution, Shape, Sign};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("{schema}: unsupported effect shape: {detail}")]
    UnsupportedEffect { schema: String, detail: String },
    #[error("fluent {0} is never changed and has no initial value")]
    MissingInit(String),
    #[error("{0}: ?duration may only appear in the duration constraint")]
    DurationOutsideConstraint(String),
    #[error("names {0} and {1} map to the same identifier {2}")]
    NameClash(String, String, String),
    #[error("bad heuristic hint {0}")]
    BadHint(String),
}

/// Search-control additions on top of the plain encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    #[default]
    Basic,
    /// At least one happening at every step before the last.
    Heuristic,
    /// Tracks known integer values of fluents as `has_val` atoms.
    Estimator,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(Variant::Basic),
            "heuristic" => Ok(Variant::Heuristic),
            "estimator" => Ok(Variant::Estimator),
            _ => Err(format!("unknown variant {s} (expected basic, heuristic or estimator)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingConfig {
    pub last_step: usize,
    /// Bounds of the per-step choice over instantaneous actions.
    pub lambda: u64,
    pub mu: u64,
    pub variant: Variant,
    /// `(occurrence, step)` pairs that must happen, e.g. `("start(generate)", 0)`.
    pub hints: Vec<(String, usize)>,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig { last_step: 3, lambda: 0, mu: 1, variant: Variant::Basic, hints: Vec::new() }
    }
}

/// Lowercase-initial identifier usable as an ASP constant.
pub fn asp_ident(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    match out.chars().next() {
        Some(c) if c.is_ascii_uppercase() => {
            out.replace_range(0..1, &c.to_ascii_lowercase().to_string());
        }
        Some(c) if c.is_ascii_lowercase() => {}
        _ => out.insert_str(0, "x_"),
    }
    out
}

pub fn fluent_term(f: &FluentRef) -> Term {
    Term::func(&asp_ident(&f.name), f.args.iter().map(|a| Term::sym(&asp_ident(a))).collect())
}

pub fn action_term(a: &GroundSchema) -> Term {
    Term::func(&asp_ident(&a.schema), a.args.iter().map(|x| Term::sym(&asp_ident(x))).collect())
}

/// The ground schema an occurrence term such as `start(refuel(tank1))` refers to.
pub fn action_of_term<'a>(task: &'a GroundTask, t: &Term) -> Option<&'a GroundSchema> {
    task.actions.iter().find(|a| action_term(a) == *t)
}

fn num_term(r: &crate::num::Rat) -> Term {
    Term::Num(r.clone())
}

fn lit_str(l: &Literal, step: &str) -> String {
    let h = format!("holds({},{step})", fluent_term(&l.atom));
    if l.neg {
        format!("-{h}")
    } else {
        h
    }
}

fn complement(l: &Literal) -> Literal {
    Literal { atom: l.atom.clone(), neg: !l.neg }
}

/// Which per-step variable stands for a fluent inside an expression.
#[derive(Clone, Copy)]
enum At<'s> {
    Initial(&'s str),
    Final(&'s str),
}

pub struct Encoder<'a> {
    task: &'a GroundTask,
    cfg: &'a EncodingConfig,
    prog: CaspProgram,
    statics: BTreeSet<FluentRef>,
    contribs: Vec<Contribution>,
    validity: Vec<flow::Validity>,
    /// Fluents with instantaneous numeric effects.
    jumps: BTreeSet<FluentRef>,
    pending_note: Option<String>,
}

impl<'a> Encoder<'a> {
    pub fn new(task: &'a GroundTask, cfg: &'a EncodingConfig) -> Result<Encoder<'a>, EncodeError> {
        check_names(task)?;
        let (contribs, validity) = flow::contributions(&task.actions)?;
        let jumps = task
            .actions
            .iter()
            .flat_map(|a| &a.effects)
            .filter_map(|e| match e {
                Effect::Num { timing, fluent, .. } if *timing != EffectTiming::Continuous => Some(fluent.clone()),
                _ => None,
            })
            .collect();
        Ok(Encoder {
            task,
            cfg,
            prog: CaspProgram::new(),
            statics: task.static_fluents(),
            contribs,
            validity,
            jumps,
            pending_note: None,
        })
    }

    fn last(&self) -> usize {
        self.cfg.last_step
    }

    fn note(&mut self, n: impl Into<String>) {
        self.pending_note = Some(n.into());
    }

    fn rule(&mut self, text: impl AsRef<str>) {
        let text = text.as_ref();
        let p = parse_program(text).unwrap_or_else(|e| panic!("generated rule does not parse: {text}: {e}"));
        for mut r in p.rules {
            if let Some(n) = self.pending_note.take() {
                r = r.with_note(n);
            }
            self.prog.push(r);
        }
    }

    fn dynamic_fluents(&self) -> Vec<&'a FluentRef> {
        self.task.fluents.iter().filter(|f| !self.statics.contains(*f)).collect()
    }

    fn expr(&self, e: &NumExpr, at: At<'_>, owner: &str) -> Result<Term, EncodeError> {
        self.expr_with(e, &|f| match at {
            At::Initial(s) => Ok(state_var("v_initial", f, s)),
            At::Final(s) => Ok(state_var("v_final", f, s)),
        }, None, owner)
    }

    /// Renders `e`; static fluents become their initial values, `#t` becomes `time`.
    fn expr_with(
        &self,
        e: &NumExpr,
        dynamic: &dyn Fn(&FluentRef) -> Result<Term, EncodeError>,
        time: Option<&Term>,
        owner: &str,
    ) -> Result<Term, EncodeError> {
        let r = |x: &NumExpr| self.expr_with(x, dynamic, time, owner);
        Ok(match e {
            NumExpr::Const(c) => num_term(c),
            NumExpr::Fluent(f) if self.statics.contains(f) => match self.task.init_value(f) {
                Some(v) => num_term(v),
                None => return Err(EncodeError::MissingInit(f.to_string())),
            },
            NumExpr::Fluent(f) => dynamic(f)?,
            NumExpr::Add(a, b) => Term::Arith(ArithOp::Add, vec![r(a)?, r(b)?]),
            NumExpr::Sub(a, b) => Term::Arith(ArithOp::Sub, vec![r(a)?, r(b)?]),
            NumExpr::Mul(a, b) => Term::Arith(ArithOp::Mul, vec![r(a)?, r(b)?]),
            NumExpr::Div(a, b) => Term::Arith(ArithOp::Div, vec![r(a)?, r(b)?]),
            NumExpr::Neg(a) => Term::Arith(ArithOp::Neg, vec![r(a)?]),
            NumExpr::Sqrt(a) => Term::Arith(ArithOp::Sqrt, vec![r(a)?]),
            NumExpr::Sq(a) => Term::Arith(ArithOp::Sq, vec![r(a)?]),
            NumExpr::Time => match time {
                Some(t) => t.clone(),
                None => return Err(EncodeError::DurationOutsideConstraint(owner.to_string())),
            },
            NumExpr::Duration => return Err(EncodeError::DurationOutsideConstraint(owner.to_string())),
        })
    }

    fn gamma(&self, c: &Comparison, at: At<'_>, owner: &str) -> Result<Term, EncodeError> {
        Ok(Term::rel(c.op, self.expr(&c.lhs, at, owner)?, self.expr(&c.rhs, at, owner)?))
    }

    /// Frame axioms, time-line constraints and the step range.
    pub fn domain_independent(&mut self) {
        let l = self.last();
        self.note("time line");
        self.rule("cspdomain(r).");
        self.rule(format!("step(0..{l})."));
        self.rule("cspvar(tstart(I)) :- step(I).");
        self.rule("cspvar(tend(I)) :- step(I).");
        self.rule("required(tstart(I) >= 0) :- step(I).");
        self.rule("required(tend(I) >= 0) :- step(I).");
        self.rule("required(tend(I) >= tstart(I)) :- step(I).");
        self.rule("required(tstart(I2) = tend(I1)) :- step(I1), step(I2), I2 = I1+1.");
        self.note("inertia");
        self.rule("holds(F,I2) :- fluent(F), step(I1), step(I2), I2 = I1+1, holds(F,I1), not -holds(F,I2).");
        self.rule("-holds(F,I2) :- fluent(F), step(I1), step(I2), I2 = I1+1, -holds(F,I1), not holds(F,I2).");
        self.rule(":- fluent(F), step(I), holds(F,I), -holds(F,I).");
        let props: Vec<String> = self.task.props.iter().map(|p| fluent_term(p).to_string()).collect();
        for p in props {
            self.rule(format!("fluent({p})."));
        }
        let running: Vec<Term> = self
            .task
            .actions
            .iter()
            .filter(|a| matches!(a.kind, SchemaKind::Durative | SchemaKind::Process))
            .map(action_term)
            .collect();
        for d in running {
            self.rule(format!("fluent(inprogr({d}))."));
        }
    }

    /// State variables, carry-over between states and the balance of
    /// continuous change for every fluent that some effect touches.
    pub fn numeric_fluents(&mut self) {
        for n in self.dynamic_fluents() {
            let t = fluent_term(n);
            self.note(format!("fluent {n}"));
            self.rule(format!("cspvar(v_initial({t},I)) :- step(I)."));
            self.rule(format!("cspvar(v_final({t},I)) :- step(I)."));
            let guard = if self.jumps.contains(n) { format!(", not ab(jump({t}),I2)") } else { String::new() };
            self.rule(format!(
                "required(v_initial({t},I2) = v_final({t},I1)) :- step(I1), step(I2), I2 = I1+1{guard}."
            ));
            let mine: Vec<(Sign, bool)> =
                self.contribs.iter().filter(|c| c.fluent == *n).map(|c| (c.sign, c.nonneg)).collect();
            if mine.is_empty() {
                self.rule(format!("required(v_final({t},I) = v_initial({t},I)) :- step(I), not ab({t},I)."));
                continue;
            }
            let mut balance = format!("v_initial({t},I)");
            for sign in [Sign::Incr, Sign::Decr] {
                let fam: Vec<&(Sign, bool)> = mine.iter().filter(|c| c.0 == sign).collect();
                if fam.is_empty() {
                    continue;
                }
                let s = sign.name();
                self.rule(format!("cspvar(v(contrib({t},{s}),I)) :- step(I)."));
                if fam.iter().all(|c| c.1) {
                    self.rule(format!("required(v(contrib({t},{s}),I) >= 0) :- step(I)."));
                }
                self.rule(format!("{s}({t},I,v(contrib({t},{s},D),I)) :- step(I), cspvar(v(contrib({t},{s},D),I))."));
                self.rule(format!("required(sum([{s}({t},I)/3],=,v(contrib({t},{s}),I))) :- step(I)."));
                balance.push_str(if sign == Sign::Incr { "+" } else { "-" });
                balance.push_str(&format!("v(contrib({t},{s}),I)"));
            }
            self.rule(format!("required(v_final({t},I) = {balance}) :- step(I)."));
        }
    }

    fn shape_term(&self, c: &Contribution, owner: &str) -> Result<Term, EncodeError> {
        let dt = parse_term("tend(I)-tstart(I)").unwrap();
        let init = |f: &FluentRef| Ok(state_var("v_initial", f, "I"));
        let e = |x: &NumExpr| self.expr_with(x, &init, Some(&dt), owner);
        let t = match &c.shape {
            Shape::Expr(x) => e(x)?,
            Shape::RicDelta { a, b, v } => {
                let v0 = state_var("v_initial", v, "I");
                Term::sub(Term::Arith(ArithOp::Fn(NumFn::RicV), vec![e(a)?, e(b)?, v0.clone(), dt.clone()]), v0)
            }
            Shape::RicPos { c0, k, a, b, v } => {
                let v0 = state_var("v_initial", v, "I");
                let rx = Term::Arith(ArithOp::Fn(NumFn::RicX), vec![e(a)?, e(b)?, v0, dt.clone()]);
                let lin = Term::mul(e(c0)?, dt.clone());
                let pos = Term::mul(e(k)?, rx);
                if c0_is_zero(c0) {
                    pos
                } else {
                    Term::add(lin, pos)
                }
            }
        };
        Ok(if c.negate { Term::Arith(ArithOp::Neg, vec![t]) } else { t })
    }

    /// Per-source contribution rules: the closed form while the source runs,
    /// zero otherwise.
    pub fn contributions(&mut self) -> Result<(), EncodeError> {
        for c in self.contribs.clone() {
            let src = &self.task.actions[c.source];
            let d = action_term(src);
            let n = fluent_term(&c.fluent);
            let s = c.sign.name();
            let v = format!("v(contrib({n},{s},{d}),I)");
            let val = self.shape_term(&c, &src.name())?;
            self.note(format!("{} changes {}", src.name(), c.fluent));
            self.rule(format!("cspvar({v}) :- step(I)."));
            if c.nonneg {
                self.rule(format!("required({v} >= 0) :- step(I)."));
            }
            self.rule(format!("required({v} = {val}) :- step(I), holds(inprogr({d}),I)."));
            self.rule(format!("ab(contrib({n},{s},{d}),I) :- step(I), holds(inprogr({d}),I)."));
            self.rule(format!("required({v} = 0) :- step(I), not ab(contrib({n},{s},{d}),I)."));
            self.rule(format!("ab({n},I) :- step(I), holds(inprogr({d}),I)."));
        }
        for v in self.validity.clone() {
            let src = &self.task.actions[v.source];
            let d = action_term(src);
            let init = |f: &FluentRef| Ok(state_var("v_initial", f, "I"));
            let c = self.expr_with(&v.c, &init, None, &src.name())?;
            let lvl = state_var("v_initial", &v.level, "I");
            self.rule(format!(
                "required({} <= 2*sqrt({lvl})) :- step(I), holds(inprogr({d}),I).",
                Term::mul(c, parse_term("tend(I)-tstart(I)").unwrap())
            ));
        }
        Ok(())
    }

    fn occurrence_effects(&mut self, occ: &str, effects: &[&Effect], owner: &str) -> Result<(), EncodeError> {
        for e in effects {
            match e {
                Effect::Lit { lit, .. } => {
                    self.rule(format!(
                        "{} :- step(I1), step(I2), I2 = I1+1, occurs({occ},I1).",
                        lit_str(lit, "I2")
                    ));
                }
                Effect::Num { op, fluent, expr, .. } => {
                    if self.statics.contains(fluent) {
                        continue;
                    }
                    let n = fluent_term(fluent);
                    let rhs = self.expr(expr, At::Final("I1"), owner)?;
                    let before = state_var("v_final", fluent, "I1");
                    let rhs = match op {
                        NumOp::Assign => rhs,
                        NumOp::Increase => Term::add(before, rhs),
                        NumOp::Decrease => Term::sub(before, rhs),
                    };
                    self.rule(format!(
                        "required(v_initial({n},I2) = {rhs}) :- step(I1), step(I2), I2 = I1+1, occurs({occ},I1)."
                    ));
                    self.rule(format!("ab(jump({n}),I2) :- step(I1), step(I2), I2 = I1+1, occurs({occ},I1)."));
                }
            }
        }
        Ok(())
    }

    fn preconditions(&mut self, occ: &str, conj: &[&Conjunct], owner: &str) -> Result<(), EncodeError> {
        for c in conj {
            match c {
                Conjunct::Lit(l) => self.rule(format!(":- {}, occurs({occ},I).", lit_str(&complement(l), "I"))),
                Conjunct::Cmp(c) => {
                    let g = self.gamma(c, At::Final("I"), owner)?;
                    self.rule(format!("required({g}) :- occurs({occ},I)."));
                }
            }
        }
        Ok(())
    }

    fn invariants(&mut self, d: &Term, conj: &[&Conjunct], owner: &str) -> Result<(), EncodeError> {
        for c in conj {
            match c {
                Conjunct::Lit(l) => {
                    self.rule(format!(":- {}, holds(inprogr({d}),I).", lit_str(&complement(l), "I")))
                }
                Conjunct::Cmp(c) => {
                    let gi = self.gamma(c, At::Initial("I"), owner)?;
                    let gf = self.gamma(c, At::Final("I"), owner)?;
                    self.rule(format!("required({gi}) :- holds(inprogr({d}),I)."));
                    self.rule(format!("required({gf}) :- holds(inprogr({d}),I)."));
                }
            }
        }
        Ok(())
    }

    /// Preconditions and effects of an instantaneous action or event.
    pub fn instant_action(&mut self, a: &GroundSchema) -> Result<(), EncodeError> {
        let t = action_term(a);
        let occ = t.to_string();
        self.note(format!("{} {}", a.kind.keyword().trim_start_matches(':'), a.name()));
        self.rule(format!("action({occ})."));
        let pre: Vec<&Conjunct> = a.conjuncts(Timing::Untimed).collect();
        self.preconditions(&occ, &pre, &a.name())?;
        let eff: Vec<&Effect> = a.effects.iter().collect();
        self.occurrence_effects(&occ, &eff, &a.name())
    }

    /// Start/end happenings, duration, conditions and discrete effects of a
    /// durative action or process.
    pub fn durative(&mut self, a: &GroundSchema) -> Result<(), EncodeError> {
        let d = action_term(a);
        let l = self.last();
        let owner = a.name();
        self.note(format!("{} {}", a.kind.keyword().trim_start_matches(':'), owner));
        self.rule(format!("action(start({d}))."));
        self.rule(format!("action(end({d}))."));
        self.rule(format!("holds(inprogr({d}),I2) :- step(I1), step(I2), I2 = I1+1, occurs(start({d}),I1)."));
        self.rule(format!("-holds(inprogr({d}),I2) :- step(I1), step(I2), I2 = I1+1, occurs(end({d}),I1)."));
        self.rule(format!("1{{occurs(end({d}),I2) : step(I2), I2 > I1, I2 < {l}}}1 :- occurs(start({d}),I1)."));
        if let Some((op, e)) = &a.duration {
            let op = op.symbol();
            if let NumExpr::Const(c) = e {
                self.rule(format!("duration({d},{}).", fmt_rat(c)));
                self.rule(format!(
                    "required(tend(I2)-tend(I1) {op} RT) :- duration({d},RT), occurs(end({d}),I2), occurs(start({d}),I1), I1 < I2."
                ));
            } else {
                let rhs = self.expr(e, At::Final("I1"), &owner)?;
                self.rule(format!(
                    "required(tend(I2)-tend(I1) {op} {rhs}) :- occurs(end({d}),I2), occurs(start({d}),I1), I1 < I2."
                ));
            }
        }
        let start = format!("start({d})");
        let end = format!("end({d})");
        let (pre, inv): (Vec<&Conjunct>, Vec<&Conjunct>) = if a.kind == SchemaKind::Process {
            let all: Vec<&Conjunct> = a.conjuncts(Timing::Untimed).chain(a.conjuncts(Timing::OverAll)).collect();
            (all.iter().filter(|c| matches!(c, Conjunct::Cmp(_))).copied().collect(), all)
        } else {
            (a.conjuncts(Timing::AtStart).collect(), a.conjuncts(Timing::OverAll).collect())
        };
        self.preconditions(&start, &pre, &owner)?;
        let at_end: Vec<&Conjunct> = a.conjuncts(Timing::AtEnd).collect();
        self.preconditions(&end, &at_end, &owner)?;
        self.invariants(&d, &inv, &owner)?;
        let s_eff: Vec<&Effect> = a.effects.iter().filter(|e| e.timing() == EffectTiming::AtStart).collect();
        self.occurrence_effects(&start, &s_eff, &owner)?;
        let e_eff: Vec<&Effect> = a.effects.iter().filter(|e| e.timing() == EffectTiming::AtEnd).collect();
        self.occurrence_effects(&end, &e_eff, &owner)
    }

    /// Forces a process start or event whenever its conditions hold, unless
    /// one numeric condition is chosen to be false.
    pub fn must_semantics(&mut self, a: &GroundSchema) -> Result<(), EncodeError> {
        let t = action_term(a);
        let l = self.last();
        let owner = a.name();
        let (occ, running) = match a.kind {
            SchemaKind::Process => (format!("start({t})"), format!(", -holds(inprogr({t}),I)")),
            _ => (t.to_string(), String::new()),
        };
        let conj: Vec<&Conjunct> = a.conjuncts(Timing::Untimed).chain(a.conjuncts(Timing::OverAll)).collect();
        let mut elems = vec![format!("occurs({occ},I)")];
        let mut body = vec![format!("step(I), I < {l}")];
        let mut k = 0;
        for c in &conj {
            match c {
                Conjunct::Lit(lit) => body.push(lit_str(lit, "I")),
                Conjunct::Cmp(cmp) => {
                    let g = format!("gamma({t},{k})");
                    elems.push(format!("is_false({g},I)"));
                    let neg = self.gamma(&cmp.complement(), At::Final("I"), &owner)?;
                    self.rule(format!("required({neg}) :- is_false({g},I)."));
                    k += 1;
                }
            }
        }
        self.note(format!("{owner} happens whenever it can"));
        self.rule(format!("1{{{}}}1 :- {}{running}.", elems.join("; "), body.join(", ")));
        Ok(())
    }

    /// Choice of controllable happenings plus the variant's search control.
    pub fn planning_module(&mut self) -> Result<(), EncodeError> {
        let l = self.last();
        self.note("planning module");
        let durs: Vec<Term> = self.task.of_kind(SchemaKind::Durative).map(action_term).collect();
        for d in durs {
            self.rule(format!("0{{occurs(start({d}),I) : step(I)}}1."));
        }
        let inst: Vec<String> =
            self.task.of_kind(SchemaKind::Action).map(|a| format!("occurs({},I)", action_term(a))).collect();
        if !inst.is_empty() {
            self.rule(format!("{}{{{}}}{} :- step(I), I < {l}.", self.cfg.lambda, inst.join("; "), self.cfg.mu));
        }
        for (occ, i) in self.cfg.hints.clone() {
            let t = parse_term(&occ).map_err(|_| EncodeError::BadHint(occ.clone()))?;
            self.rule(format!("hint({t},{i})."));
        }
        if !self.cfg.hints.is_empty() {
            self.rule(":- hint(A,I), not occurs(A,I).");
        }
        match self.cfg.variant {
            Variant::Basic => {}
            Variant::Heuristic => {
                self.note("heuristic: no idle steps");
                self.rule("some_action(I) :- occurs(A,I).");
                self.rule(format!(":- step(I), I < {l}, not some_action(I)."));
            }
            Variant::Estimator => self.estimator(),
        }
        Ok(())
    }

    fn estimator(&mut self) {
        self.note("estimator: known integer values");
        let mut any = false;
        for n in self.dynamic_fluents() {
            if let Some(v) = self.task.init_value(n).filter(|v| v.is_integer()) {
                self.rule(format!("holds(has_val({},{}),0).", fluent_term(n), fmt_rat(v)));
            }
        }
        let mut rules = Vec::new();
        for a in &self.task.actions {
            let d = action_term(a);
            for e in &a.effects {
                let Effect::Num { op: NumOp::Assign, fluent, expr: NumExpr::Const(c), timing } = e else { continue };
                if !c.is_integer() || self.statics.contains(fluent) {
                    continue;
                }
                let occ = match (a.kind, timing) {
                    (_, EffectTiming::AtStart) => format!("start({d})"),
                    (_, EffectTiming::AtEnd) => format!("end({d})"),
                    _ => d.to_string(),
                };
                any = true;
                rules.push(format!(
                    "holds(has_val({},{}),I2) :- step(I1), step(I2), I2 = I1+1, occurs({occ},I1).",
                    fluent_term(fluent),
                    fmt_rat(c)
                ));
            }
        }
        for r in rules {
            self.rule(r);
        }
        self.rule(
            "holds(has_val(F,V),I2) :- holds(has_val(F,V),I1), step(I2), I2 = I1+1, not ab(F,I1), not ab(jump(F),I2).",
        );
        if !any {
            self.rule("warning(no_integer_assignments).");
        }
    }

    /// Initial state and goal.
    pub fn problem(&mut self) -> Result<(), EncodeError> {
        let l = self.last();
        let inst = &self.task.instance;
        self.note("initial state");
        self.rule("required(tstart(0) = 0).");
        let props: Vec<String> = self
            .task
            .props
            .iter()
            .map(|p| {
                let t = fluent_term(p);
                if inst.init_facts.contains(p) {
                    format!("holds({t},0).")
                } else {
                    format!("-holds({t},0).")
                }
            })
            .collect();
        for p in props {
            self.rule(p);
        }
        let running: Vec<Term> = self
            .task
            .actions
            .iter()
            .filter(|a| matches!(a.kind, SchemaKind::Durative | SchemaKind::Process))
            .map(action_term)
            .collect();
        for d in running {
            self.rule(format!("-holds(inprogr({d}),0)."));
        }
        for n in self.dynamic_fluents() {
            if let Some(v) = self.task.init_value(n) {
                self.rule(format!("required(v_initial({},0) = {}).", fluent_term(n), fmt_rat(v)));
            }
        }
        self.note("goal");
        let goal = inst.goal.clone();
        for g in &goal {
            match g {
                Conjunct::Lit(lit) => self.rule(format!(":- {}.", lit_str(&complement(lit), &l.to_string()))),
                Conjunct::Cmp(c) => {
                    if let Some((d, value)) = self.duration_goal(c) {
                        self.rule(format!("duration({d},{}).", fmt_rat(&value)));
                        self.rule(format!(
                            "required(tend(I2)-tend(I1) = D) :- duration({d},D), occurs(end({d}),I2), occurs(start({d}),I1), I1 < I2."
                        ));
                        self.rule(format!("ran({d}) :- occurs(start({d}),I)."));
                        self.rule(format!(":- not ran({d})."));
                    } else {
                        let s = l.to_string();
                        let g = self.gamma(c, At::Final(&s), "goal")?;
                        self.rule(format!("required({g})."));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(= f c)` where `f` starts at zero and only grows at rate 1 while a
    /// single source runs: the goal fixes that source's running time.
    fn duration_goal(&self, c: &Comparison) -> Option<(Term, crate::num::Rat)> {
        if c.op != CmpOp::Eq {
            return None;
        }
        let (f, value) = match (&c.lhs, &c.rhs) {
            (NumExpr::Fluent(f), NumExpr::Const(v)) | (NumExpr::Const(v), NumExpr::Fluent(f)) => (f, v),
            _ => return None,
        };
        if self.task.init_value(f).is_some_and(|v| !v.is_zero()) {
            return None;
        }
        let mut sources = self.task.actions.iter().filter(|a| {
            a.effects.iter().any(|e| matches!(e, Effect::Num { fluent, .. } if fluent == f))
        });
        let src = sources.next()?;
        if sources.next().is_some() {
            return None;
        }
        let only_unit_rate = src.effects.iter().all(|e| match e {
            Effect::Num { fluent, timing, op, expr } if fluent == f => {
                *timing == EffectTiming::Continuous
                    && *op == NumOp::Increase
                    && matches!(expr.time_rate(), Some(NumExpr::Const(r)) if *r == crate::num::int(1))
            }
            _ => true,
        });
        only_unit_rate.then(|| (action_term(src), value.clone()))
    }

    pub fn finish(self) -> CaspProgram {
        self.prog
    }
}

fn c0_is_zero(e: &NumExpr) -> bool {
    matches!(e, NumExpr::Const(c) if c.is_zero())
}

fn state_var(kind: &str, f: &FluentRef, step: &str) -> Term {
    let s = step.parse::<i64>().map(Term::int).unwrap_or_else(|_| Term::var(step));
    Term::func(kind, vec![fluent_term(f), s])
}

fn check_names(task: &GroundTask) -> Result<(), EncodeError> {
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut names: Vec<String> = Vec::new();
    names.extend(task.props.iter().map(|p| p.name.clone()));
    names.extend(task.fluents.iter().map(|f| f.name.clone()));
    names.extend(task.actions.iter().map(|a| a.schema.clone()));
    names.extend(task.instance.all_objects().map(|(o, _)| o.clone()));
    for n in names {
        let id = asp_ident(&n);
        match seen.get(&id) {
            Some(prev) if *prev != n => return Err(EncodeError::NameClash(prev.clone(), n, id)),
            _ => {
                seen.insert(id, n);
            }
        }
    }
    Ok(())
}

/// The full program for `task` under `cfg`.
pub fn encode(task: &GroundTask, cfg: &EncodingConfig) -> Result<CaspProgram, EncodeError> {
    let mut e = Encoder::new(task, cfg)?;
    e.domain_independent();
    e.numeric_fluents();
    e.contributions()?;
    for a in &task.actions {
        match a.kind {
            SchemaKind::Action => e.instant_action(a)?,
            SchemaKind::Event => {
                e.instant_action(a)?;
                e.must_semantics(a)?;
            }
            SchemaKind::Durative => e.durative(a)?,
            SchemaKind::Process => {
                e.durative(a)?;
                e.must_semantics(a)?;
            }
        }
    }
    e.planning_module()?;
    e.problem()?;
    Ok(e.finish())
}

#[cfg(test)]
mod tests;
