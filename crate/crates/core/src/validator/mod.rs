//! Continuous-time plan validation.
//!
//! A plan is replayed happening by happening. Between happenings the running
//! durative actions and processes drive the numeric fluents; over-all
//! conditions are checked on the whole interval, events fire as soon as their
//! conditions hold and processes absent from the plan run whenever their
//! conditions hold.

mod ranges;

pub use ranges::{locate_ranges, Ranges};

use crate::csp::closed::{ric_v, ric_x};
use crate::encoder::flow::{self, Contribution, Shape, Sign, Validity};
use crate::pddl::{
    Comparison, Conjunct, Effect, EffectTiming, FluentRef, GroundTask, NumExpr, NumOp, SchemaKind,
    Timing,
};
use crate::plan::Plan;
use crate::rel::CmpOp;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Two timepoints closer than this are the same happening.
const SAME_TIME: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error("plan step {0} does not name a ground action of the task")]
    UnknownAction(String),
    #[error("plan step {0} is an event; events are never planned")]
    NotPlannable(String),
    #[error("{name} runs twice at once (second occurrence at {t})")]
    DuplicateOccurrence { name: String, t: f64 },
    #[error("more than {limit} events triggered at {t}")]
    CyclicTrigger { t: f64, limit: usize },
    #[error("{0} cannot be evaluated (undefined fluent or division by zero)")]
    Undefined(String),
    #[error("{schema}: continuous effect on {fluent} is not of the form (* #t rate)")]
    BadRate { schema: String, fluent: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidatorConfig {
    pub eps: f64,
    /// Sampling step for segments without a polynomial closed form.
    pub h: f64,
    pub max_cascade: usize,
    /// Simulate at least up to this time, even past the last happening.
    pub until: Option<f64>,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig { eps: 1e-6, h: 1e-3, max_cascade: 100, until: None }
    }
}

impl ValidatorConfig {
    pub fn with_eps(eps: f64) -> ValidatorConfig {
        ValidatorConfig { eps, ..ValidatorConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HappeningKind {
    ActionEnd,
    ActionStart,
    /// Instantaneous action.
    Action,
    Event,
    ProcessStart,
    ProcessStop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Happening {
    pub t: f64,
    pub kind: HappeningKind,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Over-all condition of a durative action or condition of a running process.
    Invariant,
    Precondition,
    Duration,
    Goal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub condition: Conjunct,
    pub lo: f64,
    pub hi: f64,
    /// Index of the discrete state the range falls into.
    pub step: usize,
    /// Ground name of the owning action or process, `goal` for the goal.
    pub owner: String,
    /// Index of the owner in `GroundTask::actions`.
    pub owner_index: Option<usize>,
}

impl Violation {
    pub fn comparison(&self) -> Option<&Comparison> {
        match &self.condition {
            Conjunct::Cmp(c) => Some(c),
            Conjunct::Lit(_) => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "violation: {} in [{:.3},{:.3}] step {} owner {}",
            self.condition, self.lo, self.hi, self.step, self.owner
        )
    }
}

pub type Env = BTreeMap<FluentRef, f64>;

#[derive(Clone, Debug)]
struct Sampled {
    h: f64,
    names: Vec<FluentRef>,
    xs: Vec<Vec<f64>>,
    ds: Vec<Vec<f64>>,
}

/// One stretch of time with a fixed set of running sources.
#[derive(Clone, Debug)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub start: Env,
    /// Indices of running sources in `GroundTask::actions`.
    pub active: Vec<usize>,
    /// Times (relative to `t0`) after which a draining source stops.
    limits: BTreeMap<usize, f64>,
    sampled: Option<Sampled>,
}

impl Segment {
    pub fn is_closed_form(&self) -> bool {
        self.sampled.is_none()
    }
}

/// Piecewise fluent values over the simulated horizon.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    /// State right after each processed timepoint.
    pub states: Vec<(f64, Env)>,
    contribs: Option<Vec<Contribution>>,
}

impl Trajectory {
    fn eval(&self, seg: &Segment, f: &FluentRef, tau: f64) -> Option<f64> {
        match &seg.sampled {
            Some(s) => match s.names.iter().position(|n| n == f) {
                Some(i) => Some(hermite(s, i, tau)),
                None => seg.start.get(f).copied(),
            },
            None => closed_value(self.contribs.as_deref().unwrap_or(&[]), seg, f, tau),
        }
    }

    /// Value at `t`, after the discrete effects of any happening at `t`.
    pub fn value(&self, f: &FluentRef, t: f64) -> Option<f64> {
        if let Some((_, env)) = self.states.iter().find(|(s, _)| (s - t).abs() <= SAME_TIME) {
            return env.get(f).copied();
        }
        if let Some(seg) = self.segments.iter().find(|s| s.t0 <= t && t < s.t1) {
            return self.eval(seg, f, t - seg.t0);
        }
        self.states.last().and_then(|(_, env)| env.get(f).copied())
    }

    /// Left limit at `t`, before the happenings at `t`.
    pub fn value_before(&self, f: &FluentRef, t: f64) -> Option<f64> {
        match self.segments.iter().find(|s| s.t0 < t && t <= s.t1 + SAME_TIME) {
            Some(seg) => self.eval(seg, f, (t - seg.t0).min(seg.t1 - seg.t0)),
            None => self.value(f, t),
        }
    }

    pub fn end_time(&self) -> f64 {
        self.states.last().map_or(0.0, |(t, _)| *t)
    }
}

fn hermite(s: &Sampled, i: usize, tau: f64) -> f64 {
    let n = s.xs.len() - 1;
    let k = ((tau / s.h).floor().max(0.0) as usize).min(n.saturating_sub(1));
    if n == 0 {
        return s.xs[0][i];
    }
    let u = ((tau - k as f64 * s.h) / s.h).clamp(0.0, 1.0);
    let (x0, x1, d0, d1) = (s.xs[k][i], s.xs[k + 1][i], s.ds[k][i], s.ds[k + 1][i]);
    let (u2, u3) = (u * u, u * u * u);
    (2.0 * u3 - 3.0 * u2 + 1.0) * x0 + (u3 - 2.0 * u2 + u) * s.h * d0 + (-2.0 * u3 + 3.0 * u2) * x1 + (u3 - u2) * s.h * d1
}

fn shape_value(shape: &Shape, env: &Env, tau: f64) -> Option<f64> {
    let look = |f: &FluentRef| env.get(f).copied();
    match shape {
        Shape::Expr(e) => e.eval(&look, tau, 0.0),
        Shape::RicDelta { a, b, v } => {
            let v0 = look(v)?;
            Some(ric_v(a.eval(&look, 0.0, 0.0)?, b.eval(&look, 0.0, 0.0)?, v0, tau) - v0)
        }
        Shape::RicPos { c0, k, a, b, v } => {
            let v0 = look(v)?;
            let x = ric_x(a.eval(&look, 0.0, 0.0)?, b.eval(&look, 0.0, 0.0)?, v0, tau);
            Some(c0.eval(&look, 0.0, 0.0)? * tau + k.eval(&look, 0.0, 0.0)? * x)
        }
    }
}

fn closed_value(contribs: &[Contribution], seg: &Segment, f: &FluentRef, tau: f64) -> Option<f64> {
    let mut v = *seg.start.get(f)?;
    for c in contribs.iter().filter(|c| c.fluent == *f && seg.active.contains(&c.source)) {
        let te = seg.limits.get(&c.source).map_or(tau, |l| tau.min(*l));
        let mut s = shape_value(&c.shape, &seg.start, te)?;
        if c.negate {
            s = -s;
        }
        v += if c.sign == Sign::Incr { s } else { -s };
    }
    Some(v)
}

/// Degree in time of `e`, given the degree of every fluent.
fn degree(e: &NumExpr, fl: &dyn Fn(&FluentRef) -> Option<u32>) -> Option<u32> {
    let d = |x: &NumExpr| degree(x, fl);
    Some(match e {
        NumExpr::Const(_) | NumExpr::Duration => 0,
        NumExpr::Time => 1,
        NumExpr::Fluent(f) => fl(f)?,
        NumExpr::Add(a, b) | NumExpr::Sub(a, b) => d(a)?.max(d(b)?),
        NumExpr::Mul(a, b) => d(a)? + d(b)?,
        NumExpr::Div(a, b) => {
            if d(b)? != 0 {
                return None;
            }
            d(a)?
        }
        NumExpr::Neg(a) => d(a)?,
        NumExpr::Sq(a) => 2 * d(a)?,
        NumExpr::Sqrt(a) => {
            if d(a)? != 0 {
                return None;
            }
            0
        }
    })
}

/// Amount by which a comparison fails; zero or below means it holds.
fn fail_amount(op: CmpOp, diff: f64, eps: f64) -> f64 {
    match op {
        CmpOp::Le | CmpOp::Lt => diff,
        CmpOp::Ge | CmpOp::Gt => -diff,
        CmpOp::Eq => diff.abs(),
        CmpOp::Ne => eps - diff.abs(),
    }
}

/// Comparison truth with tolerance; strict relations are read non-strictly.
fn sat(op: CmpOp, diff: f64, eps: f64) -> bool {
    fail_amount(op, diff, eps) <= eps
}

#[derive(Clone, Debug)]
struct Occ {
    action: usize,
    t: f64,
    end: f64,
}

#[derive(Clone, Debug)]
struct State {
    facts: BTreeSet<FluentRef>,
    vals: Env,
}

/// Outcome of a validation run.
#[derive(Clone, Debug)]
pub struct Report {
    pub violations: Vec<Violation>,
    pub trajectory: Trajectory,
    pub timeline: Vec<Happening>,
    /// Distinct happening times of the plan; state `i` ends at `step_times[i]`.
    pub step_times: Vec<f64>,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "Valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

struct Sim<'a> {
    task: &'a GroundTask,
    cfg: &'a ValidatorConfig,
    contribs: Option<Vec<Contribution>>,
    validity: Vec<Validity>,
    occs: Vec<Occ>,
    /// Processes that appear in the plan follow their listed intervals.
    listed: BTreeSet<usize>,
    state: State,
    running: BTreeSet<usize>,
    must_active: BTreeSet<usize>,
    steps: Vec<f64>,
    violations: Vec<Violation>,
    timeline: Vec<Happening>,
    segments: Vec<Segment>,
    states: Vec<(f64, Env)>,
}

/// Replays `plan` on `task` and reports every violated condition.
pub fn validate(task: &GroundTask, plan: &Plan, cfg: &ValidatorConfig) -> Result<Report, ValidateError> {
    let (contribs, validity) = match flow::contributions(&task.actions) {
        Ok((c, v)) => (Some(c), v),
        Err(_) => (None, Vec::new()),
    };
    let mut occs = Vec::new();
    let mut listed = BTreeSet::new();
    for s in &plan.steps {
        let idx = task.actions.iter().position(|a| a.name() == s.name).ok_or_else(|| ValidateError::UnknownAction(s.name.clone()))?;
        let a = &task.actions[idx];
        let end = match a.kind {
            SchemaKind::Event => return Err(ValidateError::NotPlannable(s.name.clone())),
            SchemaKind::Action => s.t,
            SchemaKind::Process => {
                listed.insert(idx);
                s.end()
            }
            SchemaKind::Durative => s.end(),
        };
        if a.kind != SchemaKind::Action {
            if occs.iter().any(|o: &Occ| o.action == idx && s.t < o.end + SAME_TIME && o.t < end + SAME_TIME) {
                return Err(ValidateError::DuplicateOccurrence { name: s.name.clone(), t: s.t });
            }
        }
        occs.push(Occ { action: idx, t: s.t, end });
    }
    let mut steps: Vec<f64> = occs.iter().flat_map(|o| [o.t, o.end]).collect();
    steps.sort_by(f64::total_cmp);
    steps.dedup_by(|a, b| (*a - *b).abs() <= SAME_TIME);

    let mut vals = Env::new();
    for (f, v) in &task.instance.init_values {
        vals.insert(f.clone(), crate::num::to_f64(v));
    }
    let facts = task.instance.init_facts.iter().cloned().collect();
    let mut sim = Sim {
        task,
        cfg,
        contribs,
        validity,
        occs,
        listed,
        state: State { facts, vals },
        running: BTreeSet::new(),
        must_active: BTreeSet::new(),
        steps,
        violations: Vec::new(),
        timeline: Vec::new(),
        segments: Vec::new(),
        states: Vec::new(),
    };
    sim.run()?;
    let mut violations = merge(std::mem::take(&mut sim.violations));
    for v in &mut violations {
        v.step = sim.step_of(v.lo, v.hi);
    }
    Ok(Report {
        violations,
        trajectory: Trajectory { segments: sim.segments, states: sim.states, contribs: sim.contribs },
        timeline: sim.timeline,
        step_times: sim.steps,
    })
}

/// Joins ranges of the same condition and owner that touch.
fn merge(mut vs: Vec<Violation>) -> Vec<Violation> {
    vs.sort_by(|a, b| a.owner.cmp(&b.owner).then(a.lo.total_cmp(&b.lo)));
    let mut out: Vec<Violation> = Vec::new();
    for v in vs {
        if let Some(last) = out.iter_mut().rev().find(|w| w.owner == v.owner && w.condition == v.condition && w.kind == v.kind) {
            if v.lo <= last.hi + SAME_TIME && v.kind == ViolationKind::Invariant {
                last.hi = last.hi.max(v.hi);
                continue;
            }
        }
        out.push(v);
    }
    out.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.owner.cmp(&b.owner)));
    out
}

impl<'a> Sim<'a> {
    fn step_of(&self, lo: f64, hi: f64) -> usize {
        let mid = 0.5 * (lo + hi);
        self.steps.iter().filter(|h| **h < mid - SAME_TIME).count()
    }

    fn env(&self) -> impl Fn(&FluentRef) -> Option<f64> + '_ {
        |f| self.state.vals.get(f).copied()
    }

    /// Truth at the current timepoint; strict relations stay strict.
    fn holds(&self, c: &Conjunct, d: f64) -> Result<bool, ValidateError> {
        self.holds_with(c, d, true)
    }

    fn holds_with(&self, c: &Conjunct, d: f64, strict: bool) -> Result<bool, ValidateError> {
        Ok(match c {
            Conjunct::Lit(l) => self.state.facts.contains(&l.atom) != l.neg,
            Conjunct::Cmp(cmp) => {
                let env = self.env();
                let l = cmp.lhs.eval(&env, 0.0, d);
                let r = cmp.rhs.eval(&env, 0.0, d);
                match (l, r) {
                    (Some(l), Some(r)) if strict => crate::csp::holds_with_tol(l - r, cmp.op, self.cfg.eps),
                    (Some(l), Some(r)) => sat(cmp.op, l - r, self.cfg.eps),
                    _ => return Err(ValidateError::Undefined(cmp.to_string())),
                }
            }
        })
    }

    fn point_violation(&mut self, kind: ViolationKind, c: &Conjunct, t: f64, owner: Option<usize>) {
        self.violations.push(Violation {
            kind,
            condition: c.clone(),
            lo: t,
            hi: t,
            step: 0,
            owner: owner.map_or_else(|| "goal".to_string(), |i| self.task.actions[i].name()),
            owner_index: owner,
        });
    }

    fn check(&mut self, kind: ViolationKind, a: usize, timing: Timing, t: f64, d: f64) -> Result<(), ValidateError> {
        let conds: Vec<Conjunct> = self.task.actions[a].conjuncts(timing).cloned().collect();
        for c in conds {
            if !self.holds(&c, d)? {
                self.point_violation(kind, &c, t, Some(a));
            }
        }
        Ok(())
    }

    fn apply(&mut self, a: usize, timing: EffectTiming, d: f64) -> Result<(), ValidateError> {
        let act = &self.task.actions[a];
        let mut next = self.state.vals.clone();
        let mut dels = Vec::new();
        let mut adds = Vec::new();
        for e in act.effects.iter().filter(|e| e.timing() == timing) {
            match e {
                Effect::Lit { lit, .. } => {
                    if lit.neg {
                        dels.push(lit.atom.clone())
                    } else {
                        adds.push(lit.atom.clone())
                    }
                }
                Effect::Num { op, fluent, expr, .. } => {
                    let val = expr
                        .eval(&self.env(), 0.0, d)
                        .ok_or_else(|| ValidateError::Undefined(format!("{expr} in {}", act.name())))?;
                    let cur = *next.get(fluent).ok_or_else(|| ValidateError::Undefined(fluent.to_string()))?;
                    let nv = match op {
                        NumOp::Assign => val,
                        NumOp::Increase => cur + val,
                        NumOp::Decrease => cur - val,
                    };
                    next.insert(fluent.clone(), nv);
                }
            }
        }
        for f in dels {
            self.state.facts.remove(&f);
        }
        for f in adds {
            self.state.facts.insert(f);
        }
        self.state.vals = next;
        Ok(())
    }

    fn duration_of(&self, a: usize, t: f64) -> f64 {
        self.occs.iter().find(|o| o.action == a && o.t <= t + SAME_TIME && t <= o.end + SAME_TIME).map_or(0.0, |o| o.end - o.t)
    }

    fn conditions_hold(&self, a: usize) -> Result<bool, ValidateError> {
        let act = &self.task.actions[a];
        for c in act.conjuncts(Timing::Untimed).chain(act.conjuncts(Timing::OverAll)) {
            if !self.holds_with(c, 0.0, false)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Event cascade and process activity after the discrete effects at `t`.
    fn settle(&mut self, t: f64) -> Result<(), ValidateError> {
        let mut fired = 0;
        loop {
            let mut any = false;
            for (i, a) in self.task.actions.iter().enumerate() {
                if a.kind != SchemaKind::Event || !self.conditions_hold(i)? {
                    continue;
                }
                fired += 1;
                if fired > self.cfg.max_cascade {
                    return Err(ValidateError::CyclicTrigger { t, limit: self.cfg.max_cascade });
                }
                self.apply(i, EffectTiming::Instant, 0.0)?;
                self.timeline.push(Happening { t, kind: HappeningKind::Event, name: a.name() });
                any = true;
                break;
            }
            if !any {
                break;
            }
        }
        for (i, a) in self.task.actions.iter().enumerate() {
            if a.kind != SchemaKind::Process || self.listed.contains(&i) {
                continue;
            }
            let on = self.conditions_hold(i)?;
            let was = self.must_active.contains(&i);
            if on && !was {
                self.must_active.insert(i);
                self.timeline.push(Happening { t, kind: HappeningKind::ProcessStart, name: a.name() });
            } else if !on && was {
                self.must_active.remove(&i);
                self.timeline.push(Happening { t, kind: HappeningKind::ProcessStop, name: a.name() });
            }
        }
        Ok(())
    }

    /// Discrete happenings of the plan at `t`, in end, start order.
    fn happen(&mut self, t: f64) -> Result<(), ValidateError> {
        let at = |x: f64| (x - t).abs() <= SAME_TIME;
        let occs = self.occs.clone();
        for o in occs.iter().filter(|o| at(o.end) && !at(o.t)) {
            let kind = self.task.actions[o.action].kind;
            let name = self.task.actions[o.action].name();
            if kind == SchemaKind::Durative {
                self.check(ViolationKind::Precondition, o.action, Timing::AtEnd, t, o.end - o.t)?;
                self.apply(o.action, EffectTiming::AtEnd, o.end - o.t)?;
                self.timeline.push(Happening { t, kind: HappeningKind::ActionEnd, name });
            } else {
                self.timeline.push(Happening { t, kind: HappeningKind::ProcessStop, name });
            }
            self.running.remove(&o.action);
        }
        let mut new_procs = Vec::new();
        for o in occs.iter().filter(|o| at(o.t)) {
            let a = &self.task.actions[o.action];
            let (kind, name) = (a.kind, a.name());
            let d = o.end - o.t;
            match kind {
                SchemaKind::Action => {
                    self.check(ViolationKind::Precondition, o.action, Timing::Untimed, t, 0.0)?;
                    self.apply(o.action, EffectTiming::Instant, 0.0)?;
                    self.timeline.push(Happening { t, kind: HappeningKind::Action, name });
                }
                SchemaKind::Durative => {
                    if let Some((op, e)) = a.duration.clone() {
                        let want = e.eval(&self.env(), 0.0, d).ok_or_else(|| ValidateError::Undefined(e.to_string()))?;
                        if !sat(op, d - want, self.cfg.eps) {
                            let c = Conjunct::Cmp(Comparison { lhs: NumExpr::Duration, op, rhs: e });
                            self.point_violation(ViolationKind::Duration, &c, t, Some(o.action));
                        }
                    }
                    self.check(ViolationKind::Precondition, o.action, Timing::AtStart, t, d)?;
                    self.apply(o.action, EffectTiming::AtStart, d)?;
                    self.timeline.push(Happening { t, kind: HappeningKind::ActionStart, name });
                    if at(o.end) {
                        self.check(ViolationKind::Precondition, o.action, Timing::AtEnd, t, d)?;
                        self.apply(o.action, EffectTiming::AtEnd, d)?;
                        self.timeline.push(Happening { t, kind: HappeningKind::ActionEnd, name: a.name() });
                    } else {
                        self.running.insert(o.action);
                    }
                }
                SchemaKind::Process => {
                    self.timeline.push(Happening { t, kind: HappeningKind::ProcessStart, name });
                    if !at(o.end) {
                        self.running.insert(o.action);
                    }
                    new_procs.push(o.action);
                }
                SchemaKind::Event => unreachable!("rejected while reading the plan"),
            }
        }
        self.settle(t)?;
        for p in new_procs {
            self.check(ViolationKind::Precondition, p, Timing::Untimed, t, 0.0)?;
            self.check(ViolationKind::Precondition, p, Timing::OverAll, t, 0.0)?;
        }
        Ok(())
    }

    fn run(&mut self) -> Result<(), ValidateError> {
        let horizon = self.steps.last().copied().unwrap_or(0.0).max(self.cfg.until.unwrap_or(0.0));
        let mut points: Vec<f64> = self.steps.clone();
        if points.first().is_none_or(|p| *p > SAME_TIME) {
            points.insert(0, 0.0);
        }
        if points.last().is_some_and(|p| *p < horizon - SAME_TIME) {
            points.push(horizon);
        }
        self.happen(points[0])?;
        self.states.push((points[0], self.state.vals.clone()));
        for w in points.windows(2) {
            self.advance(w[0], w[1])?;
            self.happen(w[1])?;
            self.states.push((w[1], self.state.vals.clone()));
        }
        let goal = self.task.instance.goal.clone();
        for g in &goal {
            if !self.holds(g, 0.0)? {
                self.point_violation(ViolationKind::Goal, g, horizon, None);
            }
        }
        Ok(())
    }

    fn sources(&self) -> Vec<usize> {
        self.running.iter().chain(self.must_active.iter()).copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn build_segment(&self, t0: f64, t1: f64) -> Result<Segment, ValidateError> {
        let active = self.sources();
        let start = self.state.vals.clone();
        let mut seg = Segment { t0, t1, start, active, limits: BTreeMap::new(), sampled: None };
        if self.contribs.is_some() {
            for v in self.validity.iter().filter(|v| seg.active.contains(&v.source)) {
                let look = |f: &FluentRef| seg.start.get(f).copied();
                let c = v.c.eval(&look, 0.0, 0.0).ok_or_else(|| ValidateError::Undefined(v.c.to_string()))?;
                let level = look(&v.level).ok_or_else(|| ValidateError::Undefined(v.level.to_string()))?;
                if c > 0.0 {
                    let l = 2.0 * level.max(0.0).sqrt() / c;
                    let e = seg.limits.entry(v.source).or_insert(l);
                    *e = e.min(l);
                }
            }
        } else {
            seg.sampled = Some(self.integrate(&seg)?);
        }
        Ok(seg)
    }

    /// Signed rates of the running sources under `env`.
    fn rates(&self, active: &[usize], names: &[FluentRef], x: &[f64], base: &Env) -> Result<Vec<f64>, ValidateError> {
        let look = |f: &FluentRef| match names.iter().position(|n| n == f) {
            Some(i) => Some(x[i]),
            None => base.get(f).copied(),
        };
        let mut out = vec![0.0; names.len()];
        for &a in active {
            let act = &self.task.actions[a];
            for e in &act.effects {
                let Effect::Num { timing: EffectTiming::Continuous, op, fluent, expr } = e else { continue };
                let rate = expr
                    .time_rate()
                    .ok_or_else(|| ValidateError::BadRate { schema: act.name(), fluent: fluent.to_string() })?;
                let r = rate.eval(&look, 0.0, 0.0).ok_or_else(|| ValidateError::Undefined(rate.to_string()))?;
                let i = names.iter().position(|n| n == fluent).expect("moving fluent");
                out[i] += if *op == NumOp::Decrease { -r } else { r };
            }
        }
        Ok(out)
    }

    fn integrate(&self, seg: &Segment) -> Result<Sampled, ValidateError> {
        let mut names: Vec<FluentRef> = Vec::new();
        for &a in &seg.active {
            for e in &self.task.actions[a].effects {
                if let Effect::Num { timing: EffectTiming::Continuous, fluent, .. } = e {
                    if !names.contains(fluent) {
                        names.push(fluent.clone());
                    }
                }
            }
        }
        let len = seg.t1 - seg.t0;
        let n = ((len / self.cfg.h).ceil() as usize).clamp(1, 4_000_000);
        let h = len / n as f64;
        let x0: Vec<f64> = names
            .iter()
            .map(|f| seg.start.get(f).copied().ok_or_else(|| ValidateError::Undefined(f.to_string())))
            .collect::<Result<_, _>>()?;
        let f = |x: &[f64]| self.rates(&seg.active, &names, x, &seg.start);
        let mut xs = vec![x0.clone()];
        let mut ds = vec![f(&x0)?];
        let mut x = x0;
        for _ in 0..n {
            let k1 = ds.last().unwrap().clone();
            let y: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
            let k2 = f(&y)?;
            let y: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
            let k3 = f(&y)?;
            let y: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
            let k4 = f(&y)?;
            x = (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
            ds.push(f(&x)?);
            xs.push(x.clone());
        }
        Ok(Sampled { h, names, xs, ds })
    }

    fn fluent_degree(&self, seg: &Segment, f: &FluentRef) -> Option<u32> {
        if seg.sampled.is_some() {
            return None;
        }
        let len = seg.t1 - seg.t0;
        let mut deg = 0;
        for c in self.contribs.as_deref()?.iter().filter(|c| c.fluent == *f && seg.active.contains(&c.source)) {
            if seg.limits.get(&c.source).is_some_and(|l| *l < len) {
                return None;
            }
            match &c.shape {
                Shape::Expr(e) => deg = deg.max(degree(e, &|_| Some(0))?),
                _ => return None,
            }
        }
        Some(deg)
    }

    /// Fail-amount function of `cmp` over the segment and its polynomial degree.
    fn margin<'s>(
        &'s self,
        traj: &'s Trajectory,
        seg: &'s Segment,
        cmp: &'s Comparison,
        d: f64,
    ) -> (impl Fn(f64) -> f64 + 's, Option<u32>) {
        let eps = self.cfg.eps;
        let f = move |tau: f64| {
            let look = |fl: &FluentRef| traj.eval(seg, fl, tau);
            match (cmp.lhs.eval(&look, 0.0, d), cmp.rhs.eval(&look, 0.0, d)) {
                (Some(l), Some(r)) => fail_amount(cmp.op, l - r, eps),
                _ => f64::NAN,
            }
        };
        let deg = if matches!(cmp.op, CmpOp::Eq | CmpOp::Ne) {
            None
        } else {
            let dl = degree(&cmp.lhs, &|fl| self.fluent_degree(seg, fl));
            let dr = degree(&cmp.rhs, &|fl| self.fluent_degree(seg, fl));
            dl.zip(dr).map(|(a, b)| a.max(b))
        };
        (f, deg)
    }

    fn conj_of(&self, a: usize) -> Vec<Conjunct> {
        let act = &self.task.actions[a];
        let t = if act.kind == SchemaKind::Durative { vec![Timing::OverAll] } else { vec![Timing::Untimed, Timing::OverAll] };
        t.into_iter().flat_map(|t| act.conjuncts(t).cloned().collect::<Vec<_>>()).collect()
    }

    /// Earliest time in `(0, len]` at which a trigger changes status.
    fn next_trigger(&self, traj: &Trajectory, seg: &Segment) -> Result<Option<f64>, ValidateError> {
        let len = seg.t1 - seg.t0;
        let eps = self.cfg.eps;
        let min_gap = SAME_TIME * 10.0;
        let mut best: Option<f64> = None;
        let mut consider = |t: f64| {
            if t > min_gap && t < len - SAME_TIME && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        };
        for (i, a) in self.task.actions.iter().enumerate() {
            let watch = match a.kind {
                SchemaKind::Event => true,
                SchemaKind::Process => !self.listed.contains(&i),
                _ => false,
            };
            if !watch {
                continue;
            }
            let conds = self.conj_of(i);
            let mut bools_ok = true;
            let mut cmps = Vec::new();
            for c in &conds {
                match c {
                    Conjunct::Lit(_) => bools_ok &= self.holds(c, 0.0)?,
                    Conjunct::Cmp(cmp) => cmps.push(cmp),
                }
            }
            if !bools_ok || cmps.is_empty() {
                continue;
            }
            let active = a.kind == SchemaKind::Process && self.must_active.contains(&i);
            if active {
                // first moment some condition fails beyond tolerance
                for cmp in cmps {
                    let (f, deg) = self.margin(traj, seg, cmp, 0.0);
                    let r = locate_ranges(&f, 0.0, len, deg, eps, self.cfg.h);
                    if let Some(p) = r.pieces.iter().find(|p| p.1 > min_gap) {
                        consider(p.0);
                    }
                }
            } else {
                // first moment all conditions hold
                let mut bad: Vec<(f64, f64)> = Vec::new();
                for cmp in cmps {
                    let (f, deg) = self.margin(traj, seg, cmp, 0.0);
                    bad.extend(locate_ranges(&f, 0.0, len, deg, 0.0, self.cfg.h).raw);
                }
                bad.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut t = min_gap;
                for (lo, hi) in bad {
                    if lo > t {
                        break;
                    }
                    t = t.max(hi);
                }
                if t < len {
                    consider(t);
                }
            }
        }
        Ok(best)
    }

    fn check_segment(&mut self, traj: &Trajectory, seg: &Segment) -> Result<(), ValidateError> {
        let len = seg.t1 - seg.t0;
        let mut found = Vec::new();
        for &a in &seg.active {
            let d = if self.task.actions[a].kind == SchemaKind::Durative { self.duration_of(a, seg.t0) } else { 0.0 };
            for c in self.conj_of(a) {
                match &c {
                    Conjunct::Lit(_) => {
                        if !self.holds_with(&c, d, false)? && len > 0.0 {
                            found.push((c.clone(), a, 0.0, len));
                        }
                    }
                    Conjunct::Cmp(cmp) => {
                        let (f, deg) = self.margin(traj, seg, cmp, d);
                        for (lo, hi) in locate_ranges(&f, 0.0, len, deg, self.cfg.eps, self.cfg.h).pieces {
                            found.push((c.clone(), a, lo, hi));
                        }
                    }
                }
            }
        }
        for (c, a, lo, hi) in found {
            self.violations.push(Violation {
                kind: ViolationKind::Invariant,
                condition: c,
                lo: seg.t0 + lo,
                hi: seg.t0 + hi,
                step: 0,
                owner: self.task.actions[a].name(),
                owner_index: Some(a),
            });
        }
        Ok(())
    }

    /// Flows from `t0` to `t1`, stopping at every trigger on the way.
    fn advance(&mut self, t0: f64, t1: f64) -> Result<(), ValidateError> {
        let mut now = t0;
        loop {
            let seg = self.build_segment(now, t1)?;
            let probe = Trajectory { segments: vec![], states: vec![], contribs: self.contribs.clone() };
            let cut = self.next_trigger(&probe, &seg)?;
            let mut seg = seg;
            if let Some(c) = cut {
                seg.t1 = now + c;
            }
            self.check_segment(&probe, &seg)?;
            let len = seg.t1 - seg.t0;
            let names: Vec<FluentRef> = self.state.vals.keys().cloned().collect();
            for f in names {
                if let Some(v) = probe.eval(&seg, &f, len) {
                    if v.is_nan() {
                        return Err(ValidateError::Undefined(format!("{f} at {}", seg.t1)));
                    }
                    self.state.vals.insert(f, v);
                }
            }
            self.segments.push(seg);
            match cut {
                Some(c) => {
                    now += c;
                    self.settle(now)?;
                    self.states.push((now, self.state.vals.clone()));
                }
                None => return Ok(()),
            }
        }
    }
}

#[cfg(test)]
mod tests;
