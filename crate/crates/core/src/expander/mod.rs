//! Repair of invalid candidates: the invariant that a validator found
//! violated inside a step is re-imposed at interior timepoints of that step.
//!
//! For a timepoint δ in step `s`, every contribution to a fluent is copied
//! with its elapsed-time argument scaled by the fraction of the step that
//! has passed at δ. The copies sum to an intermediate value
//! `v_final_δ(n,s)` on which the invariant is then required.

use crate::casp::{Atom, BodyLit, CaspProgram, Head, Rule, Term};
use crate::encoder::{action_term, fluent_term};
use crate::num::{ratio, Rat};
use crate::pddl::{Conjunct, FluentRef, GroundTask};
use crate::validator::{Violation, ViolationKind};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpandError {
    #[error("violation of {condition} owned by {owner} has no invariant rule in the program")]
    UnknownInvariant { owner: String, condition: String },
    #[error("violation range [{lo}, {hi}] lies outside every step")]
    OutsideSteps { lo: f64, hi: f64 },
    #[error("only numeric invariant violations can be expanded, got {0}")]
    NotExpandable(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionConfig {
    /// Timepoints per violated range.
    pub k: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { k: 3 }
    }
}

/// `k` evenly spaced points of `[lo, hi]`, both ends included; the midpoint
/// when `k == 1`. Coinciding points are merged.
pub fn select_timepoints(lo: f64, hi: f64, cfg: &ExpansionConfig) -> Vec<f64> {
    let k = cfg.k.max(1);
    let mut out: Vec<f64> = if k == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..k).map(|i| if i == k - 1 { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 }).collect()
    };
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    out
}

/// Position of `delta` within `[start, end]` scaled to `[0, 1]`. An empty
/// interval gives 0.
pub fn offset(delta: f64, start: f64, end: f64) -> f64 {
    if end <= start {
        return 0.0;
    }
    if delta >= end {
        1.0
    } else if delta <= start {
        0.0
    } else {
        (delta - start) / (end - start)
    }
}

/// Time windows of the discrete steps: step `i` spans `[ends[i-1], ends[i]]`
/// and step 0 starts at 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Steps {
    pub ends: Vec<f64>,
}

impl Steps {
    pub fn new(ends: Vec<f64>) -> Steps {
        Steps { ends }
    }
    pub fn window(&self, s: usize) -> Option<(f64, f64)> {
        let hi = *self.ends.get(s)?;
        let lo = if s == 0 { 0.0 } else { self.ends[s - 1] };
        Some((lo, hi))
    }
    /// The first step of positive length containing `t`.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        (0..self.ends.len()).find(|&s| {
            let (lo, hi) = self.window(s).unwrap();
            hi > lo && lo - 1e-9 <= t && t <= hi + 1e-9
        })
    }

    /// Cuts `[lo, hi]` at step boundaries; each piece carries its step.
    pub fn split(&self, lo: f64, hi: f64) -> Vec<(usize, f64, f64)> {
        let mut cuts = vec![lo];
        cuts.extend(self.ends.iter().copied().filter(|e| *e > lo && *e < hi));
        cuts.push(hi);
        cuts.dedup();
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        if cuts.len() == 1 {
            return self.step_of(lo).map(|s| vec![(s, lo, hi)]).unwrap_or_default();
        }
        for w in cuts.windows(2) {
            if let Some(s) = self.step_of(0.5 * (w[0] + w[1])) {
                out.push((s, w[0], w[1]));
            }
        }
        out
    }
}

/// Rules and variables added for one timepoint of one violation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionDelta {
    pub vars: Vec<Term>,
    pub rules: Vec<Rule>,
    pub provenance: String,
    /// The time δ the copies describe.
    pub timepoint: f64,
}

impl fmt::Display for ExpansionDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "% {}", self.provenance)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Decimal spelling of δ used inside fresh names: at most six decimals,
/// no trailing zeros.
pub fn delta_label(delta: f64) -> String {
    let s = format!("{:.6}", (delta * 1e6).round() / 1e6);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn rat_of(x: f64) -> Rat {
    let den = 1_000_000_000i64;
    ratio((x * den as f64).round() as i64, den)
}

fn num(i: usize) -> Term {
    Term::int(i as i64)
}

fn holds_inprogr(d: &Term, s: Term) -> Atom {
    Atom::new("holds", vec![Term::func("inprogr", vec![d.clone()]), s])
}

fn required(t: Term) -> Atom {
    Atom::new("required", vec![t])
}

fn cspvar(t: Term) -> Rule {
    Rule::fact(Atom::new("cspvar", vec![t]))
}

/// A contribution rule `required(v(contrib(N,S,D),I) = E) :- .., holds(inprogr(D),I)`.
struct Contribution<'a> {
    fluent: &'a Term,
    sign: &'a Term,
    source: &'a Term,
    var: &'a str,
    value: &'a Term,
}

fn as_contribution(r: &Rule) -> Option<Contribution<'_>> {
    let Head::Atom(h) = &r.head else { return None };
    if h.pred != "required" || h.neg || h.args.len() != 1 {
        return None;
    }
    let Term::Rel(crate::rel::CmpOp::Eq, lhs, value) = &h.args[0] else { return None };
    let ("v", [c, Term::Var(var)]) = lhs.functor()? else { return None };
    let ("contrib", [fluent, sign, source]) = c.functor()? else { return None };
    let guarded = r.body.iter().any(|b| {
        matches!(b, BodyLit::Pos(a) if *a == holds_inprogr(source, Term::Var(var.clone())))
    });
    guarded.then_some(Contribution { fluent, sign, source, var, value })
}

/// Program-wide facts about how the fluents change.
struct Sources<'a> {
    contributions: Vec<Contribution<'a>>,
}

impl<'a> Sources<'a> {
    fn of(p: &'a CaspProgram) -> Sources<'a> {
        Sources { contributions: p.rules.iter().filter_map(as_contribution).collect() }
    }
}

fn replace_var(t: &Term, var: &str, s: usize) -> Term {
    t.replace(&Term::Var(var.to_string()), &num(s))
}

/// Emits the δ copies of the contributions to `n` at step `s` and the
/// balance defining `v_final_δ(n,s)`. `fraction` is the share of the step
/// elapsed at δ.
pub fn expand_fluent(p: &CaspProgram, n: &Term, s: usize, delta: f64, fraction: f64) -> ExpansionDelta {
    ExpansionDelta { timepoint: delta, ..expand_fluent_with(&Sources::of(p), n, s, &delta_label(delta), fraction) }
}

fn expand_fluent_with(src: &Sources<'_>, n: &Term, s: usize, label: &str, fraction: f64) -> ExpansionDelta {
    let v_delta = format!("v_{label}");
    let step = num(s);
    let mut out = ExpansionDelta {
        provenance: format!("{n} at {label} in step {s}, fraction {}", delta_label(fraction)),
        ..ExpansionDelta::default()
    };
    let scale = Term::Num(rat_of(fraction));
    let dt = Term::sub(Term::func("tend", vec![step.clone()]), Term::func("tstart", vec![step.clone()]));
    let scaled_dt = Term::mul(scale, dt.clone());
    let mut totals: [Vec<Term>; 2] = [Vec::new(), Vec::new()];
    let mut seen = BTreeSet::new();
    for c in src.contributions.iter().filter(|c| c.fluent == n) {
        let key = Term::func("contrib", vec![c.fluent.clone(), c.sign.clone(), c.source.clone()]);
        if !seen.insert(key.clone()) {
            continue;
        }
        let var = Term::func(&v_delta, vec![key, step.clone()]);
        let value = replace_var(c.value, c.var, s).replace(&dt, &scaled_dt);
        let running = holds_inprogr(c.source, step.clone());
        out.vars.push(var.clone());
        out.rules.push(cspvar(var.clone()));
        out.rules.push(Rule::normal(
            required(Term::rel(crate::rel::CmpOp::Eq, var.clone(), value)),
            vec![BodyLit::Pos(running.clone())],
        ));
        out.rules.push(Rule::normal(
            required(Term::rel(crate::rel::CmpOp::Eq, var.clone(), Term::int(0))),
            vec![BodyLit::Neg(running)],
        ));
        let slot = if matches!(c.sign, Term::Sym(x) if x == "decr") { 1 } else { 0 };
        totals[slot].push(var);
    }
    let mut balance = Term::func("v_initial", vec![n.clone(), step.clone()]);
    for (slot, sign) in ["incr", "decr"].into_iter().enumerate() {
        if totals[slot].is_empty() {
            continue;
        }
        let total = Term::func(&v_delta, vec![Term::func("contrib", vec![n.clone(), Term::sym(sign)]), step.clone()]);
        let sum = totals[slot].iter().cloned().reduce(Term::add).unwrap();
        out.vars.push(total.clone());
        out.rules.push(cspvar(total.clone()));
        out.rules.push(Rule::fact(required(Term::rel(crate::rel::CmpOp::Eq, total.clone(), sum))));
        balance = if slot == 0 { Term::add(balance, total) } else { Term::sub(balance, total) };
    }
    let fin = Term::func(&format!("v_final_{label}"), vec![n.clone(), step]);
    out.vars.push(fin.clone());
    out.rules.push(cspvar(fin.clone()));
    out.rules.push(Rule::fact(required(Term::rel(crate::rel::CmpOp::Eq, fin, balance))));
    if let Some(r) = out.rules.first_mut() {
        r.note = Some(format!("expansion: {}", out.provenance));
    }
    out
}

/// The invariant rules `required(γ) :- holds(inprogr(d),I)` of `owner`
/// that constrain `v_final` of one of `fluents`.
fn invariant_rules<'a>(p: &'a CaspProgram, owner: &Term, fluents: &[Term]) -> Vec<(&'a Term, &'a str)> {
    let mut out = Vec::new();
    for r in &p.rules {
        let Head::Atom(h) = &r.head else { continue };
        if h.pred != "required" || h.neg || h.args.len() != 1 || r.body.len() != 1 {
            continue;
        }
        let BodyLit::Pos(b) = &r.body[0] else { continue };
        let [inprogr, Term::Var(var)] = b.args.as_slice() else { continue };
        if b.pred != "holds" || b.neg || *inprogr != Term::func("inprogr", vec![owner.clone()]) {
            continue;
        }
        let g = &h.args[0];
        let mentions = fluents.iter().any(|n| g.contains(&Term::func("v_final", vec![n.clone(), Term::Var(var.clone())])));
        if matches!(g, Term::Rel(..)) && mentions {
            out.push((g, var.as_str()));
        }
    }
    out
}

/// One violated invariant on a range within a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub owner: Term,
    pub fluents: Vec<Term>,
    pub condition: String,
    pub step: usize,
    pub lo: f64,
    pub hi: f64,
    /// Time window of the step.
    pub window: (f64, f64),
}

/// Splits numeric invariant violations into per-step targets.
pub fn targets(task: &GroundTask, violations: &[Violation], steps: &Steps) -> Result<Vec<Target>, ExpandError> {
    let mut out = Vec::new();
    for v in violations {
        let Some(c) = v.comparison().filter(|_| v.kind == ViolationKind::Invariant) else {
            return Err(ExpandError::NotExpandable(v.to_string()));
        };
        let owner = v
            .owner_index
            .and_then(|i| task.actions.get(i))
            .map(action_term)
            .ok_or_else(|| ExpandError::NotExpandable(v.to_string()))?;
        let mut fl: Vec<FluentRef> = c.fluents();
        fl.sort();
        fl.dedup();
        let fluents: Vec<Term> = fl.iter().map(fluent_term).collect();
        let pieces = steps.split(v.lo, v.hi);
        if pieces.is_empty() {
            return Err(ExpandError::OutsideSteps { lo: v.lo, hi: v.hi });
        }
        for (s, lo, hi) in pieces {
            out.push(Target {
                owner: owner.clone(),
                fluents: fluents.clone(),
                condition: Conjunct::Cmp(c.clone()).to_string(),
                step: s,
                lo,
                hi,
                window: steps.window(s).unwrap(),
            });
        }
    }
    Ok(out)
}

/// All rules added for a set of targets, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion {
    pub deltas: Vec<ExpansionDelta>,
}

impl Expansion {
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.deltas.iter().flat_map(|d| d.rules.iter())
    }
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Adds, for each target and each selected timepoint, the δ copies of the
/// fluents in the invariant and the invariant itself on those copies.
/// Rules already present in `p` are not repeated.
pub fn expand_targets(p: &CaspProgram, targets: &[Target], cfg: &ExpansionConfig) -> Result<Expansion, ExpandError> {
    let src = Sources::of(p);
    let mut have: BTreeSet<Rule> = p.rules.iter().map(strip_note).collect();
    let mut out = Expansion::default();
    for t in targets {
        let invs = invariant_rules(p, &t.owner, &t.fluents);
        if invs.is_empty() {
            return Err(ExpandError::UnknownInvariant { owner: t.owner.to_string(), condition: t.condition.clone() });
        }
        // static fluents were replaced by their values and have no state
        let fluents: Vec<&Term> = t
            .fluents
            .iter()
            .filter(|n| {
                invs.iter().any(|(g, var)| g.contains(&Term::func("v_final", vec![(*n).clone(), Term::Var(var.to_string())])))
            })
            .collect();
        for delta in select_timepoints(t.lo, t.hi, cfg) {
            let fraction = offset(delta, t.window.0, t.window.1);
            // a name already defined by an earlier expansion with another
            // fraction gets a numbered variant
            let base = delta_label(delta);
            let mut j = 1;
            let (label, fresh) = loop {
                let label = if j == 1 { base.clone() } else { format!("{base}_{j}") };
                let fresh: Vec<ExpansionDelta> =
                    fluents.iter().map(|n| expand_fluent_with(&src, n, t.step, &label, fraction)).collect();
                let clash = fresh.iter().flat_map(|d| &d.rules).any(|r| {
                    let r = strip_note(r);
                    !have.contains(&r) && defines_known(&r, &have)
                });
                if !clash {
                    break (label, fresh);
                }
                j += 1;
            };
            let mut delta_rules = ExpansionDelta {
                provenance: format!(
                    "{} of {} violated in [{}, {}], step {}, timepoint {}",
                    t.condition, t.owner, t.lo, t.hi, t.step, delta_label(delta)
                ),
                timepoint: delta,
                ..ExpansionDelta::default()
            };
            for d in fresh {
                delta_rules.vars.extend(d.vars);
                delta_rules.rules.extend(d.rules);
            }
            for (g, var) in &invs {
                let mut g = replace_var(g, var, t.step);
                for n in &fluents {
                    let from = Term::func("v_final", vec![(*n).clone(), num(t.step)]);
                    let to = Term::func(&format!("v_final_{label}"), vec![(*n).clone(), num(t.step)]);
                    g = g.replace(&from, &to);
                }
                delta_rules.rules.push(Rule::normal(required(g), vec![BodyLit::Pos(holds_inprogr(&t.owner, num(t.step)))]));
            }
            delta_rules.rules.retain(|r| have.insert(strip_note(r)));
            if delta_rules.rules.is_empty() {
                continue;
            }
            delta_rules.rules[0].note = Some(format!("expansion: {}", delta_rules.provenance));
            out.deltas.push(delta_rules);
        }
    }
    Ok(out)
}

/// True when `r` is a defining equation whose left side is already
/// defined by some rule in `have`.
fn defines_known(r: &Rule, have: &BTreeSet<Rule>) -> bool {
    let Head::Atom(h) = &r.head else { return false };
    let Some(Term::Rel(crate::rel::CmpOp::Eq, lhs, _)) = h.args.first().filter(|_| h.pred == "required") else {
        return false;
    };
    have.iter().any(|o| match &o.head {
        Head::Atom(a) if a.pred == "required" && o.body == r.body => {
            matches!(a.args.first(), Some(Term::Rel(crate::rel::CmpOp::Eq, l, _)) if l == lhs)
        }
        _ => false,
    })
}

fn strip_note(r: &Rule) -> Rule {
    Rule { note: None, ..r.clone() }
}

/// `p` extended with the expansion of `violations`; `steps` gives the time
/// window of every step of the candidate that was validated.
pub fn expand(
    p: &CaspProgram,
    task: &GroundTask,
    violations: &[Violation],
    steps: &Steps,
    cfg: &ExpansionConfig,
) -> Result<(CaspProgram, Expansion), ExpandError> {
    let ts = targets(task, violations, steps)?;
    let e = expand_targets(p, &ts, cfg)?;
    let mut q = p.clone();
    q.extend(e.rules().cloned());
    Ok((q, e))
}

/// True for terms introduced by an expansion, such as `v_final_18.75(..)`.
pub fn is_expansion_var(t: &Term) -> bool {
    match t.functor() {
        Some((name, _)) => name.starts_with("v_") && name[2..].starts_with(|c: char| c.is_ascii_digit() || c == '-')
            || name.starts_with("v_final_"),
        None => false,
    }
}

#[cfg(test)]
mod tests;
