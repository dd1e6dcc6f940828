//! Closed-form contributions of continuous effects over one state.
//!
//! Inside a state every source runs for `Δ = tend(I) - tstart(I)`. A rate
//! that only mentions fluents no source changes continuously integrates to
//! `rate·Δ`. Two coupled shapes have exact closed forms as well: a level
//! draining through `c·sqrt(level)` (and anything fed at `k·sqrt(level)`),
//! and Riccati flows `v' = a + b·v²` together with positions `x' = k·v`.

use super::EncodeError;
use crate::num::Rat;
use crate::pddl::{Effect, EffectTiming, FluentRef, GroundSchema, NumExpr, NumOp};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Incr,
    Decr,
}

impl Sign {
    pub fn name(self) -> &'static str {
        match self {
            Sign::Incr => "incr",
            Sign::Decr => "decr",
        }
    }
}

/// Contribution shape; fluents stand for their value at the start of the
/// state and `NumExpr::Time` for `Δ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Plain expression in `Δ` and state-initial values.
    Expr(NumExpr),
    /// `ric_v(a,b,v0,Δ) - v0`
    RicDelta { a: NumExpr, b: NumExpr, v: FluentRef },
    /// `c0·Δ + k·ric_x(a,b,v0,Δ)`
    RicPos { c0: NumExpr, k: NumExpr, a: NumExpr, b: NumExpr, v: FluentRef },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contribution {
    pub fluent: FluentRef,
    pub sign: Sign,
    /// Index of the source in `GroundTask::actions`.
    pub source: usize,
    pub shape: Shape,
    /// Whether the shape is negated (decreases with a non-constant shape).
    pub negate: bool,
    /// The contribution is provably nonnegative.
    pub nonneg: bool,
}

/// Domain constraint a closed form relies on: `c·Δ <= 2·sqrt(level)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Validity {
    pub source: usize,
    pub c: NumExpr,
    pub level: FluentRef,
}

fn konst(r: Rat) -> NumExpr {
    NumExpr::Const(r)
}

fn zero() -> NumExpr {
    konst(Rat::zero())
}

fn as_const(e: &NumExpr) -> Option<&Rat> {
    match e {
        NumExpr::Const(r) => Some(r),
        _ => None,
    }
}

/// Constant folding plus the neutral-element rules.
pub fn simp(e: &NumExpr) -> NumExpr {
    use NumExpr::*;
    match e {
        Add(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (as_const(&a), as_const(&b)) {
                (Some(x), Some(y)) => konst(x + y),
                (Some(x), _) if x.is_zero() => b,
                (_, Some(y)) if y.is_zero() => a,
                _ => Add(Box::new(a), Box::new(b)),
            }
        }
        Sub(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (as_const(&a), as_const(&b)) {
                (Some(x), Some(y)) => konst(x - y),
                (Some(x), _) if x.is_zero() => simp(&Neg(Box::new(b))),
                (_, Some(y)) if y.is_zero() => a,
                _ => Sub(Box::new(a), Box::new(b)),
            }
        }
        Mul(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (as_const(&a), as_const(&b)) {
                (Some(x), Some(y)) => konst(x * y),
                (Some(x), _) if x.is_zero() => zero(),
                (_, Some(y)) if y.is_zero() => zero(),
                (Some(x), _) if x.is_one() => b,
                (_, Some(y)) if y.is_one() => a,
                _ => Mul(Box::new(a), Box::new(b)),
            }
        }
        Div(a, b) => {
            let (a, b) = (simp(a), simp(b));
            match (as_const(&a), as_const(&b)) {
                (Some(x), Some(y)) if !y.is_zero() => konst(x / y),
                (_, Some(y)) if y.is_one() => a,
                _ => Div(Box::new(a), Box::new(b)),
            }
        }
        Neg(a) => {
            let a = simp(a);
            match a {
                Const(x) => konst(-x),
                Neg(inner) => *inner,
                a => Neg(Box::new(a)),
            }
        }
        Sq(a) => {
            let a = simp(a);
            match as_const(&a) {
                Some(x) => konst(x * x),
                None => Sq(Box::new(a)),
            }
        }
        Sqrt(a) => Sqrt(Box::new(simp(a))),
        e => e.clone(),
    }
}

fn add(a: NumExpr, b: NumExpr) -> NumExpr {
    simp(&NumExpr::Add(Box::new(a), Box::new(b)))
}
fn sub(a: NumExpr, b: NumExpr) -> NumExpr {
    simp(&NumExpr::Sub(Box::new(a), Box::new(b)))
}
fn mul(a: NumExpr, b: NumExpr) -> NumExpr {
    simp(&NumExpr::Mul(Box::new(a), Box::new(b)))
}
fn neg(a: NumExpr) -> NumExpr {
    simp(&NumExpr::Neg(Box::new(a)))
}

fn mentions_any(e: &NumExpr, set: &BTreeSet<FluentRef>) -> bool {
    let mut v = Vec::new();
    e.fluents(&mut v);
    v.iter().any(|f| set.contains(f))
}

/// Coefficients of `e` as a polynomial of degree at most two in `u`.
fn poly(e: &NumExpr, u: &FluentRef, moving: &BTreeSet<FluentRef>) -> Option<Vec<NumExpr>> {
    use NumExpr::*;
    let trim = |mut v: Vec<NumExpr>| {
        while v.len() > 1 && as_const(v.last().unwrap()).is_some_and(Zero::is_zero) {
            v.pop();
        }
        v
    };
    let out = match e {
        Const(_) => vec![e.clone()],
        Fluent(f) if f == u => vec![zero(), konst(Rat::one())],
        Fluent(f) if moving.contains(f) => return None,
        Fluent(_) => vec![e.clone()],
        Add(a, b) | Sub(a, b) => {
            let (pa, pb) = (poly(a, u, moving)?, poly(b, u, moving)?);
            let n = pa.len().max(pb.len());
            (0..n)
                .map(|i| {
                    let x = pa.get(i).cloned().unwrap_or_else(zero);
                    let y = pb.get(i).cloned().unwrap_or_else(zero);
                    if matches!(e, Add(..)) {
                        add(x, y)
                    } else {
                        sub(x, y)
                    }
                })
                .collect()
        }
        Neg(a) => poly(a, u, moving)?.into_iter().map(neg).collect(),
        Mul(a, b) => conv(&poly(a, u, moving)?, &poly(b, u, moving)?)?,
        Sq(a) => {
            let p = poly(a, u, moving)?;
            conv(&p, &p)?
        }
        Div(a, b) => {
            let pb = trim(poly(b, u, moving)?);
            if pb.len() != 1 {
                return None;
            }
            poly(a, u, moving)?.into_iter().map(|c| simp(&Div(Box::new(c), Box::new(pb[0].clone())))).collect()
        }
        Sqrt(a) => {
            let p = trim(poly(a, u, moving)?);
            if p.len() != 1 {
                return None;
            }
            vec![Sqrt(Box::new(p[0].clone()))]
        }
        Time | Duration => return None,
    };
    let out = trim(out);
    (out.len() <= 3).then_some(out)
}

fn conv(a: &[NumExpr], b: &[NumExpr]) -> Option<Vec<NumExpr>> {
    let mut out = vec![zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = add(out[i + j].clone(), mul(x.clone(), y.clone()));
        }
    }
    while out.len() > 1 && as_const(out.last().unwrap()).is_some_and(Zero::is_zero) {
        out.pop();
    }
    (out.len() <= 3).then_some(out)
}

/// `k` such that `e = k·sqrt(m)`, with `k` free of moving fluents.
fn sqrt_coeff(e: &NumExpr, m: &FluentRef, moving: &BTreeSet<FluentRef>) -> Option<NumExpr> {
    use NumExpr::*;
    match e {
        Sqrt(a) if matches!(&**a, Fluent(f) if f == m) => Some(konst(Rat::one())),
        Mul(a, b) => {
            if !mentions_any(b, moving) {
                Some(mul(sqrt_coeff(a, m, moving)?, (**b).clone()))
            } else if !mentions_any(a, moving) {
                Some(mul((**a).clone(), sqrt_coeff(b, m, moving)?))
            } else {
                None
            }
        }
        Div(a, b) if !mentions_any(b, moving) => {
            Some(simp(&Div(Box::new(sqrt_coeff(a, m, moving)?), b.clone())))
        }
        Neg(a) => Some(neg(sqrt_coeff(a, m, moving)?)),
        _ => None,
    }
}

struct Rates {
    /// Net signed rate per fluent.
    signed: BTreeMap<FluentRef, NumExpr>,
    /// Sum of rates when every continuous effect on the fluent decreases it.
    decr_only: BTreeMap<FluentRef, NumExpr>,
}

fn rates(a: &GroundSchema) -> Result<Rates, EncodeError> {
    let mut signed: BTreeMap<FluentRef, NumExpr> = BTreeMap::new();
    let mut dec: BTreeMap<FluentRef, Option<NumExpr>> = BTreeMap::new();
    for e in &a.effects {
        let Effect::Num { timing: EffectTiming::Continuous, op, fluent, expr } = e else { continue };
        let rate = expr.time_rate().ok_or_else(|| EncodeError::UnsupportedEffect {
            schema: a.name(),
            detail: format!("continuous effect on {fluent} is not of the form (* #t rate)"),
        })?;
        if rate.any(&|x| matches!(x, NumExpr::Duration)) {
            return Err(EncodeError::UnsupportedEffect {
                schema: a.name(),
                detail: "?duration inside a continuous rate".into(),
            });
        }
        let s = match op {
            NumOp::Increase => rate.clone(),
            NumOp::Decrease => neg(rate.clone()),
            NumOp::Assign => unreachable!("continuous assign is rejected by the parser"),
        };
        let cur = signed.remove(fluent).unwrap_or_else(zero);
        signed.insert(fluent.clone(), add(cur, s));
        let d = dec.entry(fluent.clone()).or_insert_with(|| Some(zero()));
        *d = match (d.take(), op) {
            (Some(acc), NumOp::Decrease) => Some(add(acc, rate.clone())),
            _ => None,
        };
    }
    let decr_only = dec.into_iter().filter_map(|(f, d)| d.map(|d| (f, d))).collect();
    Ok(Rates { signed, decr_only })
}

/// Riccati coefficients `(a, b)` of `v' = a + b·v²`, if `v` has that shape.
fn riccati(signed: &NumExpr, v: &FluentRef, moving: &BTreeSet<FluentRef>) -> Option<(NumExpr, NumExpr)> {
    let p = poly(signed, v, moving)?;
    let c = |i: usize| p.get(i).cloned().unwrap_or_else(zero);
    if !as_const(&c(1)).is_some_and(Zero::is_zero) {
        return None;
    }
    Some((c(0), c(2)))
}

/// Contributions of every continuous source of the task.
pub fn contributions(actions: &[GroundSchema]) -> Result<(Vec<Contribution>, Vec<Validity>), EncodeError> {
    let mut per_source = Vec::new();
    let mut movers: BTreeMap<FluentRef, Vec<usize>> = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        let r = rates(a)?;
        if r.signed.is_empty() {
            continue;
        }
        for f in r.signed.keys() {
            movers.entry(f.clone()).or_default().push(i);
        }
        per_source.push((i, r));
    }
    let global: BTreeSet<FluentRef> = movers.keys().cloned().collect();
    let mut out = Vec::new();
    let mut validity = Vec::new();
    for (i, r) in &per_source {
        let a = &actions[*i];
        let unsupported = |detail: String| EncodeError::UnsupportedEffect { schema: a.name(), detail };
        let own: BTreeSet<FluentRef> = r.signed.keys().cloned().collect();
        // fluents this source both changes and reads must not be driven by anyone else
        for rate in r.signed.values() {
            let mut deps = Vec::new();
            rate.fluents(&mut deps);
            for d in deps.iter().filter(|d| global.contains(*d)) {
                if !own.contains(d) || movers[d].len() > 1 {
                    return Err(unsupported(format!("rate reads {d}, which another source also changes continuously")));
                }
            }
        }
        for (n, signed) in &r.signed {
            let decr = r.decr_only.get(n);
            let sign = if decr.is_some() { Sign::Decr } else { Sign::Incr };
            let tagged = decr.cloned().unwrap_or_else(|| signed.clone());
            let (shape, negate, nonneg) = if !mentions_any(signed, &global) {
                let nonneg = as_const(&tagged).is_some_and(|c| !c.is_negative());
                (Shape::Expr(mul(tagged.clone(), NumExpr::Time)), false, nonneg)
            } else if let Some((m, k)) = own.iter().find_map(|m| sqrt_coeff(&tagged, m, &global).map(|k| (m, k))) {
                let c = sqrt_coeff(&r.signed[m], m, &global)
                    .map(neg)
                    .ok_or_else(|| unsupported(format!("{m} does not drain through sqrt({m})")))?;
                // k·(sqrt(m0)·Δ − c·Δ²/4)
                let quarter = konst(Rat::new(1.into(), 4.into()));
                let body = sub(
                    mul(NumExpr::Sqrt(Box::new(NumExpr::Fluent(m.clone()))), NumExpr::Time),
                    mul(mul(c.clone(), quarter), NumExpr::Sq(Box::new(NumExpr::Time))),
                );
                if !validity.iter().any(|v: &Validity| v.source == *i && v.level == *m) {
                    validity.push(Validity { source: *i, c, level: m.clone() });
                }
                (Shape::Expr(mul(k, body)), false, false)
            } else if let Some((a_, b_)) = riccati(signed, n, &global) {
                (Shape::RicDelta { a: a_, b: b_, v: n.clone() }, sign == Sign::Decr, false)
            } else {
                // position fed by a single Riccati or constant-rate velocity
                let mut deps = Vec::new();
                signed.fluents(&mut deps);
                let moving_deps: Vec<&FluentRef> = deps.iter().filter(|d| global.contains(*d)).collect();
                let [v] = moving_deps.as_slice() else {
                    return Err(unsupported(format!("no closed form for the rate of {n}")));
                };
                let p = poly(signed, v, &global).filter(|p| p.len() <= 2);
                let ab = r.signed.get(*v).and_then(|rv| {
                    if !mentions_any(rv, &global) {
                        Some((rv.clone(), zero()))
                    } else {
                        riccati(rv, v, &global)
                    }
                });
                match (p, ab) {
                    (Some(p), Some((a_, b_))) => {
                        let c0 = p[0].clone();
                        let k = p.get(1).cloned().unwrap_or_else(zero);
                        (Shape::RicPos { c0, k, a: a_, b: b_, v: (*v).clone() }, sign == Sign::Decr, false)
                    }
                    _ => return Err(unsupported(format!("no closed form for the rate of {n}"))),
                }
            };
            out.push(Contribution { fluent: n.clone(), sign, source: *i, shape, negate, nonneg });
        }
    }
    Ok((out, validity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{ground_task, parse_domain, parse_problem};

    fn task(effects: &str) -> Vec<GroundSchema> {
        let d = parse_domain(&format!(
            "(define (domain d) (:requirements :fluents :processes)
              (:functions (x) (v) (a) (l) (f))
              (:process p :parameters () :precondition (>= (a) 0) :effect (and {effects})))"
        ))
        .unwrap();
        let p = parse_problem("(define (problem q) (:domain d))", &d).unwrap();
        ground_task(&p).actions
    }

    #[test]
    fn constant_rates_scale_with_the_state_duration() {
        let (c, _) = contributions(&task("(decrease (f) (* #t 1)) (increase (x) (* #t (a)))")).unwrap();
        assert_eq!(c.len(), 2);
        let f = c.iter().find(|c| c.fluent.name == "f").unwrap();
        assert_eq!(f.sign, Sign::Decr);
        assert!(f.nonneg);
        assert_eq!(f.shape, Shape::Expr(NumExpr::Time));
        let x = c.iter().find(|c| c.fluent.name == "x").unwrap();
        assert_eq!(x.sign, Sign::Incr);
        assert!(!x.nonneg);
    }

    #[test]
    fn draining_tank_gets_a_quadratic() {
        let (c, v) = contributions(&task(
            "(increase (f) (* #t (* 0.8 (sqrt (l))))) (decrease (l) (* #t (* 0.8 (sqrt (l)))))",
        ))
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(v.len(), 1);
        let env = |f: &FluentRef| (f.name == "l").then_some(25.0);
        for x in &c {
            let Shape::Expr(e) = &x.shape else { panic!() };
            // 0.8·(5τ − 0.2τ²) at τ = 12.5 gives the full tank
            assert!((e.eval(&env, 12.5, 0.0).unwrap() - 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn riccati_pair() {
        let (c, _) =
            contributions(&task("(increase (v) (* #t (- (a) (* 0.1 (^ (v) 2))))) (increase (x) (* #t (v)))")).unwrap();
        assert!(matches!(&c.iter().find(|c| c.fluent.name == "v").unwrap().shape, Shape::RicDelta { .. }));
        assert!(matches!(&c.iter().find(|c| c.fluent.name == "x").unwrap().shape, Shape::RicPos { .. }));
    }

    #[test]
    fn cubic_rates_are_rejected() {
        let e = contributions(&task("(increase (v) (* #t (* (v) (^ (v) 2))))")).unwrap_err();
        assert!(e.to_string().contains("no closed form"));
    }
}
