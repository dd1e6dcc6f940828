//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hycasp::benchmarks::{Family, Instance};
use hycasp::casp::{is_answer_set, parse_program, AnswerSet, Atom, GroundProgram};
use hycasp::num::{int, to_f64, Rat};
use hycasp::pddl::FluentRef;
use hycasp::plan::Plan;
use hycasp::validator::Trajectory;
use num_traits::{Signed, Zero};
use rand::Rng;
use std::collections::BTreeSet;

// ---------------------------------------------------------------- programs

/// A random propositional program over at most `max_atoms` atoms, as text.
pub fn random_program(rng: &mut impl Rng, max_atoms: usize) -> (String, usize) {
    let n = rng.gen_range(1..=max_atoms);
    let atom = |rng: &mut dyn rand::RngCore| format!("a{}", rng.gen_range(0..n));
    let lit = |rng: &mut dyn rand::RngCore| {
        let a = format!("a{}", rng.gen_range(0..n));
        if rng.gen_bool(0.4) {
            format!("not {a}")
        } else {
            a
        }
    };
    let body = |rng: &mut dyn rand::RngCore, min: usize| {
        let k = rng.gen_range(min..=3);
        (0..k).map(|_| lit(rng)).collect::<Vec<_>>()
    };
    let rules = rng.gen_range(1..=2 * n + 2);
    let mut text = String::new();
    for _ in 0..rules {
        let kind = rng.gen_range(0..10);
        let (head, b) = match kind {
            0 => (atom(rng), vec![]),
            1..=5 => (atom(rng), body(rng, 1)),
            6 | 7 => {
                let k = rng.gen_range(1..=3);
                let elems: Vec<String> = (0..k).map(|_| atom(rng)).collect();
                let (lb, ub) = match rng.gen_range(0..3) {
                    0 => (String::new(), String::new()),
                    1 => ("1".to_string(), "1".to_string()),
                    _ => (rng.gen_range(0..=1).to_string(), rng.gen_range(1..=2).to_string()),
                };
                (format!("{lb}{{{}}}{ub}", elems.join("; ")), body(rng, 0))
            }
            _ => (String::new(), body(rng, 1)),
        };
        if b.is_empty() {
            text.push_str(&format!("{head}.\n"));
        } else if head.is_empty() {
            text.push_str(&format!(":- {}.\n", b.join(", ")));
        } else {
            text.push_str(&format!("{head} :- {}.\n", b.join(", ")));
        }
    }
    (text, n)
}

/// The program text as a ground program, without going through the grounder.
pub fn as_ground(text: &str) -> GroundProgram {
    GroundProgram::from_rules(parse_program(text).unwrap().rules)
}

/// Every answer set, by testing all subsets of `a0..a{n-1}`.
pub fn brute_force(g: &GroundProgram, n: usize) -> BTreeSet<AnswerSet> {
    let atoms: Vec<Atom> = (0..n).map(|i| Atom::new(&format!("a{i}"), vec![])).collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let s: AnswerSet = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i].clone()).collect();
        if is_answer_set(g, &s) {
            out.insert(s);
        }
    }
    out
}

// ----------------------------------------------------------- linear systems

#[derive(Clone, Debug)]
pub struct LinCon {
    pub coef: Vec<i64>,
    pub op: &'static str,
    pub rhs: i64,
}

impl LinCon {
    pub fn lhs_text(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coef.iter().enumerate().filter(|(_, c)| **c != 0) {
            if s.is_empty() {
                s = format!("{c}*x{i}");
            } else if *c > 0 {
                s.push_str(&format!(" + {c}*x{i}"));
            } else {
                s.push_str(&format!(" - {}*x{i}", -c));
            }
        }
        s
    }

    /// Holds at `x` within `tol`.
    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        let l: f64 = self.coef.iter().zip(x).map(|(c, v)| *c as f64 * v).sum();
        let r = self.rhs as f64;
        match self.op {
            "<=" | "<" => l <= r + tol,
            ">=" | ">" => l >= r - tol,
            _ => (l - r).abs() <= tol,
        }
    }
}

pub const BOUND: i64 = 50;

pub fn random_system(rng: &mut impl Rng) -> (usize, Vec<LinCon>) {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=6);
    let ops = ["<=", ">=", "=", "<", ">"];
    let cons = (0..m)
        .map(|_| {
            let mut coef: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
            if coef.iter().all(|c| *c == 0) {
                coef[rng.gen_range(0..n)] = 1;
            }
            LinCon { coef, op: ops[rng.gen_range(0..ops.len())], rhs: rng.gen_range(-6..=6) }
        })
        .collect();
    (n, cons)
}

/// The system as a constraint program, with every variable in `[-BOUND, BOUND]`.
pub fn system_program(n: usize, cons: &[LinCon]) -> String {
    let mut s = String::new();
    for i in 0..n {
        s.push_str(&format!("cspvar(x{i}). required(x{i} >= -{BOUND}). required(x{i} <= {BOUND}).\n"));
    }
    for c in cons {
        s.push_str(&format!("required({} {} {}).\n", c.lhs_text(), c.op, c.rhs));
    }
    s
}

/// `a·x ≤ b`, or `<` when strict.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Row {
    a: Vec<Rat>,
    b: Rat,
    strict: bool,
}

/// Exact feasibility over the reals by Fourier–Motzkin elimination.
pub fn fourier_motzkin(n: usize, cons: &[LinCon]) -> bool {
    let mut rows: BTreeSet<Row> = BTreeSet::new();
    let mut add = |a: Vec<i64>, b: i64, strict: bool, neg: bool| {
        let s = if neg { -1 } else { 1 };
        rows.insert(Row { a: a.iter().map(|c| int(s * c)).collect(), b: int(s * b), strict });
    };
    for c in cons {
        match c.op {
            "<=" => add(c.coef.clone(), c.rhs, false, false),
            "<" => add(c.coef.clone(), c.rhs, true, false),
            ">=" => add(c.coef.clone(), c.rhs, false, true),
            ">" => add(c.coef.clone(), c.rhs, true, true),
            _ => {
                add(c.coef.clone(), c.rhs, false, false);
                add(c.coef.clone(), c.rhs, false, true);
            }
        }
    }
    for i in 0..n {
        let mut unit = vec![0; n];
        unit[i] = 1;
        add(unit.clone(), BOUND, false, false);
        unit[i] = -1;
        add(unit, BOUND, false, false);
    }
    for j in 0..n {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.a[j].is_positive() {
                pos.push(r);
            } else if r.a[j].is_negative() {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        let mut next: BTreeSet<Row> = rest.into_iter().collect();
        for p in &pos {
            for q in &neg {
                let (sp, sq) = (p.a[j].clone(), -q.a[j].clone());
                let a: Vec<Rat> = p.a.iter().zip(&q.a).map(|(x, y)| x / &sp + y / &sq).collect();
                next.insert(Row { a, b: &p.b / &sp + &q.b / &sq, strict: p.strict || q.strict });
            }
        }
        rows = next;
    }
    rows.iter().all(|r| if r.strict { r.b.is_positive() } else { !r.b.is_negative() || r.b.is_zero() })
}

// ----------------------------------------------------------------- dynamics

/// Fixed-step fourth-order integration of the benchmark dynamics, written
/// from the domain descriptions rather than from the validator.
pub struct Rk4 {
    pub names: Vec<FluentRef>,
    family: Family,
    tanks: usize,
}

fn init(inst: &Instance, f: &FluentRef) -> f64 {
    inst.instance.init_value(f).map(to_f64).unwrap_or(0.0)
}

impl Rk4 {
    pub fn new(inst: &Instance) -> Rk4 {
        let family = inst.spec.family;
        let tanks = inst.spec.n;
        let names = match family {
            Family::GeneratorLinear => vec![FluentRef::new("fuel_level", &[]), FluentRef::new("generator_time", &[])],
            Family::GeneratorNonlinear => {
                let mut v = vec![FluentRef::new("fuel_level", &[]), FluentRef::new("generator_time", &[])];
                for i in 1..=tanks {
                    v.push(FluentRef::new("tank_level", &[&format!("tank{i}")]));
                }
                v
            }
            Family::CarLinear => vec![FluentRef::new("d", &[]), FluentRef::new("v", &[])],
            Family::CarNonlinear => vec![FluentRef::new("d", &[]), FluentRef::new("v", &[]), FluentRef::new("a", &[])],
            Family::Thermostat => panic!("not a planning benchmark"),
        };
        Rk4 { names, family, tanks }
    }

    /// Derivative of the state while the listed steps in `active` run.
    fn rhs(&self, x: &[f64], active: &BTreeSet<String>) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        match self.family {
            Family::GeneratorLinear | Family::GeneratorNonlinear => {
                if active.contains("generate") {
                    dx[0] -= 1.0;
                    dx[1] += 1.0;
                }
                for i in 1..=self.tanks {
                    if !active.contains(&format!("refuel(tank{i})")) {
                        continue;
                    }
                    if self.family == Family::GeneratorLinear {
                        dx[0] += 2.0;
                    } else {
                        let flow = 0.8 * x[1 + i].max(0.0).sqrt();
                        dx[0] += flow;
                        dx[1 + i] -= flow;
                    }
                }
            }
            Family::CarLinear => {
                if active.contains("moving") {
                    dx[0] = x[1];
                }
            }
            Family::CarNonlinear => {
                if active.contains("moving") {
                    dx[0] = x[1];
                    dx[1] = x[2] - 0.1 * x[1] * x[1];
                }
            }
            Family::Thermostat => unreachable!(),
        }
        dx
    }

    fn jump(&self, x: &mut [f64], name: &str) {
        let k = if self.family == Family::CarLinear { 1 } else { 2 };
        match name {
            "accelerate" => x[k] += 1.0,
            "decelerate" => x[k] -= 1.0,
            _ => {}
        }
    }

    fn step(&self, x: &[f64], h: f64, active: &BTreeSet<String>) -> Vec<f64> {
        let add = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(p, q)| p + s * q).collect::<Vec<f64>>();
        let k1 = self.rhs(x, active);
        let k2 = self.rhs(&add(x, &k1, h / 2.0), active);
        let k3 = self.rhs(&add(x, &k2, h / 2.0), active);
        let k4 = self.rhs(&add(x, &k3, h), active);
        (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
    }

    /// States at the requested times (sorted, strictly inside segments),
    /// integrating with step `h` over the plan's timeline.
    pub fn run(&self, inst: &Instance, listing: &Plan, samples: &[f64], h: f64) -> Vec<Vec<f64>> {
        let mut x: Vec<f64> = self.names.iter().map(|f| init(inst, f)).collect();
        let mut marks: Vec<f64> = listing.steps.iter().flat_map(|s| [s.t, s.end()]).collect();
        marks.extend(samples);
        marks.sort_by(f64::total_cmp);
        marks.dedup();
        let mut out = Vec::new();
        let mut t = 0.0;
        let mut next_sample = 0;
        for &m in &marks {
            let active: BTreeSet<String> =
                listing.steps.iter().filter(|s| s.duration > 0.0 && s.t <= t && t < s.end()).map(|s| s.name.clone()).collect();
            while t < m {
                let dt = h.min(m - t);
                x = self.step(&x, dt, &active);
                t = if m - t <= h { m } else { t + h };
            }
            for s in listing.steps.iter().filter(|s| s.duration == 0.0 && s.t == m) {
                self.jump(&mut x, &s.name);
            }
            while next_sample < samples.len() && samples[next_sample] == m {
                out.push(x.clone());
                next_sample += 1;
            }
        }
        out
    }
}

/// Sample times strictly inside each segment between happenings.
pub fn interior_samples(listing: &Plan, per_segment: usize) -> Vec<f64> {
    let mut marks: Vec<f64> = listing.steps.iter().flat_map(|s| [s.t, s.end()]).collect();
    marks.push(0.0);
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let mut out = Vec::new();
    for w in marks.windows(2) {
        for i in 1..=per_segment {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / (per_segment + 1) as f64);
        }
    }
    out
}

/// Largest gap between the validator trajectory and the integrated one.
pub fn max_gap(inst: &Instance, listing: &Plan, traj: &Trajectory, h: f64) -> f64 {
    let rk = Rk4::new(inst);
    let samples = interior_samples(listing, 7);
    let states = rk.run(inst, listing, &samples, h);
    let mut gap: f64 = 0.0;
    for (t, x) in samples.iter().zip(&states) {
        for (f, want) in rk.names.iter().zip(x) {
            let got = traj.value(f, *t).unwrap_or(f64::NAN);
            gap = gap.max((got - want).abs());
            if !gap.is_finite() {
                return f64::INFINITY;
            }
        }
    }
    gap
}

pub fn rat_f64(r: &Rat) -> f64 {
    to_f64(r)
}
