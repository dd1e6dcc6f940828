//! Analytic fluent trajectories of the benchmark families under a plan.
//!
//! Written per family from the physics, without going through the PDDL
//! model, so they can serve as an oracle for the validator.

use super::{Family, Instance};
use crate::plan::Plan;
use std::collections::BTreeMap;

/// Fluent values as functions of time.
pub struct RefTrajectory {
    values: BTreeMap<String, Box<dyn Fn(f64) -> f64>>,
}

impl RefTrajectory {
    pub fn value(&self, fluent: &str, t: f64) -> Option<f64> {
        self.values.get(fluent).map(|f| f(t))
    }
    pub fn fluents(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

fn overlap(lo: f64, hi: f64, t: f64) -> f64 {
    (t.min(hi) - lo).max(0.0)
}

fn interval(plan: &Plan, name: &str) -> Option<(f64, f64)> {
    plan.steps.iter().find(|s| s.name == name).map(|s| (s.t, s.end()))
}

fn refuels(plan: &Plan) -> Vec<(String, f64, f64)> {
    plan.steps
        .iter()
        .filter_map(|s| {
            let tank = s.name.strip_prefix("refuel(")?.strip_suffix(')')?;
            Some((tank.to_string(), s.t, s.end()))
        })
        .collect()
}

fn init(inst: &Instance, name: &str) -> f64 {
    inst.instance
        .init_values
        .iter()
        .find(|(f, _)| f.name == name && f.args.is_empty())
        .map(|(_, v)| crate::num::to_f64(v))
        .unwrap_or(0.0)
}

/// Level drained from a tank after `tau` time units: a 25-unit tank emptied
/// through an orifice in 12.5 time units.
fn drained(tau: f64) -> f64 {
    let tau = tau.min(12.5);
    4.0 * tau - 0.16 * tau * tau
}

fn generator(inst: &Instance, plan: &Plan, nonlinear: bool) -> RefTrajectory {
    let f0 = init(inst, "fuel_level");
    let gen = interval(plan, "generate").unwrap_or((0.0, 0.0));
    let rs = refuels(plan);
    let mut values: BTreeMap<String, Box<dyn Fn(f64) -> f64>> = BTreeMap::new();
    let rs2 = rs.clone();
    values.insert(
        "fuel_level".into(),
        Box::new(move |t| {
            let added: f64 = rs2
                .iter()
                .map(|(_, a, b)| if nonlinear { drained(overlap(*a, *b, t)) } else { 2.0 * overlap(*a, *b, t) })
                .sum();
            f0 - overlap(gen.0, gen.1, t) + added
        }),
    );
    values.insert("generator_time".into(), Box::new(move |t| overlap(gen.0, gen.1, t)));
    if nonlinear {
        for tank in inst.instance.objects.iter().map(|(o, _)| o.clone()) {
            let span = rs.iter().find(|(k, _, _)| *k == tank).map(|(_, a, b)| (*a, *b));
            values.insert(
                format!("tank_level({tank})"),
                Box::new(move |t| match span {
                    Some((a, b)) => 25.0 - drained(overlap(a, b, t)),
                    None => 25.0,
                }),
            );
        }
    }
    RefTrajectory { values }
}

/// Instantaneous changes of the controlled quantity, as `(time, delta)`.
fn pushes(plan: &Plan) -> Vec<(f64, f64)> {
    plan.steps
        .iter()
        .filter_map(|s| match s.name.as_str() {
            "accelerate" => Some((s.t, 1.0)),
            "decelerate" => Some((s.t, -1.0)),
            _ => None,
        })
        .collect()
}

/// Piecewise integration of `x' = v` with `v` piecewise constant.
fn car_linear(plan: &Plan) -> RefTrajectory {
    let ps = pushes(plan);
    let mv = interval(plan, "moving").unwrap_or((0.0, f64::INFINITY));
    let ps_v = ps.clone();
    let speed = move |t: f64| ps_v.iter().filter(|(ti, _)| *ti <= t).map(|(_, d)| d).sum::<f64>();
    let mut values: BTreeMap<String, Box<dyn Fn(f64) -> f64>> = BTreeMap::new();
    let sp = speed.clone();
    values.insert("v".into(), Box::new(speed));
    values.insert(
        "d".into(),
        Box::new(move |t| {
            let mut cuts: Vec<f64> = ps.iter().map(|(ti, _)| *ti).chain([mv.0, mv.1]).filter(|c| *c < t).collect();
            cuts.push(t);
            cuts.sort_by(f64::total_cmp);
            let mut prev = mv.0;
            let mut x = 0.0;
            for c in cuts {
                let (lo, hi) = (prev.max(mv.0), c.min(mv.1));
                if hi > lo {
                    x += sp(lo) * (hi - lo);
                }
                prev = prev.max(c);
            }
            x
        }),
    );
    RefTrajectory { values }
}

/// Speed and distance after `tau` under `v' = a - c·v²` from `v0`.
fn drag_flow(a: f64, c: f64, v0: f64, tau: f64) -> (f64, f64) {
    if a == 0.0 {
        let den = 1.0 + c * v0 * tau;
        return (v0 / den, den.ln() / c);
    }
    if a > 0.0 {
        let s = (a / c).sqrt();
        let w = (a * c).sqrt();
        if v0.abs() < s {
            let u0 = (v0 / s).atanh();
            let u = w * tau + u0;
            return (s * u.tanh(), (u.cosh() / u0.cosh()).ln() / c);
        }
        let u0 = (s / v0).atanh();
        let u = w * tau + u0;
        return (s / u.tanh(), (u.sinh() / u0.sinh()).ln() / c);
    }
    let s = (-a / c).sqrt();
    let w = (-a * c).sqrt();
    let th0 = (v0 / s).atan();
    let th = th0 - w * tau;
    (s * th.tan(), (th.cos() / th0.cos()).ln() / c)
}

fn car_nonlinear(inst: &Instance, plan: &Plan) -> RefTrajectory {
    let c = init(inst, "drag");
    let ps = pushes(plan);
    let mv = interval(plan, "moving").unwrap_or((0.0, f64::INFINITY));
    let state = move |t: f64| -> (f64, f64, f64) {
        // (a, v, d) by walking the pieces of constant acceleration
        let mut cuts: Vec<f64> = ps.iter().map(|(ti, _)| *ti).filter(|c| *c > mv.0 && *c < t.min(mv.1)).collect();
        cuts.push(t.min(mv.1));
        cuts.sort_by(f64::total_cmp);
        let acc_at = |x: f64| ps.iter().filter(|(ti, _)| *ti <= x).map(|(_, d)| d).sum::<f64>();
        let (mut v, mut d, mut prev) = (0.0, 0.0, mv.0);
        for cut in cuts {
            if cut > prev {
                let (nv, dd) = drag_flow(acc_at(prev), c, v, cut - prev);
                v = nv;
                d += dd;
                prev = cut;
            }
        }
        (acc_at(t), v, d)
    };
    let st = std::rc::Rc::new(state);
    let (s1, s2, s3) = (st.clone(), st.clone(), st);
    let mut values: BTreeMap<String, Box<dyn Fn(f64) -> f64>> = BTreeMap::new();
    values.insert("a".into(), Box::new(move |t| s1(t).0));
    values.insert("v".into(), Box::new(move |t| s2(t).1));
    values.insert("d".into(), Box::new(move |t| s3(t).2));
    RefTrajectory { values }
}

/// Room temperature under the two-event thermostat with no plan actions.
fn thermostat(inst: &Instance) -> RefTrajectory {
    let x0 = init(inst, "x");
    let temp = move |t: f64| {
        let (mut x, mut now, mut on) = (x0, 0.0, x0 < 19.0);
        loop {
            if on {
                let until = now + (21.0 - x) / 2.0;
                if t <= until {
                    return x + 2.0 * (t - now);
                }
                x = 21.0;
                now = until;
                on = false;
            } else {
                let until = now + 10.0 * (x / 19.0).ln();
                if t <= until {
                    return x * (-0.1 * (t - now)).exp();
                }
                x = 19.0;
                now = until;
                on = true;
            }
        }
    };
    let mut values: BTreeMap<String, Box<dyn Fn(f64) -> f64>> = BTreeMap::new();
    values.insert("x".into(), Box::new(temp));
    values.insert("timer".into(), Box::new(|t| t));
    RefTrajectory { values }
}

/// Closed-form trajectory of the instance's fluents under `plan`.
pub fn reference_trajectory(inst: &Instance, plan: &Plan) -> RefTrajectory {
    match inst.spec.family {
        Family::GeneratorLinear => generator(inst, plan, false),
        Family::GeneratorNonlinear => generator(inst, plan, true),
        Family::CarLinear => car_linear(plan),
        Family::CarNonlinear => car_nonlinear(inst, plan),
        Family::Thermostat => thermostat(inst),
    }
}
