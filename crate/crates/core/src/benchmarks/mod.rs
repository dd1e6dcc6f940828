//! Benchmark families: PDDL+ text generators, recommended search settings
//! and analytic reference trajectories.

mod reference;

pub use reference::{reference_trajectory, RefTrajectory};

use crate::encoder::Variant;
use crate::num::fmt_f64_name;
use crate::pddl::{ground_task, parse_domain_named, parse_problem_named, GroundTask, PddlError, PlanningInstance};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark family {0}")]
    UnknownFamily(String),
    #[error("{0} needs at least one {1}")]
    BadSize(&'static str, &'static str),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    GeneratorLinear,
    GeneratorNonlinear,
    CarLinear,
    CarNonlinear,
    Thermostat,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::GeneratorLinear, Family::GeneratorNonlinear, Family::CarLinear, Family::CarNonlinear, Family::Thermostat];

    pub fn name(self) -> &'static str {
        match self {
            Family::GeneratorLinear => "generator_linear",
            Family::GeneratorNonlinear => "generator_nonlinear",
            Family::CarLinear => "car_linear",
            Family::CarNonlinear => "car_nonlinear",
            Family::Thermostat => "thermostat",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

/// Family plus size: tanks for generators, the acceleration bound for cars.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub capacity: Option<f64>,
    pub init_fuel: Option<f64>,
    pub goal: Option<f64>,
}

impl InstanceSpec {
    pub fn new(family: Family, n: usize) -> InstanceSpec {
        InstanceSpec { family, n, capacity: None, init_fuel: None, goal: None }
    }
}

/// A generated instance with the settings it is meant to be solved with.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub domain_text: String,
    pub problem_text: String,
    pub instance: PlanningInstance,
    pub task: GroundTask,
    pub last_step: usize,
    pub variant: Variant,
    pub hints: Vec<(String, usize)>,
    /// Validation tolerance.
    pub eps: f64,
}

const GENERATOR_LINEAR: &str = "(define (domain generator)
  (:requirements :fluents :durative-actions :duration-inequalities :continuous-effects :processes :typing)
  (:types tank)
  (:predicates (available ?t - tank))
  (:functions (fuel_level) (capacity) (generator_time))
  (:process generate
    :parameters ()
    :condition (over all (>= (fuel_level) 0))
    :effect (and (decrease (fuel_level) (* #t 1))
                 (increase (generator_time) (* #t 1))))
  (:durative-action refuel
    :parameters (?t - tank)
    :duration (= ?duration 10)
    :condition (and (at start (available ?t))
                    (over all (<= (fuel_level) (capacity))))
    :effect (and (at start (not (available ?t)))
                 (increase (fuel_level) (* #t 2)))))
";

const GENERATOR_NONLINEAR: &str = "(define (domain generator)
  (:requirements :fluents :durative-actions :duration-inequalities :continuous-effects :processes :typing)
  (:types tank)
  (:predicates (available ?t - tank))
  (:functions (fuel_level) (capacity) (generator_time) (tank_level ?t - tank))
  (:process generate
    :parameters ()
    :condition (over all (>= (fuel_level) 0))
    :effect (and (decrease (fuel_level) (* #t 1))
                 (increase (generator_time) (* #t 1))))
  (:durative-action refuel
    :parameters (?t - tank)
    :duration (= ?duration 12.5)
    :condition (and (at start (available ?t))
                    (over all (<= (fuel_level) (capacity))))
    :effect (and (at start (not (available ?t)))
                 (increase (fuel_level) (* #t (* 0.8 (sqrt (tank_level ?t)))))
                 (decrease (tank_level ?t) (* #t (* 0.8 (sqrt (tank_level ?t))))))))
";

const CAR_LINEAR: &str = "(define (domain car)
  (:requirements :fluents :processes :time)
  (:predicates (running))
  (:functions (d) (v) (max_speed))
  (:process moving
    :parameters ()
    :precondition (running)
    :effect (increase (d) (* #t (v))))
  (:action accelerate
    :parameters ()
    :precondition (and (running) (< (v) (max_speed)))
    :effect (increase (v) 1))
  (:action decelerate
    :parameters ()
    :precondition (and (running) (> (v) (- (max_speed))))
    :effect (decrease (v) 1)))
";

const CAR_NONLINEAR: &str = "(define (domain car)
  (:requirements :fluents :processes :time)
  (:predicates (running))
  (:functions (d) (v) (a) (max_acc) (drag))
  (:process moving
    :parameters ()
    :precondition (running)
    :effect (and (increase (v) (* #t (- (a) (* (drag) (^ (v) 2)))))
                 (increase (d) (* #t (v)))))
  (:action accelerate
    :parameters ()
    :precondition (and (running) (< (a) (max_acc)))
    :effect (increase (a) 1))
  (:action decelerate
    :parameters ()
    :precondition (and (running) (> (a) (- (max_acc))))
    :effect (decrease (a) 1)))
";

const THERMOSTAT: &str = "(define (domain thermostat)
  (:requirements :fluents :processes :events :negative-preconditions)
  (:predicates (heater_on))
  (:functions (x) (timer))
  (:process warming
    :parameters ()
    :precondition (heater_on)
    :effect (and (increase (x) (* #t 2)) (increase (timer) (* #t 1))))
  (:process cooling
    :parameters ()
    :precondition (not (heater_on))
    :effect (and (decrease (x) (* #t (* 0.1 (x)))) (increase (timer) (* #t 1))))
  (:event switch_on
    :parameters ()
    :precondition (and (not (heater_on)) (< (x) 19))
    :effect (heater_on))
  (:event switch_off
    :parameters ()
    :precondition (and (heater_on) (> (x) 21))
    :effect (not (heater_on))))
";

fn num(x: f64) -> String {
    fmt_f64_name(x)
}

fn tanks(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("tank{i}")).collect()
}

fn generator_problem(spec: &InstanceSpec, per_tank: f64, default_goal: f64) -> String {
    let ts = tanks(spec.n);
    let fuel = spec.init_fuel.unwrap_or(990.0);
    let cap = spec.capacity.unwrap_or(1000.0);
    let goal = spec.goal.unwrap_or(default_goal);
    let mut init: Vec<String> = ts.iter().map(|t| format!("(available {t})")).collect();
    if per_tank > 0.0 {
        init.extend(ts.iter().map(|t| format!("(= (tank_level {t}) {})", num(per_tank))));
    }
    init.push(format!("(= (fuel_level) {})", num(fuel)));
    init.push(format!("(= (capacity) {})", num(cap)));
    init.push("(= (generator_time) 0)".into());
    format!(
        "(define (problem run_{n})\n  (:domain generator)\n  (:objects {} - tank)\n  (:init {})\n  (:goal (= (generator_time) {})))\n",
        ts.join(" "),
        init.join("\n         "),
        num(goal),
        n = spec.n
    )
}

fn car_problem(k: usize, nonlinear: bool) -> String {
    let extra = if nonlinear { format!("(= (a) 0) (= (max_acc) {k}) (= (drag) 0.1)") } else { format!("(= (max_speed) {k})") };
    format!(
        "(define (problem drive_{k})\n  (:domain car)\n  (:init (running) (= (d) 0) (= (v) 0) {extra})\n  (:goal (and (= (d) 30) (= (v) 0))))\n"
    )
}

/// Steps needed by the chained refuel schedule: every refuel but the
/// first ends exactly when the next one starts.
fn generator_horizon(n: usize) -> usize {
    if n <= 1 {
        3
    } else {
        n + 3
    }
}

pub fn make_instance(spec: &InstanceSpec) -> Result<Instance, BenchError> {
    let (dom, prob, last_step, variant, hints, eps) = match spec.family {
        Family::GeneratorLinear => {
            if spec.n == 0 {
                return Err(BenchError::BadSize("generator_linear", "tank"));
            }
            let p = generator_problem(spec, 0.0, 980.0 + 20.0 * spec.n as f64);
            let hints = vec![("start(generate)".to_string(), 0)];
            (GENERATOR_LINEAR, p, generator_horizon(spec.n), Variant::Heuristic, hints, 1e-6)
        }
        Family::GeneratorNonlinear => {
            if spec.n == 0 {
                return Err(BenchError::BadSize("generator_nonlinear", "tank"));
            }
            let p = generator_problem(spec, 25.0, 975.0 + 25.0 * spec.n as f64);
            let hints = vec![("start(generate)".to_string(), 0)];
            (GENERATOR_NONLINEAR, p, generator_horizon(spec.n) + 1, Variant::Heuristic, hints, 1e-6)
        }
        Family::CarLinear => {
            if spec.n == 0 {
                return Err(BenchError::BadSize("car_linear", "unit of speed bound"));
            }
            (CAR_LINEAR, car_problem(spec.n, false), 2, Variant::Basic, vec![], 1e-6)
        }
        Family::CarNonlinear => {
            if spec.n == 0 {
                return Err(BenchError::BadSize("car_nonlinear", "unit of acceleration bound"));
            }
            // the goal speed is hit by a timepoint printed with three decimals
            (CAR_NONLINEAR, car_problem(spec.n, true), 4, Variant::Heuristic, vec![], 1e-2)
        }
        Family::Thermostat => {
            let p = "(define (problem room)\n  (:domain thermostat)\n  (:init (= (x) 20) (= (timer) 0))\n  (:goal (>= (timer) 0)))\n"
                .to_string();
            (THERMOSTAT, p, 3, Variant::Basic, vec![], 1e-6)
        }
    };
    let domain = parse_domain_named(&format!("{}.pddl", spec.family.name()), dom)?;
    let instance = parse_problem_named(&format!("{}_{}.pddl", spec.family.name(), spec.n), &prob, &domain)?;
    let task = ground_task(&instance);
    Ok(Instance {
        spec: spec.clone(),
        domain_text: dom.to_string(),
        problem_text: prob,
        instance,
        task,
        last_step,
        variant,
        hints,
        eps,
    })
}

/// The one-tank nonlinear generator with a small capacity, where refuelling
/// as soon as the tank is opened overfills the generator.
pub fn overfill_instance() -> Instance {
    let spec = InstanceSpec {
        family: Family::GeneratorNonlinear,
        n: 1,
        capacity: Some(100.0),
        init_fuel: Some(100.0),
        goal: Some(100.0),
    };
    let mut inst = make_instance(&spec).expect("built-in instance parses");
    inst.last_step = 4;
    inst
}

/// Plan text for [`overfill_instance`] that violates the capacity invariant.
pub const OVERFILL_CANDIDATE: &str = "0.000: generate [100.000]\n12.500: refuel(tank1) [12.500]\n";

/// Writes `<family>_<n>.pddl` and `<family>_<n>.prob.pddl` under `dir`.
pub fn write_instance(dir: &Path, inst: &Instance) -> Result<(PathBuf, PathBuf), BenchError> {
    let io = |p: &Path, e| BenchError::Io { path: p.display().to_string(), source: e };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let stem = format!("{}_{}", inst.spec.family.name(), inst.spec.n);
    let d = dir.join(format!("{stem}.pddl"));
    let p = dir.join(format!("{stem}.prob.pddl"));
    std::fs::write(&d, &inst.domain_text).map_err(|e| io(&d, e))?;
    std::fs::write(&p, &inst.problem_text).map_err(|e| io(&p, e))?;
    Ok((d, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::SchemaKind;

    #[test]
    fn every_family_parses_and_grounds() {
        for f in Family::ALL {
            let inst = make_instance(&InstanceSpec::new(f, 2)).unwrap();
            assert!(!inst.task.actions.is_empty(), "{}", f.name());
        }
    }

    #[test]
    fn generator_sizes() {
        let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 3)).unwrap();
        assert_eq!(inst.task.of_kind(SchemaKind::Durative).count(), 3);
        assert_eq!(inst.task.of_kind(SchemaKind::Process).count(), 1);
        assert_eq!(inst.last_step, 6);
        assert!(inst.problem_text.contains("(= (generator_time) 1040)"));
        assert!(make_instance(&InstanceSpec::new(Family::GeneratorLinear, 0)).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("boat".parse::<Family>().is_err());
    }
}
