//! The planning loop: answer sets are enumerated, their numeric
//! constraints solved, the resulting plans validated, and invariant
//! violations turned into program expansions until a plan validates.

use crate::asp::{ground, BlockSet, GroundError, GroundingContext, Solver};
use crate::benchmarks::Instance;
use crate::casp::{AnswerSet, Atom, CaspProgram, CaspSolution, GroundProgram, Term};
use crate::csp::{core_atoms, Csp, CspConfig, CspError, CspOutcome};
use crate::encoder::{action_of_term, encode, EncodeError, EncodingConfig};
use crate::expander::{expand, ExpandError, ExpansionConfig, Steps};
use crate::pddl::{GroundTask, SchemaKind};
use crate::plan::{Plan, PlanStep};
use crate::validator::{validate, Report, ValidateError, ValidatorConfig, ViolationKind};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error("occurrence {0} has no matching end")]
    UnmatchedStart(String),
    #[error("occurrence {0} has no matching start")]
    UnmatchedEnd(String),
    #[error("occurrence {0} does not name a ground action")]
    UnknownOccurrence(String),
    #[error("no value for {0} in the numeric solution")]
    MissingTime(String),
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub encoding: EncodingConfig,
    /// Tolerance of the numeric constraint checks.
    pub tol: f64,
    /// Search nodes the CSP solver may spend on one candidate.
    pub csp_budget: u64,
    pub validator: ValidatorConfig,
    pub expansion: ExpansionConfig,
    /// Candidates validated per horizon before giving up.
    pub max_iterations: usize,
    pub seed: u64,
    /// A plan to validate and repair before any search.
    pub seed_plan: Option<Plan>,
    pub time_limit: Option<Duration>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            encoding: EncodingConfig::default(),
            tol: 1e-6,
            csp_budget: 1000,
            validator: ValidatorConfig::default(),
            expansion: ExpansionConfig::default(),
            max_iterations: 20,
            seed: 0,
            seed_plan: None,
            time_limit: None,
        }
    }
}

impl PlannerConfig {
    /// Settings shipped with a benchmark instance.
    pub fn for_instance(inst: &Instance) -> PlannerConfig {
        PlannerConfig {
            encoding: EncodingConfig {
                last_step: inst.last_step,
                variant: inst.variant,
                hints: inst.hints.clone(),
                ..EncodingConfig::default()
            },
            validator: ValidatorConfig::with_eps(inst.eps),
            ..PlannerConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Fixed(usize),
    /// Horizons 1, 2, ... up to the bound.
    Cumulative(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Plan(Plan),
    NoPlanAtHorizon,
    /// The search stopped early: a numeric subproblem ran out of budget,
    /// the iteration bound was hit or the time limit passed.
    Incomplete,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub answer_sets: usize,
    pub csps_solved: usize,
    pub csps_infeasible: usize,
    pub csps_exhausted: usize,
    pub blocked: usize,
    pub nogoods: usize,
    pub validations: usize,
    pub expansions: usize,
    pub horizons: Vec<usize>,
    pub wall_secs: f64,
}

impl SolveStats {
    fn absorb(&mut self, o: &SolveStats) {
        self.answer_sets += o.answer_sets;
        self.csps_solved += o.csps_solved;
        self.csps_infeasible += o.csps_infeasible;
        self.csps_exhausted += o.csps_exhausted;
        self.blocked += o.blocked;
        self.nogoods += o.nogoods;
        self.validations += o.validations;
        self.expansions += o.expansions;
        self.horizons.extend(&o.horizons);
    }
}

impl fmt::Display for SolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "answer_sets: {}", self.answer_sets)?;
        writeln!(f, "csps_solved: {}", self.csps_solved)?;
        writeln!(f, "csps_infeasible: {}", self.csps_infeasible)?;
        writeln!(f, "csps_exhausted: {}", self.csps_exhausted)?;
        writeln!(f, "blocked: {}", self.blocked)?;
        writeln!(f, "nogoods: {}", self.nogoods)?;
        writeln!(f, "validations: {}", self.validations)?;
        writeln!(f, "expansions: {}", self.expansions)?;
        let hs: Vec<String> = self.horizons.iter().map(usize::to_string).collect();
        // wall time is left out so that reruns print identical blocks
        writeln!(f, "horizons: {}", hs.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: Outcome,
    /// The validated timeline including processes, as written to plan files.
    pub listing: Option<Plan>,
    pub solution: Option<CaspSolution>,
    pub last_step: Option<usize>,
    /// The program after all expansions of the last horizon tried.
    pub program: CaspProgram,
    pub stats: SolveStats,
}

impl SolveReport {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }
}

/// Answer-set enumeration interleaved with numeric solving over one
/// program, which may grow between calls.
pub struct Session {
    program: CaspProgram,
    ground: GroundProgram,
    solver: Solver,
    blocked: BlockSet,
    nogoods: Vec<Vec<(Atom, bool)>>,
    seed: u64,
    pub csp: CspConfig,
    pub stats: SolveStats,
    /// Set once some candidate could be neither solved nor refuted.
    pub incomplete: bool,
    deadline: Option<Instant>,
}

impl Session {
    pub fn new(program: CaspProgram, csp: CspConfig, seed: u64) -> Result<Session, IntegratorError> {
        let ground = ground(&program, &GroundingContext::default())?;
        let solver = Solver::new(&ground, seed);
        Ok(Session {
            program,
            ground,
            solver,
            blocked: BlockSet::new(),
            nogoods: Vec::new(),
            seed,
            csp,
            stats: SolveStats::default(),
            incomplete: false,
            deadline: None,
        })
    }

    pub fn program(&self) -> &CaspProgram {
        &self.program
    }
    pub fn ground_program(&self) -> &GroundProgram {
        &self.ground
    }

    pub fn set_deadline(&mut self, d: Option<Instant>) {
        self.deadline = d;
        self.solver.set_deadline(d);
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Forbids the occurrences of `a` from being proposed again.
    pub fn block(&mut self, a: &AnswerSet) {
        self.blocked.block(a);
        self.stats.blocked = self.blocked.len();
    }

    /// Grounds `p` and restarts the search, keeping blocked candidates and
    /// learned numeric conflicts.
    pub fn replace_program(&mut self, p: CaspProgram) -> Result<(), IntegratorError> {
        self.ground = ground(&p, &GroundingContext::default())?;
        self.program = p;
        self.solver = Solver::new(&self.ground, self.seed);
        self.solver.set_deadline(self.deadline);
        for n in &self.nogoods {
            self.solver.add_nogood(n);
        }
        Ok(())
    }

    /// The next answer set whose constraints have a solution. Answer sets
    /// with infeasible constraints are blocked, and an infeasible core
    /// becomes a nogood. `None` once enumeration is exhausted or time ran
    /// out; the latter also marks the session incomplete.
    pub fn find_casp_solution(&mut self) -> Result<Option<CaspSolution>, IntegratorError> {
        loop {
            if self.out_of_time() {
                self.incomplete = true;
                return Ok(None);
            }
            let Some(a) = self.solver.solve_next(&self.blocked) else {
                if self.solver.timed_out() {
                    self.incomplete = true;
                }
                return Ok(None);
            };
            self.stats.answer_sets += 1;
            let csp = Csp::from_answer_set(&a)?;
            let cfg = CspConfig { deadline: self.deadline, ..self.csp.clone() };
            match csp.solve(&cfg) {
                CspOutcome::Sat(alpha) => {
                    self.stats.csps_solved += 1;
                    return Ok(Some(CaspSolution { answer: a, alpha }));
                }
                CspOutcome::Infeasible { core } => {
                    self.stats.csps_infeasible += 1;
                    if let Some(core) = core {
                        let lits: Vec<(Atom, bool)> = core_atoms(&csp, &core).into_iter().map(|x| (x, true)).collect();
                        self.solver.add_nogood(&lits);
                        self.nogoods.push(lits);
                        self.stats.nogoods += 1;
                    }
                    self.block(&a);
                }
                CspOutcome::Exhausted => {
                    self.stats.csps_exhausted += 1;
                    self.incomplete = true;
                    self.block(&a);
                }
            }
        }
    }
}

fn time_of(s: &CaspSolution, step: i64) -> Result<f64, IntegratorError> {
    let t = Term::func("tend", vec![Term::int(step)]);
    s.value(&t).ok_or_else(|| IntegratorError::MissingTime(t.to_string()))
}

/// `α(tend(i))` for every step `i` the solution assigns.
pub fn step_ends(s: &CaspSolution) -> Steps {
    let mut ends = Vec::new();
    while let Ok(t) = time_of(s, ends.len() as i64) {
        ends.push(t);
    }
    Steps::new(ends)
}

/// The plan of a CASP solution and its full timeline. The plan holds the
/// controllable actions only; the timeline also lists the processes the
/// solution runs, which a validator needs to see the same behaviour.
pub fn extract_plan(task: &GroundTask, s: &CaspSolution) -> Result<(Plan, Plan), IntegratorError> {
    let mut starts: BTreeMap<Term, i64> = BTreeMap::new();
    let mut ends: BTreeMap<Term, i64> = BTreeMap::new();
    let mut instant: Vec<(Term, i64)> = Vec::new();
    for a in s.answer.iter().filter(|a| a.pred == "occurs" && !a.neg && a.args.len() == 2) {
        let step = a.args[1].as_int().ok_or_else(|| IntegratorError::UnknownOccurrence(a.to_string()))?;
        match a.args[0].functor() {
            Some(("start", [d])) => {
                starts.insert(d.clone(), step);
            }
            Some(("end", [d])) => {
                ends.insert(d.clone(), step);
            }
            _ => instant.push((a.args[0].clone(), step)),
        }
    }
    let mut plan = Vec::new();
    let mut listing = Vec::new();
    for (d, i1) in &starts {
        let i2 = ends.remove(d).ok_or_else(|| IntegratorError::UnmatchedStart(d.to_string()))?;
        let g = action_of_term(task, d).ok_or_else(|| IntegratorError::UnknownOccurrence(d.to_string()))?;
        let t1 = time_of(s, *i1)?;
        let st = PlanStep::new(t1, &g.name(), time_of(s, i2)? - t1);
        if g.kind == SchemaKind::Durative {
            plan.push(st.clone());
        }
        listing.push(st);
    }
    if let Some(d) = ends.keys().next() {
        return Err(IntegratorError::UnmatchedEnd(d.to_string()));
    }
    for (a, i) in instant {
        let g = action_of_term(task, &a).ok_or_else(|| IntegratorError::UnknownOccurrence(a.to_string()))?;
        if g.kind == SchemaKind::Action {
            let st = PlanStep::new(time_of(s, i)?, &g.name(), 0.0);
            plan.push(st.clone());
            listing.push(st);
        }
    }
    Ok((Plan::new(plan), Plan::new(listing)))
}

fn snap(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

/// Times and durations rounded to the millisecond grid of the plan format.
pub fn snapped(p: &Plan) -> Plan {
    Plan::new(
        p.steps
            .iter()
            .map(|s| {
                let t = snap(s.t);
                PlanStep::new(t, &s.name, snap((snap(s.end()) - t).max(0.0)))
            })
            .collect(),
    )
}

/// The steps of `listing` that are controllable actions.
pub fn controllable(task: &GroundTask, listing: &Plan) -> Plan {
    Plan::new(
        listing
            .steps
            .iter()
            .filter(|s| task.by_name(&s.name).is_some_and(|a| matches!(a.kind, SchemaKind::Durative | SchemaKind::Action)))
            .cloned()
            .collect(),
    )
}

/// What to do with a validated candidate.
enum Verdict {
    Accept(Plan),
    Repair(Report),
    Reject,
}

fn judge(task: &GroundTask, listing: &Plan, cfg: &ValidatorConfig) -> Result<(Verdict, Report), IntegratorError> {
    let exact = validate(task, listing, cfg)?;
    if exact.is_valid() {
        let grid = snapped(listing);
        if grid != *listing {
            let r = validate(task, &grid, cfg)?;
            if r.is_valid() {
                return Ok((Verdict::Accept(grid), r));
            }
        }
        return Ok((Verdict::Accept(listing.clone()), exact));
    }
    let repairable = exact.violations.iter().all(|v| v.kind == ViolationKind::Invariant && v.comparison().is_some());
    if repairable {
        Ok((Verdict::Repair(exact.clone()), exact))
    } else {
        Ok((Verdict::Reject, exact))
    }
}

struct Found {
    listing: Plan,
    solution: Option<CaspSolution>,
}

fn fixed(task: &GroundTask, cfg: &PlannerConfig, last_step: usize, deadline: Option<Instant>) -> Result<(Option<Found>, bool, Session), IntegratorError> {
    let enc = EncodingConfig { last_step, ..cfg.encoding.clone() };
    let program = encode(task, &enc)?;
    let csp = CspConfig { tol: cfg.tol, budget: cfg.csp_budget, ..CspConfig::default() };
    let mut session = Session::new(program, csp, cfg.seed)?;
    session.set_deadline(deadline);
    session.stats.horizons.push(last_step);
    let mut iterations = 0;

    if let Some(seed) = &cfg.seed_plan {
        iterations += 1;
        session.stats.validations += 1;
        let (verdict, report) = judge(task, seed, &cfg.validator)?;
        match verdict {
            Verdict::Accept(p) => return Ok((Some(Found { listing: p, solution: None }), false, session)),
            Verdict::Repair(r) => {
                let steps = Steps::new(report.step_times.clone());
                let (q, e) = expand(session.program(), task, &r.violations, &steps, &cfg.expansion)?;
                if !e.is_empty() {
                    session.stats.expansions += 1;
                    session.replace_program(q)?;
                }
            }
            Verdict::Reject => {}
        }
    }

    loop {
        let Some(sol) = session.find_casp_solution()? else {
            let incomplete = session.incomplete;
            return Ok((None, incomplete, session));
        };
        if iterations >= cfg.max_iterations {
            return Ok((None, true, session));
        }
        iterations += 1;
        session.stats.validations += 1;
        let (_, listing) = extract_plan(task, &sol)?;
        let (verdict, _) = judge(task, &listing, &cfg.validator)?;
        match verdict {
            Verdict::Accept(p) => return Ok((Some(Found { listing: p, solution: Some(sol) }), false, session)),
            Verdict::Repair(r) => {
                let steps = step_ends(&sol);
                let (q, e) = expand(session.program(), task, &r.violations, &steps, &cfg.expansion)?;
                if e.is_empty() {
                    // the same repair was already made: nothing new to learn
                    session.block(&sol.answer);
                } else {
                    session.stats.expansions += 1;
                    session.replace_program(q)?;
                }
            }
            Verdict::Reject => session.block(&sol.answer),
        }
    }
}

/// Plans for `task` in fixed or cumulative mode. A returned plan has been
/// validated.
pub fn plan_with_validation(task: &GroundTask, cfg: &PlannerConfig, mode: Mode) -> Result<SolveReport, IntegratorError> {
    let t0 = Instant::now();
    let deadline = cfg.time_limit.map(|d| t0 + d);
    let horizons: Vec<usize> = match mode {
        Mode::Fixed(l) => vec![l],
        Mode::Cumulative(max) => (1..=max).collect(),
    };
    let mut stats = SolveStats::default();
    let mut incomplete = false;
    let mut program = CaspProgram::new();
    for h in horizons {
        let (found, inc, session) = fixed(task, cfg, h, deadline)?;
        stats.absorb(&session.stats);
        incomplete |= inc;
        program = session.program;
        if let Some(f) = found {
            // never hand out a plan the validator has not accepted
            let r = validate(task, &f.listing, &cfg.validator)?;
            assert!(r.is_valid(), "accepted plan fails validation:\n{r}");
            stats.wall_secs = t0.elapsed().as_secs_f64();
            return Ok(SolveReport {
                outcome: Outcome::Plan(controllable(task, &f.listing)),
                listing: Some(f.listing),
                solution: f.solution,
                last_step: Some(h),
                program,
                stats,
            });
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            incomplete = true;
            break;
        }
    }
    stats.wall_secs = t0.elapsed().as_secs_f64();
    Ok(SolveReport {
        outcome: if incomplete { Outcome::Incomplete } else { Outcome::NoPlanAtHorizon },
        listing: None,
        solution: None,
        last_step: None,
        program,
        stats,
    })
}

#[cfg(test)]
mod tests;
