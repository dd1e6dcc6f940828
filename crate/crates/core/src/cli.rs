//! Command-line front end. Exit codes: 0 plan found or plan valid, 1 no
//! plan or plan invalid, 2 usage or input errors, 3 search stopped early.

use crate::asp::{ground, GroundingContext};
use crate::benchmarks::{make_instance, overfill_instance, Family, Instance, InstanceSpec};
use crate::csp::{Csp, CspConfig};
use crate::encoder::{encode, EncodingConfig, Variant};
use crate::integrator::{plan_with_validation, Mode, Outcome, PlannerConfig, SolveReport};
use crate::pddl::{ground_task, parse_domain_named, parse_problem_named, GroundTask};
use crate::plan::Plan;
use crate::validator::{validate, ValidatorConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCOMPLETE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad instance `{0}`: expected family:n, family:a..b or overfill")]
    BadBuiltin(String),
    #[error("give either --builtin or both --domain and --problem")]
    NoInput,
    #[error("{0}")]
    Other(String),
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "hycasp", version, about = "Plan, validate and inspect PDDL+ tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// Built-in instance such as `generator_linear:1`, `car_nonlinear:3` or `overfill`.
    #[arg(long, conflicts_with_all = ["domain", "problem"])]
    pub builtin: Option<String>,
    #[arg(long, requires = "problem")]
    pub domain: Option<PathBuf>,
    #[arg(long, requires = "domain")]
    pub problem: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Cumulative,
}

#[derive(Args, Debug, Clone)]
pub struct SolveOpts {
    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,
    /// Last step in fixed mode, largest horizon in cumulative mode.
    #[arg(long)]
    pub steps: Option<usize>,
    /// basic, heuristic or estimator.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Tolerance of the numeric constraint checks.
    #[arg(long, env = "HYCASP_TOL")]
    pub tolerance: Option<f64>,
    /// Validation tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Timepoints per violated range.
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
    #[arg(long, env = "HYCASP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Search nodes per numeric subproblem.
    #[arg(long)]
    pub csp_budget: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Plan file to validate and repair before searching.
    #[arg(long)]
    pub seed_plan: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search for a plan and validate it.
    Plan {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: SolveOpts,
        /// Write the plan here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write outcome and statistics as JSON.
        #[arg(long)]
        stats_json: Option<PathBuf>,
        /// Write the final (expanded) program.
        #[arg(long)]
        dump_casp: Option<PathBuf>,
        /// Write the numeric constraints of the accepted candidate.
        #[arg(long)]
        dump_csp: Option<PathBuf>,
    },
    /// Check a plan against the continuous semantics.
    Validate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Print the program for a horizon.
    Encode {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Print the ground program for a horizon.
    Ground {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Solve built-in instances and print one row per instance.
    Bench {
        /// Instances such as `generator_linear:1..4` or `overfill`.
        #[arg(default_value = "generator_linear:1..4")]
        instances: Vec<String>,
        #[command(flatten)]
        solve: SolveOpts,
    },
}

/// A task plus the settings it should be solved with.
struct Loaded {
    name: String,
    task: GroundTask,
    instance: Option<Instance>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

/// Expands `family:n`, `family:a..b` and `overfill`.
pub fn parse_builtin(s: &str) -> Result<Vec<Instance>, CliError> {
    let bad = || CliError::BadBuiltin(s.to_string());
    if s == "overfill" {
        return Ok(vec![overfill_instance()]);
    }
    let (fam, size) = s.split_once(':').ok_or_else(bad)?;
    let family: Family = fam.parse().map_err(|_| bad())?;
    let (a, b) = match size.split_once("..") {
        Some((a, b)) => (a.parse::<usize>().map_err(|_| bad())?, b.parse::<usize>().map_err(|_| bad())?),
        None => {
            let n = size.parse::<usize>().map_err(|_| bad())?;
            (n, n)
        }
    };
    (a..=b).map(|n| make_instance(&InstanceSpec::new(family, n)).map_err(other)).collect()
}

fn load(input: &Input) -> Result<Loaded, CliError> {
    if let Some(b) = &input.builtin {
        let mut v = parse_builtin(b)?;
        if v.len() != 1 {
            return Err(CliError::BadBuiltin(b.clone()));
        }
        let inst = v.remove(0);
        return Ok(Loaded { name: b.clone(), task: inst.task.clone(), instance: Some(inst) });
    }
    let (Some(d), Some(p)) = (&input.domain, &input.problem) else {
        return Err(CliError::NoInput);
    };
    let dom = parse_domain_named(&d.display().to_string(), &read(d)?).map_err(other)?;
    let prob = parse_problem_named(&p.display().to_string(), &read(p)?, &dom).map_err(other)?;
    Ok(Loaded { name: p.display().to_string(), task: ground_task(&prob), instance: None })
}

fn base_config(l: &Loaded) -> PlannerConfig {
    match &l.instance {
        Some(i) => PlannerConfig::for_instance(i),
        None => PlannerConfig::default(),
    }
}

fn planner_config(l: &Loaded, o: &SolveOpts) -> Result<(PlannerConfig, Mode), CliError> {
    let mut cfg = base_config(l);
    if let Some(v) = o.variant {
        cfg.encoding.variant = v;
    }
    if let Some(t) = o.tolerance {
        if !(t > 0.0) {
            return Err(other("--tolerance must be positive"));
        }
        cfg.tol = t;
    }
    if let Some(e) = o.eps {
        if !(e > 0.0) {
            return Err(other("--eps must be positive"));
        }
        cfg.validator.eps = e;
    }
    if o.k == 0 || o.max_iter == 0 {
        return Err(other("-k and --max-iter must be positive"));
    }
    cfg.expansion.k = o.k;
    cfg.max_iterations = o.max_iter;
    cfg.seed = o.seed;
    if let Some(b) = o.csp_budget {
        cfg.csp_budget = b;
    }
    if let Some(t) = o.timeout {
        if !(t > 0.0) {
            return Err(other("--timeout must be positive"));
        }
        cfg.time_limit = Some(Duration::from_secs_f64(t));
    }
    if let Some(p) = &o.seed_plan {
        cfg.seed_plan = Some(Plan::parse(&read(p)?).map_err(other)?);
    }
    let steps = o.steps.unwrap_or(cfg.encoding.last_step);
    cfg.encoding.last_step = steps;
    let mode = match o.mode {
        ModeArg::Fixed => Mode::Fixed(steps),
        ModeArg::Cumulative => Mode::Cumulative(steps),
    };
    Ok((cfg, mode))
}

fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Plan(_) => "plan",
        Outcome::NoPlanAtHorizon => "no_plan_at_horizon",
        Outcome::Incomplete => "incomplete",
    }
}

fn exit_of(o: &Outcome) -> i32 {
    match o {
        Outcome::Plan(_) => EXIT_OK,
        Outcome::NoPlanAtHorizon => EXIT_NEGATIVE,
        Outcome::Incomplete => EXIT_INCOMPLETE,
    }
}

/// Outcome and statistics as `; key: value` lines, which plan readers skip.
pub fn stats_block(r: &SolveReport) -> String {
    let mut s = format!("; outcome: {}\n", outcome_name(&r.outcome));
    if let Some(h) = r.last_step {
        s.push_str(&format!("; last_step: {h}\n"));
    }
    for line in r.stats.to_string().lines() {
        s.push_str(&format!("; {line}\n"));
    }
    s
}

fn encoding(l: &Loaded, steps: Option<usize>, variant: Option<Variant>) -> EncodingConfig {
    let mut e = base_config(l).encoding;
    if let Some(s) = steps {
        e.last_step = s;
    }
    if let Some(v) = variant {
        e.variant = v;
    }
    e
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e: std::io::Error| CliError::Io { path: "<stdout>".into(), source: e };
    match cmd {
        Command::Plan { input, solve, out: path, stats_json, dump_casp, dump_csp } => {
            let l = load(&input)?;
            let (cfg, mode) = planner_config(&l, &solve)?;
            let r = plan_with_validation(&l.task, &cfg, mode).map_err(other)?;
            let listing = r.listing.as_ref().map(Plan::to_string).unwrap_or_default();
            match &path {
                Some(p) => write(p, &listing)?,
                None => out.write_all(listing.as_bytes()).map_err(io)?,
            }
            out.write_all(stats_block(&r).as_bytes()).map_err(io)?;
            writeln!(err, "; wall_secs: {:.3}", r.stats.wall_secs).map_err(io)?;
            if let Some(p) = stats_json {
                let v = serde_json::json!({
                    "instance": l.name,
                    "outcome": outcome_name(&r.outcome),
                    "last_step": r.last_step,
                    "plan": listing,
                    "stats": r.stats,
                });
                write(&p, &serde_json::to_string_pretty(&v).map_err(other)?)?;
            }
            if let Some(p) = dump_casp {
                write(&p, &r.program.dump())?;
            }
            if let Some(p) = dump_csp {
                let text = match &r.solution {
                    Some(s) => Csp::from_answer_set(&s.answer).map_err(other)?.dump(&CspConfig { tol: cfg.tol, ..CspConfig::default() }),
                    None => String::new(),
                };
                write(&p, &text)?;
            }
            Ok(exit_of(&r.outcome))
        }
        Command::Validate { input, plan, eps } => {
            let l = load(&input)?;
            let p = Plan::parse(&read(&plan)?).map_err(other)?;
            let mut cfg = base_config(&l).validator;
            if let Some(e) = eps {
                cfg = ValidatorConfig { eps: e, ..cfg };
            }
            let r = validate(&l.task, &p, &cfg).map_err(other)?;
            write!(out, "{r}").map_err(io)?;
            Ok(if r.is_valid() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Encode { input, steps, variant } => {
            let l = load(&input)?;
            let p = encode(&l.task, &encoding(&l, steps, variant)).map_err(other)?;
            out.write_all(p.dump().as_bytes()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Ground { input, steps, variant } => {
            let l = load(&input)?;
            let p = encode(&l.task, &encoding(&l, steps, variant)).map_err(other)?;
            let g = ground(&p, &GroundingContext::default()).map_err(other)?;
            out.write_all(g.dump().as_bytes()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Bench { instances, solve } => {
            let mut worst = EXIT_OK;
            writeln!(out, "{:<24} {:>5} {:<20} {:>9} {:>7} {:>7} {:>6}", "instance", "steps", "outcome", "secs", "models", "checks", "repairs")
                .map_err(io)?;
            for spec in &instances {
                for inst in parse_builtin(spec)? {
                    let name = if spec == "overfill" {
                        spec.clone()
                    } else {
                        format!("{}:{}", inst.spec.family.name(), inst.spec.n)
                    };
                    let l = Loaded { name: name.clone(), task: inst.task.clone(), instance: Some(inst) };
                    let (cfg, mode) = planner_config(&l, &solve)?;
                    let r = plan_with_validation(&l.task, &cfg, mode).map_err(other)?;
                    let steps = r.last_step.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
                    writeln!(
                        out,
                        "{:<24} {:>5} {:<20} {:>9.3} {:>7} {:>7} {:>6}",
                        name,
                        steps,
                        outcome_name(&r.outcome),
                        r.stats.wall_secs,
                        r.stats.answer_sets,
                        r.stats.validations,
                        r.stats.expansions
                    )
                    .map_err(io)?;
                    worst = worst.max(exit_of(&r.outcome));
                }
            }
            Ok(worst)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match run_command(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("hycasp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn plan_builtin_generator() {
        let (code, out, _) =
            call(&["plan", "--builtin", "generator_linear:1", "--mode", "fixed", "--steps", "3", "--variant", "heuristic"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("0.000: generate [1000.000]"), "{out}");
        assert!(out.contains("; outcome: plan"));
        // the printed text is itself a readable plan
        let p = Plan::parse(&out).unwrap();
        assert_eq!(p.steps.len(), 2);
    }

    #[test]
    fn too_short_horizon_has_no_plan() {
        let (code, out, _) = call(&["plan", "--builtin", "generator_linear:1", "--steps", "1"]);
        assert_eq!(code, 1, "{out}");
        assert!(out.contains("; outcome: no_plan_at_horizon"));
    }

    #[test]
    fn validate_overfill_candidate() {
        let dir = std::env::temp_dir().join(format!("hycasp-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let plan = dir.join("candidate.plan");
        std::fs::write(&plan, crate::benchmarks::OVERFILL_CANDIDATE).unwrap();
        let (code, out, _) = call(&["validate", "--builtin", "overfill", "--plan", plan.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(out.contains("in [18.750,25.000]"), "{out}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(call(&["plan"]).0, 2);
        assert_eq!(call(&["plan", "--builtin", "nope:1"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["plan", "--builtin", "generator_linear:1", "-k", "0"]).0, 2);
        let (code, _, err) = call(&["validate", "--domain", "/nonexistent/d.pddl", "--problem", "/nonexistent/p.pddl", "--plan", "x"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/d.pddl"));
    }

    #[test]
    fn builtin_ranges() {
        let v = parse_builtin("car_linear:2..4").unwrap();
        assert_eq!(v.iter().map(|i| i.spec.n).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(parse_builtin("car_linear").is_err());
    }

    #[test]
    fn encode_and_ground_dump_programs() {
        let (code, out, _) = call(&["encode", "--builtin", "generator_linear:1", "--steps", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("step(0..2)."), "{out}");
        let (code, out, _) = call(&["ground", "--builtin", "generator_linear:1", "--steps", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("step(2)."), "{out}");
    }
}
