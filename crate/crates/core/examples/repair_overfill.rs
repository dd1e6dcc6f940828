//! Expands the program at the violated range of the overfilling candidate,
//! then plans again from the repaired program.

use hycasp::benchmarks::{overfill_instance, OVERFILL_CANDIDATE};
use hycasp::encoder::encode;
use hycasp::expander::{expand, ExpansionConfig, Steps};
use hycasp::integrator::{plan_with_validation, Mode, PlannerConfig};
use hycasp::plan::Plan;
use hycasp::validator::validate;

fn main() {
    let inst = overfill_instance();
    let mut cfg = PlannerConfig::for_instance(&inst);
    let candidate = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    let report = validate(&inst.task, &candidate, &cfg.validator).unwrap();
    print!("{report}");

    let p = encode(&inst.task, &cfg.encoding).unwrap();
    let steps = Steps::new(report.step_times.clone());
    let (_, e) = expand(&p, &inst.task, &report.violations, &steps, &ExpansionConfig::default()).unwrap();
    for d in &e.deltas {
        print!("{d}");
    }

    cfg.seed_plan = Some(candidate);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Fixed(inst.last_step)).unwrap();
    println!("\nrepaired:");
    print!("{}", r.listing.unwrap());
    print!("{}", r.stats);
}
