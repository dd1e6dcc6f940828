//! Validates a plan against the continuous semantics and prints the
//! violations and a sampled fuel trajectory.

use hycasp::benchmarks::{overfill_instance, OVERFILL_CANDIDATE};
use hycasp::pddl::FluentRef;
use hycasp::plan::Plan;
use hycasp::validator::{validate, ValidatorConfig};

fn main() {
    let inst = overfill_instance();
    let plan = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    print!("plan:\n{plan}");
    let r = validate(&inst.task, &plan, &ValidatorConfig::default()).unwrap();
    print!("{r}");
    let fuel = FluentRef::new("fuel_level", &[]);
    for i in 0..=10 {
        let t = 12.5 + 1.25 * i as f64;
        println!("  fuel({t:>6.3}) = {:.4}", r.trajectory.value(&fuel, t).unwrap());
    }
}
