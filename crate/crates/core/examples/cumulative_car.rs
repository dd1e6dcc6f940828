//! Searches the nonlinear car domain with growing horizons and reports the
//! first one that admits a valid plan.

use hycasp::benchmarks::{make_instance, Family, InstanceSpec};
use hycasp::integrator::{plan_with_validation, Mode, PlannerConfig};

fn main() {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let inst = make_instance(&InstanceSpec::new(Family::CarNonlinear, k)).unwrap();
    let cfg = PlannerConfig::for_instance(&inst);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Cumulative(6)).unwrap();
    println!("horizon {:?}, {} answer sets", r.last_step, r.stats.answer_sets);
    if let Some(l) = &r.listing {
        print!("{l}");
    }
}
