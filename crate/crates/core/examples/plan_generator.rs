//! Plans the linear generator with a number of tanks given on the command
//! line (default 2) and prints the validated timeline.

use hycasp::benchmarks::{make_instance, Family, InstanceSpec};
use hycasp::integrator::{plan_with_validation, Mode, PlannerConfig};

fn main() {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, n)).unwrap();
    let cfg = PlannerConfig::for_instance(&inst);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Fixed(inst.last_step)).unwrap();
    match r.listing {
        Some(l) => print!("{l}"),
        None => println!("{:?}", r.outcome),
    }
    print!("{}", r.stats);
}
