//! Writes every benchmark family as PDDL+ files into a directory (default
//! `./instances`) and prints a reference trajectory for a known plan.

use hycasp::benchmarks::{make_instance, reference_trajectory, write_instance, Family, InstanceSpec};
use hycasp::plan::Plan;
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "instances".into()));
    for f in Family::ALL {
        for n in 1..=2 {
            let inst = make_instance(&InstanceSpec::new(f, n)).unwrap();
            let (d, p) = write_instance(&dir, &inst).unwrap();
            println!("{} {}", d.display(), p.display());
        }
    }
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let plan = Plan::parse("0: generate [1000]\n0: refuel(tank1) [10]\n").unwrap();
    let oracle = reference_trajectory(&inst, &plan);
    for t in [0.0, 5.0, 10.0, 500.0, 1000.0] {
        println!("fuel_level({t}) = {}", oracle.value("fuel_level", t).unwrap());
    }
}
