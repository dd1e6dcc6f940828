//! Prints the constraint answer set program of the linear generator with
//! one tank, for a chosen horizon (default 3).

use hycasp::benchmarks::{make_instance, Family, InstanceSpec};
use hycasp::encoder::{encode, EncodingConfig, Variant};

fn main() {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let inst = make_instance(&InstanceSpec::new(Family::GeneratorLinear, 1)).unwrap();
    let cfg = EncodingConfig { last_step: steps, variant: Variant::Heuristic, ..EncodingConfig::default() };
    let p = encode(&inst.task, &cfg).unwrap();
    print!("{}", p.dump());
    eprintln!("{} rules", p.rules.len());
}
