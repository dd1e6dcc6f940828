mod common;

use common::max_gap;
use hycasp::benchmarks::{make_instance, overfill_instance, Family, Instance, InstanceSpec, OVERFILL_CANDIDATE};
use hycasp::integrator::{plan_with_validation, Mode, PlannerConfig};
use hycasp::plan::Plan;
use hycasp::validator::{validate, ValidatorConfig};

/// Validates the full listing, processes included, and measures it against integration.
fn check(inst: &Instance, listing: &Plan) -> f64 {
    let r = validate(&inst.task, listing, &ValidatorConfig::with_eps(inst.eps)).unwrap();
    assert!(r.is_valid() || listing.to_string() == OVERFILL_CANDIDATE, "{r}");
    max_gap(inst, listing, &r.trajectory, 1e-4)
}

fn planned(family: Family, n: usize) -> (Instance, Plan) {
    let inst = make_instance(&InstanceSpec::new(family, n)).unwrap();
    let cfg = PlannerConfig::for_instance(&inst);
    let r = plan_with_validation(&inst.task, &cfg, Mode::Fixed(inst.last_step)).unwrap();
    assert!(r.plan().is_some(), "{family:?} {n}: {:?}", r.outcome);
    (inst, r.listing.clone().unwrap())
}

#[test]
fn generator_trajectories_match_integration() {
    for n in 1..=2 {
        let (inst, listing) = planned(Family::GeneratorLinear, n);
        let gap = check(&inst, &listing);
        assert!(gap < 1e-5, "n={n}: {gap}");
    }
}

#[test]
fn car_trajectories_match_integration() {
    for family in [Family::CarLinear, Family::CarNonlinear] {
        for k in 1..=3 {
            let (inst, listing) = planned(family, k);
            let gap = check(&inst, &listing);
            assert!(gap < 1e-5, "{family:?} k={k}: {gap}");
        }
    }
}

#[test]
fn nonlinear_tank_trajectory_matches_integration() {
    let inst = overfill_instance();
    let candidate = Plan::parse(OVERFILL_CANDIDATE).unwrap();
    let gap = check(&inst, &candidate);
    assert!(gap < 1e-5, "{gap}");
}

