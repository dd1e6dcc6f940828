//! Parses a PDDL+ domain and problem, grounds them and prints the result.

use hycasp::pddl::{ground_task, parse_domain, parse_problem, print_domain};

const DOMAIN: &str = "(define (domain tank)
  (:requirements :fluents :durative-actions :processes)
  (:functions (level))
  (:process leak
    :parameters ()
    :precondition (> (level) 0)
    :effect (decrease (level) (* #t 0.5)))
  (:durative-action fill
    :parameters ()
    :duration (= ?duration 4)
    :condition (over all (<= (level) 10))
    :effect (increase (level) (* #t 2))))";

const PROBLEM: &str = "(define (problem t1) (:domain tank)
  (:init (= (level) 1))
  (:goal (>= (level) 5)))";

fn main() {
    let domain = parse_domain(DOMAIN).expect("domain parses");
    let problem = parse_problem(PROBLEM, &domain).expect("problem parses");
    print!("{}", print_domain(&domain));
    let task = ground_task(&problem);
    println!("\nground happenings:");
    for a in &task.actions {
        println!("  {} {}", a.kind.keyword(), a.name());
    }
    println!("numeric fluents: {:?}", task.fluents.iter().map(|f| f.to_string()).collect::<Vec<_>>());
}
