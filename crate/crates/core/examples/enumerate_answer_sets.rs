//! Grounds a program with choices and defaults and lists all answer sets.

use hycasp::asp::{enumerate, ground, GroundingContext};
use hycasp::casp::parse_program;

fn main() {
    let p = parse_program(
        "item(1..3).
         1{pick(I) : item(I)}2.
         bad :- pick(1), pick(3).
         :- bad.
         spare(I) :- item(I), not pick(I).",
    )
    .unwrap();
    let g = ground(&p, &GroundingContext::default()).unwrap();
    println!("{} ground rules", g.rules.len());
    for (i, a) in enumerate(&g, 0).iter().enumerate() {
        let shown: Vec<String> = a.iter().filter(|x| x.pred == "pick").map(|x| x.to_string()).collect();
        println!("answer {}: {}", i + 1, shown.join(" "));
    }
}
