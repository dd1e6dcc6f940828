//! Lists the answer sets of a small constraint program together with the
//! numeric constraints each one activates, and rejects a non-model.

use hycasp::asp::{enumerate, ground, GroundingContext};
use hycasp::casp::{gamma, is_answer_set, parse_program, AnswerSet, Atom};

fn main() {
    let p = parse_program(
        "cspvar(x).
         1{fast; slow}1.
         required(x >= 10) :- fast.
         required(x <= 3) :- slow.",
    )
    .unwrap();
    print!("{}", p.dump());
    let g = ground(&p, &GroundingContext::default()).unwrap();
    for a in enumerate(&g, 0) {
        let shown: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        println!("\nanswer set {{{}}}", shown.join(", "));
        for c in gamma(&a) {
            println!("  activates {c}");
        }
    }
    let both: AnswerSet = [Atom::new("fast", vec![]), Atom::new("slow", vec![])].into_iter().collect();
    println!("\n{{fast, slow}} is an answer set: {}", is_answer_set(&g, &both));
}
