//! Solves a linear and a nonlinear constraint system through the numeric
//! solver, the way candidate answer sets are checked during planning.

use hycasp::asp::{enumerate, ground, GroundingContext};
use hycasp::casp::parse_program;
use hycasp::csp::{Csp, CspConfig, CspOutcome};

fn solve(text: &str) {
    let g = ground(&parse_program(text).unwrap(), &GroundingContext::default()).unwrap();
    let a = enumerate(&g, 0).remove(0);
    let csp = Csp::from_answer_set(&a).unwrap();
    print!("{}", csp.dump(&CspConfig::default()));
    match csp.solve(&CspConfig::default()) {
        CspOutcome::Sat(alpha) => {
            for (v, x) in &alpha {
                println!("  {v} = {x:.6}");
            }
            assert!(csp.check(&alpha, 1e-6));
        }
        o => println!("  {o:?}"),
    }
    println!();
}

fn main() {
    solve("cspvar(x). cspvar(y). required(x + 2*y <= 14). required(3*x - y >= 0). required(x - y <= 2). required(y >= 1).");
    solve("cspvar(t). required(4*t - 0.16*sq(t) = 18.75). required(t >= 0). required(t <= 12.5).");
    solve("cspvar(d). required(ric_v(1,-0.1,0,d) >= 2.5). required(d >= 0). required(d <= 20).");
    solve("cspvar(x). required(x > 1). required(x < 1).");
}
