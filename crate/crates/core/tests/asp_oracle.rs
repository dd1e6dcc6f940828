mod common;

use common::{as_ground, brute_force, random_program};
use hycasp::asp::{enumerate, ground, GroundingContext};
use hycasp::casp::{parse_program, AnswerSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn solver_sets(text: &str, seed: u64) -> BTreeSet<AnswerSet> {
    let g = ground(&parse_program(text).unwrap(), &GroundingContext::default()).unwrap();
    let all = enumerate(&g, seed);
    let set: BTreeSet<AnswerSet> = all.iter().cloned().collect();
    assert_eq!(set.len(), all.len(), "duplicate answer sets for\n{text}");
    set
}

#[test]
fn enumeration_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..150 {
        let (text, n) = random_program(&mut rng, 12);
        let want = brute_force(&as_ground(&text), n);
        assert_eq!(solver_sets(&text, i), want, "program {i}:\n{text}");
    }
}

#[test]
fn solver_order_seed_does_not_change_the_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let (text, _) = random_program(&mut rng, 8);
        assert_eq!(solver_sets(&text, 1), solver_sets(&text, 99), "{text}");
    }
}

#[test]
fn classic_programs() {
    let cases: &[(&str, usize, usize)] = &[
        ("a0 :- not a1. a1 :- not a0.", 2, 2),
        ("a0 :- not a0.", 1, 0),
        ("a0 :- a1. a1 :- a0.", 2, 1),
        ("{a0; a1; a2}.", 3, 8),
        ("1{a0; a1; a2}1.", 3, 3),
        ("{a0; a1}. :- a0, a1. :- not a0, not a1.", 2, 2),
    ];
    for (text, n, count) in cases {
        let want = brute_force(&as_ground(text), *n);
        assert_eq!(want.len(), *count, "{text}");
        assert_eq!(solver_sets(text, 0), want, "{text}");
    }
}
