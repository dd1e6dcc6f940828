//! Hybrid planning for PDDL+ through constraint answer set programming.
//!
//! A domain and problem are parsed and grounded ([`pddl`]), translated into
//! a CASP program ([`encoder`]) and solved by alternating answer-set search
//! ([`asp`]) with numeric constraint solving ([`csp`]). Candidate plans are
//! checked by a continuous-time [`validator`]; invariant violations are fed
//! back as new constraints by the [`expander`]. The [`integrator`] runs the
//! loop.

pub mod asp;
pub mod benchmarks;
pub mod casp;
pub mod cli;
pub mod csp;
pub mod encoder;
pub mod expander;
pub mod integrator;
pub mod num;
pub mod pddl;
pub mod plan;
pub mod rel;
pub mod validator;
