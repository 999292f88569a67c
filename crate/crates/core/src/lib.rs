//! Explicit-state model checking of strategic abilities in asynchronous
//! multi-agent systems.
//!
//! The crate is `no_std` and only needs an allocator. It covers the whole
//! pipeline from the textual module language to verdicts:
//!
//! * [`parser`] / [`printer`] / [`validate`]: the specification language,
//! * [`model`] / [`voting`]: local module semantics and the Simple Voting
//!   benchmark family,
//! * [`compose`]: the interleaving product and agent views,
//! * [`assume`]: communication distance and automatic assumptions,
//! * [`strategy`] / [`synth`] / [`approx`]: uniform memoryless strategies,
//!   outcome checking, depth-first synthesis and fixpoint approximation,
//! * [`agr`]: the assume-guarantee workflow and its monolithic counterpart.
//!
//! IO, serialization, the CLI and the HTTP service live in the `agrmc`
//! companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agr;
pub mod approx;
pub mod assume;
pub mod compose;
mod error;
pub mod formula;
pub mod model;
pub mod parser;
pub mod printer;
pub mod spec;
pub mod strategy;
pub mod synth;
pub mod validate;
pub mod voting;

pub use agr::{verify_agr, verify_monolithic, AgrOptions, AgrReport, Engine};
pub use approx::fixpoint_approx;
pub use assume::{close_modules, communication_distance, generate_assumption, quotient_reduce, Assumption};
pub use compose::{compose, compose_with, GlobalModel, Limits, View};
pub use error::{Error, Resource, Result};
pub use formula::{Formula, Predicate, Temporal};
pub use parser::{parse_formula, parse_spec};
pub use printer::{print_module, print_spec};
pub use spec::{Constraint, GroupDecl, Guard, InputVar, ModuleDecl, SpecDocument, StateDecl, TransitionDecl, VarDecl};
pub use strategy::{check_strategy, Answer, Strategy, Verdict};
pub use synth::dfs_synthesize;
pub use validate::{validate_spec, ValidationReport};
pub use voting::generate_simple_voting;

/// Name of the synthetic self-loop added when a module has no enabled move.
pub const STUTTER: &str = "stutter";
