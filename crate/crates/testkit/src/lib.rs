//! Test support for agrmc: seeded random specifications and oracles that
//! share no code with the engines they check.
//!
//! * [`gen`] builds small random module systems and objectives,
//! * [`oracle`] enumerates every uniform memoryless strategy,
//! * [`coverage`] checks that target-plus-assumption covers the paths of
//!   the full system.

pub mod coverage;
pub mod gen;
pub mod oracle;

pub use coverage::{simulation_check, trace_inclusion, CoverageError};
pub use gen::{corpus, random_agr_case, random_case, Case};
pub use oracle::{brute_force, Oracle};
