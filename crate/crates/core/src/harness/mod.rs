//! Bounded checking of the driver stack's obligations: high spec refined
//! by low spec, implementation matching low spec, invariant preservation,
//! and contextual refinement across adjacent layers.

pub mod bounded;
pub mod checks;
pub mod contextual;
pub mod generator;
pub mod mutants;
pub mod replay;
pub mod report;
pub mod verdict;

pub use checks::{check_impl_against_lowspec, check_invariant_preservation, check_refinement};
pub use contextual::{check_contextual_refinement, TestProgram};
pub use generator::{Domain, EventBounds, StateGenerator};
pub use report::{run_all, CheckRecord, GenChoice, Report, RunOptions};
pub use verdict::{CheckKind, Clause, Counterexample, HarnessError, Outcome, Status, Verdict};
