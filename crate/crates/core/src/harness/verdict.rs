//! Verdicts, counterexamples and harness errors.

use crate::driver_stack::{AbstractState, Call, DriverConfig, MemoryState};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    Refinement,
    ImplLowspec,
    Invariant,
    Contextual,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Refinement => "refinement",
            CheckKind::ImplLowspec => "impl_lowspec",
            CheckKind::Invariant => "invariant",
            CheckKind::Contextual => "contextual",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    /// The premise never held on any generated state.
    Undefined,
    /// Not run because a layer below failed.
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Undefined => "UNDEFINED",
            Status::Skipped => "SKIPPED",
        })
    }
}

/// The clause of an obligation that a counterexample violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    /// High spec defined, low spec not.
    LowUndefined,
    ReturnMismatch,
    /// `a' ∼ m'` does not hold.
    RelationBroken,
    /// Bus registers, logs or clock of the two results differ.
    UnderlayMismatch,
    /// The implementation failed where the low spec is defined.
    ImplError,
    ImplStateMismatch,
    InvariantBroken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub registry: String,
    pub config: DriverConfig,
    pub layer: String,
    pub check: CheckKind,
    /// One call for per-layer checks, the whole program for contextual ones.
    pub steps: Vec<Call>,
    pub state: AbstractState,
    pub memory: MemoryState,
    pub clause: Clause,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Samples on which the premise held.
    pub states_tested: u64,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn skipped() -> Self {
        Verdict { status: Status::Skipped, states_tested: 0, counterexample: None }
    }

    pub fn from_run(tested: u64, cex: Option<Counterexample>) -> Self {
        let status = match (&cex, tested) {
            (Some(_), _) => Status::Fail,
            (None, 0) => Status::Undefined,
            (None, _) => Status::Pass,
        };
        Verdict { status, states_tested: tested, counterexample: cex }
    }
}

/// Result of evaluating one obligation on one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Premise does not hold; the sample says nothing.
    Skip,
    Hold,
    Violation(Clause, String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("{layer}: specification is not deterministic on {call:?}")]
    NonDeterministic { layer: String, call: Call },
    #[error("program step {call:?} is not in the interface of {layer}")]
    UnknownCall { layer: String, call: Call },
    #[error("no layer named {0}")]
    UnknownLayer(String),
    #[error(transparent)]
    Registry(#[from] crate::driver_stack::RegistryError),
}
