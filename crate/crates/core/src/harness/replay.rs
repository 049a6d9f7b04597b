//! Re-executing a stored counterexample.

use super::checks::eval_sample;
use super::checks::CheckSet;
use super::contextual::contextual_outcome;
use super::contextual::TestProgram;
use super::mutants::registry_by_name;
use super::report::Report;
use super::verdict::{CheckKind, Clause, Counterexample, Outcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReplayStatus {
    /// The same clause is violated again.
    Confirmed { clause: Clause, detail: String },
    NotReproduced { got: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("unknown registry `{0}`")]
    UnknownRegistry(String),
    #[error("registry has no layer `{0}`")]
    UnknownLayer(String),
    #[error("counterexample has no steps")]
    NoSteps,
    #[error("no counterexample in file")]
    NoCounterexample,
    #[error("cannot parse replay file: {0}")]
    Parse(String),
    #[error("{0}")]
    Harness(String),
}

pub fn replay(c: &Counterexample) -> Result<ReplayStatus, ReplayError> {
    let reg = registry_by_name(&c.registry, c.config)
        .ok_or_else(|| ReplayError::UnknownRegistry(c.registry.clone()))?;
    let layer = reg
        .layer_by_name(&c.layer)
        .ok_or_else(|| ReplayError::UnknownLayer(c.layer.clone()))?;
    let outcome = match c.check {
        CheckKind::Contextual => {
            contextual_outcome(&reg, layer, &TestProgram::new(c.steps.clone()), &c.state)
        }
        kind => {
            let call = c.steps.first().ok_or(ReplayError::NoSteps)?;
            let set = CheckSet {
                refinement: kind == CheckKind::Refinement,
                impl_lowspec: kind == CheckKind::ImplLowspec,
                invariant: kind == CheckKind::Invariant,
            };
            let outs = eval_sample(&reg, layer, set, call, &c.state, &c.memory)
                .map_err(|e| ReplayError::Harness(e.to_string()))?;
            outs.into_iter().flatten().next().ok_or(ReplayError::NoSteps)?
        }
    };
    Ok(match outcome {
        Outcome::Violation(clause, detail) if clause == c.clause => {
            ReplayStatus::Confirmed { clause, detail }
        }
        other => ReplayStatus::NotReproduced { got: format!("{other:?}") },
    })
}

/// A replay file holds either one counterexample or a whole report.
pub fn load_counterexamples(text: &str) -> Result<Vec<Counterexample>, ReplayError> {
    if let Ok(c) = serde_json::from_str::<Counterexample>(text) {
        return Ok(vec![c]);
    }
    let report: Report = serde_json::from_str(text).map_err(|e| ReplayError::Parse(e.to_string()))?;
    let cs: Vec<_> = report.counterexamples().cloned().collect();
    if cs.is_empty() {
        Err(ReplayError::NoCounterexample)
    } else {
        Ok(cs)
    }
}
