//! Running every obligation over a registry, bottom-up.

use super::checks::{check_layer, CheckSet, KINDS};
use super::contextual::{check_contextual_refinement, programs_for};
use super::generator::{calls_for, Domain, StateGenerator};
use super::verdict::{CheckKind, Counterexample, HarnessError, Status, Verdict};
use crate::driver_stack::{LayerSpec, Module, Registry, Stack};
use crate::par::ExecMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenChoice {
    /// Shipped exhaustive bounds.
    Exhaustive,
    Random { seed: u64, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Cap on samples per check.
    pub budget: Option<u64>,
    pub mode: ExecMode,
    pub generator: GenChoice,
    /// Stop a layer at its first counterexample; unfinished checks are
    /// reported as skipped.
    pub fail_fast: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: None,
            mode: ExecMode::Parallel,
            generator: GenChoice::Exhaustive,
            fail_fast: false,
        }
    }
}

impl RunOptions {
    pub fn generator_for(&self, module: Module) -> StateGenerator {
        let domain = Domain::for_module(module);
        match self.generator {
            GenChoice::Exhaustive => StateGenerator::Exhaustive(domain),
            GenChoice::Random { seed, count } => StateGenerator::Random { seed, count, domain },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub layer: String,
    pub check: CheckKind,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub registry: String,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.verdict.status == Status::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.records.iter().any(|r| r.verdict.status == Status::Fail)
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &Counterexample> {
        self.records.iter().filter_map(|r| r.verdict.counterexample.as_ref())
    }

    /// `LAYER<TAB>CHECK<TAB>STATUS<TAB>STATES_TESTED`, one line per record.
    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|r| format!("{}\t{}\t{}\t{}\n", r.layer, r.check, r.verdict.status, r.verdict.states_tested))
            .collect()
    }
}

fn record(layer: &str, check: CheckKind, verdict: Verdict) -> CheckRecord {
    CheckRecord { layer: layer.to_string(), check, verdict }
}

/// Per stack, bottom-up: the three per-layer checks, then linking with the
/// layer below. Once a layer fails, everything above it in that stack is
/// skipped, since each layer's proof assumes the one below.
pub fn run_all(reg: &Registry, opts: &RunOptions) -> Result<Report, HarnessError> {
    run_all_reusing(reg, opts, None)
}

/// A baseline report and the predicate selecting layers whose records it
/// supplies.
pub type Reuse<'a> = (&'a Report, &'a dyn Fn(&LayerSpec) -> bool);

/// As [`run_all`], but layers for which `reuse` returns true take their
/// records from `baseline` instead of being re-checked. Used when `reg`
/// differs from the baseline's registry only above those layers.
pub fn run_all_reusing(
    reg: &Registry,
    opts: &RunOptions,
    baseline: Option<Reuse<'_>>,
) -> Result<Report, HarnessError> {
    reg.validate()?;
    let mut records = Vec::new();
    for stack in [Stack::Spi, Stack::I2c] {
        let mut broken = false;
        for layer in reg.stack(stack) {
            let kinds = KINDS.iter().copied().chain([CheckKind::Contextual]);
            if broken {
                records.extend(kinds.map(|k| record(layer.name, k, Verdict::skipped())));
                continue;
            }
            if let Some((base, reuse)) = baseline {
                let old: Vec<_> = base.records.iter().filter(|r| r.layer == layer.name).cloned().collect();
                if reuse(layer) && old.len() == 4 {
                    broken = old.iter().any(|r| r.verdict.status != Status::Pass);
                    records.extend(old);
                    continue;
                }
            }
            let gen = opts.generator_for(layer.module);
            let calls = calls_for(layer.module);
            let verdicts = check_layer(reg, layer, &gen, &calls, CheckSet::ALL, opts.budget, opts.fail_fast, opts.mode)?;
            for (k, v) in KINDS.iter().zip(verdicts) {
                records.push(record(layer.name, *k, v.expect("all checks enabled")));
            }
            let layer_failed = records.iter().rev().take(3).any(|r| r.verdict.status != Status::Pass);
            let ctx = if opts.fail_fast && layer_failed {
                Verdict::skipped()
            } else {
                let programs = programs_for(layer.module);
                check_contextual_refinement(reg, layer, &programs, &gen, opts.budget, opts.mode)?
            };
            records.push(record(layer.name, CheckKind::Contextual, ctx));
            broken = records.iter().rev().take(4).any(|r| r.verdict.status != Status::Pass);
        }
    }
    Ok(Report { registry: reg.name.clone(), records })
}
