//! Per-layer obligations: refinement of the high spec by the low spec,
//! implementation against low spec, and invariant preservation.

use super::generator::{calls_for, Sampler, StateGenerator};
use super::verdict::{CheckKind, Clause, Counterexample, HarnessError, Outcome, Verdict};
use crate::driver_stack::{AbstractState, Call, LayerSpec, Machine, MemoryState, Registry, Resolve};
use crate::par::{self, ExecMode};

/// Which of the three per-layer checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSet {
    pub refinement: bool,
    pub impl_lowspec: bool,
    pub invariant: bool,
}

impl CheckSet {
    pub const ALL: CheckSet = CheckSet { refinement: true, impl_lowspec: true, invariant: true };

    fn only(kind: CheckKind) -> Self {
        CheckSet {
            refinement: kind == CheckKind::Refinement,
            impl_lowspec: kind == CheckKind::ImplLowspec,
            invariant: kind == CheckKind::Invariant,
        }
    }
}

type HighOut = Option<(AbstractState, crate::driver_stack::Ret)>;
type LowOut = Option<(MemoryState, AbstractState, crate::driver_stack::Ret)>;

fn nondet(layer: &LayerSpec, call: &Call) -> HarnessError {
    HarnessError::NonDeterministic { layer: layer.name.to_string(), call: *call }
}

/// Evaluate both specifications twice; they are required to be functions.
fn eval_specs(
    reg: &Registry,
    layer: &LayerSpec,
    call: &Call,
    a: &AbstractState,
    m: &MemoryState,
) -> Result<(HighOut, LowOut), HarnessError> {
    let cfg = &reg.config;
    let high = (layer.high)(cfg, call, a);
    if high != (layer.high)(cfg, call, a) {
        return Err(nondet(layer, call));
    }
    let low = (layer.low)(cfg, call, m, a);
    if low != (layer.low)(cfg, call, m, a) {
        return Err(nondet(layer, call));
    }
    Ok((high, low))
}

/// `(a →high a') ∧ a ∼ m  ⇒  m →low m' ∧ a' ∼ m'`, with the low spec's
/// abstract component agreeing with `a'` below the driver.
pub fn refinement_outcome(layer: &LayerSpec, a: &AbstractState, m: &MemoryState, high: &HighOut, low: &LowOut) -> Outcome {
    if !(layer.relation)(a, m) {
        return Outcome::Skip;
    }
    let Some((a1, r1)) = high else { return Outcome::Skip };
    let Some((m2, a2, r2)) = low else {
        return Outcome::Violation(Clause::LowUndefined, "low spec undefined".into());
    };
    if r1 != r2 {
        return Outcome::Violation(Clause::ReturnMismatch, format!("high returned {r1:?}, low returned {r2:?}"));
    }
    if !(layer.relation)(a1, m2) {
        let diff = a1.mirror().diff(m2);
        return Outcome::Violation(Clause::RelationBroken, format!("cells (addr, expected, got): {diff:x?}"));
    }
    if !a2.underlay_eq(a1) {
        return Outcome::Violation(Clause::UnderlayMismatch, "bus state of low result differs".into());
    }
    Outcome::Hold
}

pub fn impl_outcome(reg: &Registry, layer: &LayerSpec, call: &Call, a: &AbstractState, m: &MemoryState, low: &LowOut) -> Outcome {
    let Some((m2, a2, r2)) = low else { return Outcome::Skip };
    let mut mc = Machine::new(reg, a.clone(), m.clone(), Resolve::Linked(layer.module));
    match mc.exec(*call) {
        Err(e) => Outcome::Violation(Clause::ImplError, e.to_string()),
        Ok(r) if r != *r2 => {
            Outcome::Violation(Clause::ReturnMismatch, format!("impl returned {r:?}, low returned {r2:?}"))
        }
        Ok(_) if mc.m != *m2 || mc.a != *a2 => {
            let diff = m2.diff(&mc.m);
            Outcome::Violation(
                Clause::ImplStateMismatch,
                format!("memory cells (addr, low, impl): {diff:x?}; abstract equal: {}", mc.a == *a2),
            )
        }
        Ok(_) => Outcome::Hold,
    }
}

pub fn invariant_outcome(layer: &LayerSpec, a: &AbstractState, high: &HighOut) -> Outcome {
    if !(layer.invariant)(a) {
        return Outcome::Skip;
    }
    match high {
        None => Outcome::Skip,
        Some((a1, _)) if (layer.invariant)(a1) => Outcome::Hold,
        Some(_) => Outcome::Violation(Clause::InvariantBroken, "invariant fails after high spec".into()),
    }
}

/// Evaluate the selected obligations on one `(state, call)` sample.
pub fn eval_sample(
    reg: &Registry,
    layer: &LayerSpec,
    set: CheckSet,
    call: &Call,
    a: &AbstractState,
    m: &MemoryState,
) -> Result<[Option<Outcome>; 3], HarnessError> {
    let (high, low) = eval_specs(reg, layer, call, a, m)?;
    Ok([
        set.refinement.then(|| refinement_outcome(layer, a, m, &high, &low)),
        set.impl_lowspec.then(|| impl_outcome(reg, layer, call, a, m, &low)),
        set.invariant.then(|| invariant_outcome(layer, a, &high)),
    ])
}

pub const KINDS: [CheckKind; 3] = [CheckKind::Refinement, CheckKind::ImplLowspec, CheckKind::Invariant];

const CHUNK: usize = 1 << 13;

/// Number of samples to evaluate out of `full`, and the map from the k-th
/// evaluation to a sample index. A budget below `full` strides evenly
/// across the domain; a prefix could miss whole regions of it.
pub(crate) fn budgeted(full: usize, budget: Option<u64>) -> (usize, impl Fn(usize) -> usize + Sync) {
    let total = budget.map_or(full, |b| full.min(b as usize));
    (total, move |k: usize| if total < full { (k as u128 * full as u128 / total as u128) as usize } else { k })
}

/// Run the selected checks for `layer` over `gen × calls`, capped at
/// `budget` samples. One pass; results in `KINDS` order.
#[allow(clippy::too_many_arguments)]
pub fn check_layer(
    reg: &Registry,
    layer: &LayerSpec,
    gen: &StateGenerator,
    calls: &[Call],
    set: CheckSet,
    budget: Option<u64>,
    fail_fast: bool,
    mode: ExecMode,
) -> Result<[Option<Verdict>; 3], HarnessError> {
    let sampler: Sampler = gen.sampler();
    let (total, pick) = budgeted(sampler.len().saturating_mul(calls.len()), budget);
    let enabled = [set.refinement, set.impl_lowspec, set.invariant];

    let mut tested = [0u64; 3];
    let mut cex: [Option<Counterexample>; 3] = [None, None, None];
    let mut start = 0;
    let mut chunk = 256;
    while start < total {
        let end = (start + chunk).min(total);
        chunk = (chunk * 2).min(CHUNK);
        let results = par::map_range(mode, end - start, |k| {
            let i = pick(start + k);
            let a = sampler.get(i / calls.len());
            let call = &calls[i % calls.len()];
            let m = a.mirror();
            eval_sample(reg, layer, set, call, &a, &m).map(|o| (o, a, m, *call))
        });
        for r in results {
            let (outs, a, m, call) = r?;
            for (j, o) in outs.into_iter().enumerate() {
                match o {
                    Some(Outcome::Hold) => tested[j] += 1,
                    Some(Outcome::Violation(clause, detail)) => {
                        tested[j] += 1;
                        cex[j].get_or_insert_with(|| Counterexample {
                            registry: reg.name.clone(),
                            config: reg.config,
                            layer: layer.name.to_string(),
                            check: KINDS[j],
                            steps: vec![call],
                            state: a.clone(),
                            memory: m.clone(),
                            clause,
                            detail,
                        });
                    }
                    _ => {}
                }
            }
        }
        start = end;
        let any = cex.iter().any(Option::is_some);
        if (0..3).all(|j| !enabled[j] || cex[j].is_some()) || (fail_fast && any) {
            break;
        }
    }
    let complete = start >= total;
    Ok(std::array::from_fn(|j| {
        enabled[j].then(|| match cex[j].take() {
            None if !complete => Verdict::skipped(),
            c => Verdict::from_run(tested[j], c),
        })
    }))
}

fn single(
    reg: &Registry,
    layer: &LayerSpec,
    gen: &StateGenerator,
    kind: CheckKind,
    mode: ExecMode,
) -> Result<Verdict, HarnessError> {
    let calls = calls_for(layer.module);
    let idx = KINDS.iter().position(|k| *k == kind).expect("per-layer kind");
    let mut v = check_layer(reg, layer, gen, &calls, CheckSet::only(kind), None, false, mode)?;
    Ok(v[idx].take().expect("enabled"))
}

pub fn check_refinement(reg: &Registry, layer: &LayerSpec, gen: &StateGenerator, mode: ExecMode) -> Result<Verdict, HarnessError> {
    single(reg, layer, gen, CheckKind::Refinement, mode)
}

pub fn check_impl_against_lowspec(reg: &Registry, layer: &LayerSpec, gen: &StateGenerator, mode: ExecMode) -> Result<Verdict, HarnessError> {
    single(reg, layer, gen, CheckKind::ImplLowspec, mode)
}

pub fn check_invariant_preservation(reg: &Registry, layer: &LayerSpec, gen: &StateGenerator, mode: ExecMode) -> Result<Verdict, HarnessError> {
    single(reg, layer, gen, CheckKind::Invariant, mode)
}
