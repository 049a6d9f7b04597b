//! Layer linking: a program run against an upper layer's specifications
//! must be matched by the same program run with the upper module's
//! implementation over the lower layer.

use super::generator::StateGenerator;
use super::verdict::{CheckKind, Clause, Counterexample, HarnessError, Outcome, Verdict};
use crate::bus_model::regmap::{i2c_reg, spi_reg::*};
use crate::bus_model::Word;
use crate::driver_stack::{AbstractState, Call, LayerSpec, Machine, Module, Registry, Resolve};
use crate::par::{self, ExecMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestProgram {
    pub steps: Vec<Call>,
}

impl TestProgram {
    pub fn new(steps: Vec<Call>) -> Self {
        TestProgram { steps }
    }
}

const MAX: Word = Word::MAX;

/// Shipped programs for the pair whose upper layer adds `module`.
pub fn programs_for(module: Module) -> Vec<TestProgram> {
    use Call::*;
    let p = |steps: &[Call]| TestProgram::new(steps.to_vec());
    match module {
        Module::RegRw => vec![
            p(&[RegWrite(1, CH0CTRL), RegRead(CH0CTRL)]),
            p(&[RegRead(SPI_RX), RegRead(RX_FULL)]),
            p(&[RegWrite(0xAB, SPI_TX), RegRead(SPI_TX), RegRead(TX_EMPTY)]),
            p(&[RegWrite(0, RX_FULL), RegRead(RX_FULL), RegRead(SPI_RX)]),
            p(&[RegWrite(CONF_SELECT, CH0CONF), RegWrite(1, CH0CTRL), RegRead(CH0CONF)]),
        ],
        Module::Ch0En => vec![
            p(&[EnableChannel, RegRead(CH0CTRL)]),
            p(&[RegWrite(0, CH0CTRL), EnableChannel, RegRead(CH0CTRL)]),
            p(&[EnableChannel, EnableChannel]),
            p(&[RegRead(SPI_MS), EnableChannel, RegRead(RX_FULL)]),
            p(&[EnableChannel, RegWrite(0, CH0CTRL), RegRead(CH0CTRL)]),
        ],
        Module::Ch0Select => vec![
            p(&[SelectChannel(true), RegRead(CH0CTRL)]),
            p(&[SelectChannel(true), RegRead(CH0CONF)]),
            p(&[SelectChannel(true), SelectChannel(false), RegRead(CH0CTRL)]),
            p(&[EnableChannel, SelectChannel(false), SelectChannel(true), RegRead(CH0CONF)]),
            p(&[SelectChannel(false), RegRead(CH0CTRL), RegRead(SPI_RX)]),
        ],
        Module::Xfer => vec![
            p(&[Transfer(0xBB)]),
            p(&[SelectChannel(true), Transfer(0x3B)]),
            p(&[Transfer(1), RegRead(RX_FULL)]),
            p(&[Transfer(0), Transfer(MAX)]),
            p(&[RegWrite(1, RX_FULL), Transfer(7), RegRead(SPI_RX)]),
            p(&[Transfer(0xBB), SelectChannel(false), SelectChannel(true)]),
        ],
        Module::ImuRead => vec![
            p(&[ImuRead]),
            p(&[ImuRead, ImuRead]),
            p(&[Transfer(0xBB), ImuRead]),
            p(&[ImuRead, RegRead(CH0CTRL)]),
            p(&[SelectChannel(true), ImuRead, RegRead(RX_FULL)]),
        ],
        Module::I2cRw => vec![
            p(&[I2cRegWrite(0x1E, i2c_reg::SA), I2cRegRead(i2c_reg::SA)]),
            p(&[I2cRegRead(i2c_reg::RX_DATA), I2cRegRead(i2c_reg::RX_DATA)]),
            p(&[I2cRegWrite(7, i2c_reg::TX_DATA), I2cRegRead(i2c_reg::TX_DATA), I2cRegRead(i2c_reg::RX_DATA)]),
            p(&[I2cRegWrite(MAX, i2c_reg::CON), I2cRegRead(i2c_reg::STAT)]),
            p(&[I2cRegRead(i2c_reg::OA), I2cRegWrite(0, i2c_reg::OA), I2cRegRead(i2c_reg::OA)]),
        ],
        Module::MagAddr => vec![
            p(&[MagAddress(3), I2cRegRead(i2c_reg::SA)]),
            p(&[MagAddress(3), I2cRegRead(i2c_reg::TX_DATA)]),
            p(&[MagAddress(0), MagAddress(MAX)]),
            p(&[I2cRegWrite(0, i2c_reg::SA), MagAddress(3), I2cRegRead(i2c_reg::CNT)]),
            p(&[MagAddress(3), I2cRegRead(i2c_reg::RX_DATA)]),
        ],
        Module::MagRead => vec![
            p(&[MagRead]),
            p(&[MagRead, MagRead]),
            p(&[MagAddress(9), MagRead]),
            p(&[MagRead, I2cRegRead(i2c_reg::RX_DATA)]),
            p(&[I2cRegWrite(0, i2c_reg::CNT), MagRead, I2cRegRead(i2c_reg::CNT)]),
        ],
        Module::SpiBus | Module::I2cBus | Module::Timer => vec![],
    }
}

pub fn validate_program(reg: &Registry, upper: &LayerSpec, p: &TestProgram) -> Result<(), HarnessError> {
    let iface = reg.interface(upper);
    match p.steps.iter().find(|c| !iface.contains(&c.module())) {
        Some(c) => Err(HarnessError::UnknownCall { layer: upper.name.to_string(), call: *c }),
        None => Ok(()),
    }
}

/// Run A: every step through high specs. Run B: the upper module through
/// its implementation, everything else through high specs. Steps on which
/// run A is undefined are outside the program's precondition.
pub fn contextual_outcome(reg: &Registry, upper: &LayerSpec, p: &TestProgram, a: &AbstractState) -> Outcome {
    let mut spec = Machine::from_abstract(reg, a.clone(), Resolve::Spec);
    let mut rets_a = Vec::with_capacity(p.steps.len());
    for step in &p.steps {
        match spec.exec(*step) {
            Ok(r) => rets_a.push(r),
            Err(_) => return Outcome::Skip,
        }
    }
    let mut linked = Machine::from_abstract(reg, a.clone(), Resolve::Linked(upper.module));
    for (i, step) in p.steps.iter().enumerate() {
        match linked.exec(*step) {
            Err(e) => return Outcome::Violation(Clause::ImplError, format!("step {i}: {e}")),
            Ok(r) if r != rets_a[i] => {
                return Outcome::Violation(
                    Clause::ReturnMismatch,
                    format!("step {i} {step:?}: specification returned {:?}, linked returned {r:?}", rets_a[i]),
                )
            }
            Ok(_) => {}
        }
    }
    if !(upper.relation)(&spec.a, &linked.m) {
        let diff = spec.a.mirror().diff(&linked.m);
        return Outcome::Violation(Clause::RelationBroken, format!("cells (addr, spec, linked): {diff:x?}"));
    }
    if !spec.a.underlay_eq(&linked.a) {
        return Outcome::Violation(Clause::UnderlayMismatch, "bus state differs".into());
    }
    Outcome::Hold
}

/// Check every program on every generated state; `states_tested` counts
/// (state, program) pairs inside the precondition.
pub fn check_contextual_refinement(
    reg: &Registry,
    upper: &LayerSpec,
    programs: &[TestProgram],
    gen: &StateGenerator,
    budget: Option<u64>,
    mode: ExecMode,
) -> Result<Verdict, HarnessError> {
    for p in programs {
        validate_program(reg, upper, p)?;
    }
    if programs.is_empty() {
        return Ok(Verdict { status: super::verdict::Status::Pass, states_tested: 0, counterexample: None });
    }
    let sampler = gen.sampler();
    let (total, pick) = super::checks::budgeted(sampler.len() * programs.len(), budget);
    let outcomes = par::map_range(mode, total, |k| {
        let i = pick(k);
        let a = sampler.get(i / programs.len());
        contextual_outcome(reg, upper, &programs[i % programs.len()], &a)
    });
    let mut tested = 0;
    let mut cex = None;
    for (k, o) in outcomes.into_iter().enumerate() {
        let i = pick(k);
        match o {
            Outcome::Skip => {}
            Outcome::Hold => tested += 1,
            Outcome::Violation(clause, detail) => {
                tested += 1;
                if cex.is_none() {
                    let a = sampler.get(i / programs.len());
                    cex = Some(Counterexample {
                        registry: reg.name.clone(),
                        config: reg.config,
                        layer: upper.name.to_string(),
                        check: CheckKind::Contextual,
                        steps: programs[i % programs.len()].steps.clone(),
                        memory: a.mirror(),
                        state: a,
                        clause,
                        detail,
                    });
                }
            }
        }
    }
    Ok(Verdict::from_run(tested, cex))
}
