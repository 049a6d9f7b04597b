//! The control loop: sensors feed bus event lists, the driver stack reads
//! them, the filter and controller act, and the plant integrates.

use super::config::SimConfig;
use super::control::controller_update;
use super::dynamics::{euler_of, step_dynamics, FlightState};
use super::faults::FaultSchedule;
use super::fusion::fuse_attitude;
use super::sensors::{imu_events, mag_events, sample_imu, sample_mag, to_physical};
use super::trace::{compute_metrics, AttitudeTrace, Summary, TraceRow};
use super::SimError;
use crate::bus_model::regmap::spi_reg::SPI_MS;
use crate::bus_model::{EventList, EventLog};
use crate::driver_stack::unverified::{unverified_imu_read, UnverifiedImu};
use crate::driver_stack::{AbstractState, Call, DriverConfig, ImuSample, Machine, Registry, Resolve, Ret};
use crate::par::{map_range, ExecMode};
use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

/// Which IMU read path the flight software uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Bounded polling through the checked driver stack.
    Verified,
    /// Polls the status flag until the device answers.
    Unverified,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Verified, Variant::Unverified];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Verified => "verified",
            Variant::Unverified => "unverified",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verified" => Ok(Variant::Verified),
            "unverified" => Ok(Variant::Unverified),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Poll delay used by both read paths, microseconds.
pub const POLL_US: u32 = 5;

pub fn driver_config(cfg: &SimConfig) -> DriverConfig {
    DriverConfig { k_poll: cfg.k_poll, poll_us: POLL_US }
}

/// The fault schedule a trial with this seed uses.
pub fn schedule_for(cfg: &SimConfig, seed: u64) -> FaultSchedule {
    let ms = |s: f64| (s * 1000.0).round() as u64;
    FaultSchedule::generate(
        seed,
        (ms(cfg.interval_s.0), ms(cfg.interval_s.1)),
        ms(cfg.block_s),
        ms(cfg.dt()),
        ms(cfg.duration_s),
    )
}

fn accel_gyro(s: &ImuSample, cfg: &SimConfig) -> (Vector3<f64>, Vector3<f64>) {
    let accel = to_physical(s.accel, &cfg.sensors.accel);
    let gyro = to_physical(s.gyro, &cfg.sensors.gyro).map(f64::to_radians);
    (accel, gyro)
}

/// Bring the SPI controller up as master with channel 0 selected.
fn init_bus(machine: &mut Machine) -> Result<(), SimError> {
    machine.exec(Call::RegWrite(0, SPI_MS))?;
    machine.exec(Call::SelectChannel(true))?;
    Ok(())
}

/// Run one flight. The noise stream is derived from `seed` and is consumed
/// identically by both variants, so with no faults their traces coincide.
pub fn run_experiment(
    cfg: &SimConfig,
    variant: Variant,
    schedule: &FaultSchedule,
    seed: u64,
) -> Result<AttitudeTrace, SimError> {
    cfg.validate()?;
    let reg = Registry::shipped(driver_config(cfg));
    let mut machine = Machine::from_abstract(&reg, AbstractState::default(), Resolve::Impl);
    init_bus(&mut machine)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let dt = cfg.dt();
    let sub_dt = dt / cfg.substeps as f64;
    let dt_ms = (dt * 1000.0).round() as u64;
    let dt_us = dt_ms * 1000;
    let block_us = (cfg.block_s * 1e6).round() as u64;
    let mag_ratio = cfg.sensors.mag.rate_hz / cfg.control_hz();

    let sp0 = cfg.maneuver.setpoint(0.0);
    let mut truth = FlightState::from_euler(sp0.angles, sp0.rates);
    let mut est = truth.q;
    let mut last_fused = -dt;
    let mut torque = Vector3::zeros();
    let mut frozen = 0u64;
    let mut rows = Vec::with_capacity(cfg.ticks());

    for k in 0..cfg.ticks() as u64 {
        let t = k as f64 * dt;
        let t_ms = k * dt_ms;
        let sp = cfg.maneuver.setpoint(t);
        let imu = sample_imu(&truth, &cfg.sensors, &cfg.noise, &mut rng);
        let mag_due = k == 0 || (k as f64 * mag_ratio).floor() > ((k - 1) as f64 * mag_ratio).floor();
        let mag = mag_due.then(|| sample_mag(&truth, &cfg.field, &cfg.sensors, &cfg.noise, &mut rng));

        let stale = if frozen > 0 {
            frozen -= 1;
            true
        } else {
            // A fault stalls the transfer in flight: the device goes silent.
            let events = if schedule.starts_at(t_ms) { Vec::new() } else { imu_events(&imu) };
            machine.a.spi_env = EventList::new(events);
            machine.a.spi_log = EventLog::new();
            let sample = match variant {
                Variant::Verified => match machine.exec(Call::ImuRead)? {
                    Ret::Imu(s) => Some(s),
                    other => return Err(SimError::Driver(crate::driver_stack::ExecError::BadReturn(other))),
                },
                Variant::Unverified => match unverified_imu_read(&mut machine, block_us)? {
                    UnverifiedImu::Sample(s) => Some(s),
                    UnverifiedImu::Stalled { elapsed_us } => {
                        frozen = elapsed_us.div_ceil(dt_us).saturating_sub(1);
                        None
                    }
                },
            };
            match sample {
                None => true,
                Some(s) => {
                    let mag_field = match mag {
                        Some(m) => {
                            machine.a.i2c_env = EventList::new(mag_events(&m));
                            machine.a.i2c_log = EventLog::new();
                            match machine.exec(Call::MagRead)? {
                                Ret::Mag(c) => Some(to_physical(c, &cfg.sensors.mag)),
                                other => {
                                    return Err(SimError::Driver(crate::driver_stack::ExecError::BadReturn(other)))
                                }
                            }
                        }
                        None => None,
                    };
                    let (accel, gyro) = accel_gyro(&s, cfg);
                    est = fuse_attitude(&est, &gyro, &accel, mag_field.as_ref(), cfg.beta, t - last_fused).q;
                    last_fused = t;
                    torque = controller_update(&cfg.gains, euler_of(&est), &sp, &gyro);
                    s.stale
                }
            }
        };

        rows.push(TraceRow {
            t,
            desired: sp.angles.map(f64::to_degrees),
            actual: truth.euler().map(f64::to_degrees),
            stale,
            fault: schedule.active(t_ms),
        });
        for _ in 0..cfg.substeps {
            truth = step_dynamics(&truth, &torque, &cfg.inertia, sub_dt)?;
        }
    }
    Ok(AttitudeTrace { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub variant: Variant,
    pub schedule: FaultSchedule,
    pub trace: AttitudeTrace,
    pub summary: Summary,
}

/// Fault window tail in ticks.
pub fn tail_ticks(cfg: &SimConfig) -> usize {
    (cfg.tail_s * cfg.control_hz()).round() as usize
}

/// Run `trials` seeds (`cfg.seed`, `cfg.seed + 1`, ...) for each variant.
/// Results are ordered by trial, then by the order of `variants`.
pub fn run_trials(
    cfg: &SimConfig,
    variants: &[Variant],
    trials: usize,
    faults: bool,
    mode: ExecMode,
) -> Result<Vec<TrialResult>, SimError> {
    let jobs: Vec<(usize, Variant)> =
        (0..trials).flat_map(|i| variants.iter().map(move |&v| (i, v))).collect();
    map_range(mode, jobs.len(), |j| {
        let (trial, variant) = jobs[j];
        let seed = cfg.seed.wrapping_add(trial as u64);
        let schedule = if faults { schedule_for(cfg, seed) } else { FaultSchedule::none(0) };
        let trace = run_experiment(cfg, variant, &schedule, seed)?;
        let summary = compute_metrics(&trace, tail_ticks(cfg))?;
        Ok(TrialResult { trial, seed, variant, schedule, trace, summary })
    })
    .into_iter()
    .collect()
}
