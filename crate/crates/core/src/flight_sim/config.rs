//! Simulation parameters and the `key = value` config file format.

use super::maneuver::Maneuver;
use std::fmt::Write as _;
use std::str::FromStr;

/// One sensor axis family: full-scale range, counts per unit, sample rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSpec {
    pub range: f64,
    pub sensitivity: f64,
    pub rate_hz: f64,
}

impl SensorSpec {
    /// Largest count magnitude: the range in counts, capped by the 16-bit
    /// register (±8 g at 4096 counts/g is one count past it).
    pub fn full_scale(&self) -> f64 {
        (self.range * self.sensitivity).round().min(i16::MAX as f64)
    }
}

/// MPU9250 accelerometer (g) and gyro (deg/s), HMC5883L magnetometer (gauss).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub accel: SensorSpec,
    pub gyro: SensorSpec,
    pub mag: SensorSpec,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            accel: SensorSpec { range: 8.0, sensitivity: 4096.0, rate_hz: 200.0 },
            gyro: SensorSpec { range: 1000.0, sensitivity: 32.8, rate_hz: 200.0 },
            mag: SensorSpec { range: 1.3, sensitivity: 1090.0, rate_hz: 75.0 },
        }
    }
}

/// Standard deviation of additive sensor noise, in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Noise {
    pub accel: f64,
    pub gyro: f64,
    pub mag: f64,
}

impl Noise {
    pub const NONE: Noise = Noise { accel: 0.0, gyro: 0.0, mag: 0.0 };

    /// Roughly the datasheet noise densities integrated over the sample band.
    pub const REALISTIC: Noise = Noise { accel: 0.008, gyro: 0.1, mag: 0.004 };
}

/// Diagonal PD gains per body axis, in N·m/rad and N·m·s/rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp: [f64; 3],
    pub kd: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub sensors: SensorConfig,
    pub noise: Noise,
    /// Principal moments of inertia, kg·m².
    pub inertia: [f64; 3],
    pub gains: Gains,
    /// Fusion filter gain, rad/s.
    pub beta: f64,
    pub k_poll: u32,
    /// Earth magnetic field in the world frame (x north, y west, z up), gauss.
    pub field: [f64; 3],
    /// Plant integration substeps per control tick.
    pub substeps: u32,
    pub block_s: f64,
    pub interval_s: (f64, f64),
    /// Error window extension after each fault, seconds.
    pub tail_s: f64,
    pub duration_s: f64,
    pub maneuver: Maneuver,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        // Closed-loop natural frequency 30 rad/s on roll/pitch and 10 rad/s
        // on yaw, damping 0.8: quadrotors have far less yaw authority.
        let inertia = [0.02, 0.02, 0.04];
        let (wn, zeta) = ([30.0, 30.0, 10.0], 0.8);
        SimConfig {
            sensors: SensorConfig::default(),
            noise: Noise::NONE,
            inertia,
            gains: Gains {
                kp: std::array::from_fn(|i| inertia[i] * wn[i] * wn[i]),
                kd: std::array::from_fn(|i| inertia[i] * 2.0 * zeta * wn[i]),
            },
            beta: 0.1,
            k_poll: 16,
            field: [0.21, 0.0, -0.42],
            substeps: 5,
            block_s: 0.2,
            interval_s: (5.0, 10.0),
            tail_s: 0.5,
            duration_s: 40.0,
            maneuver: Maneuver::Aggressive,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every key accepted in a config file, in the order `to_text` writes them.
pub const KEYS: [&str; 30] = [
    "accel_range", "accel_sensitivity", "accel_rate",
    "gyro_range", "gyro_sensitivity", "gyro_rate",
    "mag_range", "mag_sensitivity", "mag_rate",
    "noise_accel", "noise_gyro", "noise_mag",
    "inertia_x", "inertia_y", "inertia_z",
    "kp_roll", "kp_pitch", "kp_yaw",
    "kd_roll", "kd_pitch", "kd_yaw",
    "beta", "k_poll", "substeps",
    "block", "interval_min", "interval_max",
    "duration", "maneuver", "seed",
];

impl SimConfig {
    pub fn control_hz(&self) -> f64 {
        self.sensors.gyro.rate_hz
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_hz()
    }

    pub fn ticks(&self) -> usize {
        (self.duration_s * self.control_hz()).round() as usize
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        let s = &mut self.sensors;
        Some(match key {
            "accel_range" => &mut s.accel.range,
            "accel_sensitivity" => &mut s.accel.sensitivity,
            "accel_rate" => &mut s.accel.rate_hz,
            "gyro_range" => &mut s.gyro.range,
            "gyro_sensitivity" => &mut s.gyro.sensitivity,
            "gyro_rate" => &mut s.gyro.rate_hz,
            "mag_range" => &mut s.mag.range,
            "mag_sensitivity" => &mut s.mag.sensitivity,
            "mag_rate" => &mut s.mag.rate_hz,
            "noise_accel" => &mut self.noise.accel,
            "noise_gyro" => &mut self.noise.gyro,
            "noise_mag" => &mut self.noise.mag,
            "inertia_x" => &mut self.inertia[0],
            "inertia_y" => &mut self.inertia[1],
            "inertia_z" => &mut self.inertia[2],
            "kp_roll" => &mut self.gains.kp[0],
            "kp_pitch" => &mut self.gains.kp[1],
            "kp_yaw" => &mut self.gains.kp[2],
            "kd_roll" => &mut self.gains.kd[0],
            "kd_pitch" => &mut self.gains.kd[1],
            "kd_yaw" => &mut self.gains.kd[2],
            "beta" => &mut self.beta,
            "block" => &mut self.block_s,
            "interval_min" => &mut self.interval_s.0,
            "interval_max" => &mut self.interval_s.1,
            "duration" => &mut self.duration_s,
            _ => return None,
        })
    }

    /// Parse a config file on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue { line, key: key.into(), value: value.into() };
            match key {
                "maneuver" => cfg.maneuver = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "k_poll" => cfg.k_poll = value.parse().map_err(|_| bad())?,
                "substeps" => cfg.substeps = value.parse().map_err(|_| bad())?,
                _ => {
                    let v = parse_f64(value).ok_or_else(bad)?;
                    *cfg.slot(key).ok_or_else(|| ConfigError::UnknownKey { line, key: key.into() })? = v;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        let s = &self.sensors;
        for spec in [s.accel, s.gyro, s.mag] {
            if !(spec.range > 0.0 && spec.sensitivity > 0.0 && spec.rate_hz > 0.0) {
                return bad("sensor range, sensitivity and rate must be positive");
            }
        }
        if s.accel.rate_hz != s.gyro.rate_hz {
            return bad("accel and gyro share one device and must have the same rate");
        }
        if (1000.0 / s.gyro.rate_hz).fract() != 0.0 {
            return bad("the control period must be a whole number of milliseconds");
        }
        if s.mag.rate_hz > s.gyro.rate_hz {
            return bad("mag rate may not exceed the control rate");
        }
        if self.inertia.iter().any(|&j| j <= 0.0) || self.beta < 0.0 {
            return bad("inertia must be positive and beta non-negative");
        }
        let (lo, hi) = self.interval_s;
        if !(lo > 0.0 && lo <= hi && self.block_s > 0.0 && self.block_s < lo) {
            return bad("need 0 < block < interval_min <= interval_max");
        }
        if self.k_poll == 0 || self.substeps == 0 || self.duration_s <= 0.0 {
            return bad("k_poll, substeps and duration must be positive");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut c = self.clone();
        let mut out = String::new();
        for key in KEYS {
            let value = match key {
                "maneuver" => self.maneuver.to_string(),
                "seed" => self.seed.to_string(),
                "k_poll" => self.k_poll.to_string(),
                "substeps" => self.substeps.to_string(),
                _ => format!("{:?}", *c.slot(key).expect("every key has a slot")),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    f64::from_str(s).ok().filter(|v| v.is_finite())
}
