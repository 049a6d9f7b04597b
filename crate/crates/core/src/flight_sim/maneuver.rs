//! Scripted attitude setpoints.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Fundamental period of the aggressive script, seconds.
pub const PERIOD_S: f64 = 1.4;

/// One sinusoid: amplitude in degrees, harmonic number, phase in radians.
type Component = (f64, f64, f64);

// Odd harmonics only, so every axis satisfies s(t + T/2) = -s(t) and the
// tracking error magnitude repeats every T/2 = 0.7 s: the length of a fault
// window plus its tail.
const ROLL: [Component; 2] = [(20.0, 1.0, 0.0), (6.0, 3.0, 0.5)];
const PITCH: [Component; 2] = [(15.0, 1.0, -PI / 2.0), (5.0, 3.0, -1.0)];
const YAW: [Component; 1] = [(5.0, 1.0, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Maneuver {
    /// Continuous roll/pitch swings of about 25 degrees with a gentle yaw
    /// sway.
    #[default]
    Aggressive,
    /// Level attitude, zero rates.
    Hover,
}

/// Desired Euler angles (roll, pitch, yaw) and their time derivatives, rad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub angles: [f64; 3],
    pub rates: [f64; 3],
}

impl Maneuver {
    pub fn setpoint(self, t: f64) -> Setpoint {
        match self {
            Maneuver::Hover => Setpoint::default(),
            Maneuver::Aggressive => {
                let (r, rd) = eval(&ROLL, t);
                let (p, pd) = eval(&PITCH, t);
                let (y, yd) = eval(&YAW, t);
                Setpoint { angles: [r, p, y], rates: [rd, pd, yd] }
            }
        }
    }
}

fn eval(comps: &[Component], t: f64) -> (f64, f64) {
    let w = 2.0 * PI / PERIOD_S;
    comps.iter().fold((0.0, 0.0), |(s, d), &(amp, k, ph)| {
        let a = amp.to_radians();
        (s + a * (k * w * t + ph).sin(), d + a * k * w * (k * w * t + ph).cos())
    })
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Maneuver::Aggressive => "aggressive",
            Maneuver::Hover => "hover",
        })
    }
}

impl FromStr for Maneuver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aggressive" => Ok(Maneuver::Aggressive),
            "hover" => Ok(Maneuver::Hover),
            other => Err(format!("unknown maneuver `{other}`")),
        }
    }
}
