//! PD attitude control with rate feedforward.

use super::config::Gains;
use super::dynamics::body_rates;
use super::maneuver::Setpoint;
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Wrap an angle difference into (-π, π].
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Torque from the estimated attitude and measured body rates. The desired
/// body rates come from the setpoint's Euler-angle rates at the estimated
/// attitude.
pub fn controller_update(gains: &Gains, estimate: [f64; 3], sp: &Setpoint, rates: &Vector3<f64>) -> Vector3<f64> {
    let want = body_rates(estimate, sp.rates);
    Vector3::from_fn(|i, _| {
        gains.kp[i] * wrap(sp.angles[i] - estimate[i]) + gains.kd[i] * (want[i] - rates[i])
    })
}
