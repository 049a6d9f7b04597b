//! Rigid-body attitude dynamics.

use super::SimError;
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightState {
    /// Body-to-world rotation. Kept as a raw quaternion so drift is
    /// observable; `step_dynamics` renormalizes it.
    pub q: Quaternion<f64>,
    /// Body angular velocity, rad/s.
    pub omega: Vector3<f64>,
    pub time: f64,
}

impl FlightState {
    pub fn at_rest() -> Self {
        FlightState { q: Quaternion::identity(), omega: Vector3::zeros(), time: 0.0 }
    }

    /// Start at the given roll/pitch/yaw with the body rates that realize
    /// the given Euler-angle rates.
    pub fn from_euler(angles: [f64; 3], euler_rates: [f64; 3]) -> Self {
        let q = UnitQuaternion::from_euler_angles(angles[0], angles[1], angles[2]).into_inner();
        FlightState { q, omega: body_rates(angles, euler_rates), time: 0.0 }
    }

    /// Roll, pitch, yaw (Z-Y-X), rad.
    pub fn euler(&self) -> [f64; 3] {
        euler_of(&self.q)
    }
}

pub fn euler_of(q: &Quaternion<f64>) -> [f64; 3] {
    let (r, p, y) = UnitQuaternion::new_normalize(*q).euler_angles();
    [r, p, y]
}

/// Body angular velocity for Z-Y-X Euler angles changing at `rates`.
pub fn body_rates(angles: [f64; 3], rates: [f64; 3]) -> Vector3<f64> {
    let (sr, cr) = angles[0].sin_cos();
    let (sp, cp) = angles[1].sin_cos();
    let [dr, dp, dy] = rates;
    Vector3::new(dr - dy * sp, dp * cr + dy * cp * sr, -dp * sr + dy * cp * cr)
}

/// One explicit Euler step of ω̇ = I⁻¹(τ − ω×Iω), q̇ = ½ q⊗(0,ω).
pub fn step_dynamics(
    state: &FlightState,
    torque: &Vector3<f64>,
    inertia: &[f64; 3],
    dt: f64,
) -> Result<FlightState, SimError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(SimError::BadStep(dt));
    }
    if torque.iter().any(|t| !t.is_finite()) {
        return Err(SimError::NonFiniteTorque);
    }
    let j = Vector3::from(*inertia);
    let w = state.omega;
    let w_dot = (torque - w.cross(&j.component_mul(&w))).component_div(&j);
    let q_dot = state.q * Quaternion::from_imag(w) * 0.5;
    Ok(FlightState {
        q: (state.q + q_dot * dt).normalize(),
        omega: w + w_dot * dt,
        time: state.time + dt,
    })
}
