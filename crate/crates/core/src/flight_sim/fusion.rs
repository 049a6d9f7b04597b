//! Gradient-descent orientation filter.
//!
//! The orientation `q` rotates body vectors into the world frame (z up). The
//! accelerometer objective compares the measured specific force with world
//! up seen from the body; the magnetometer objective compares the measured
//! field with a reference `(bx, 0, bz)` that has the measured field's
//! horizontal magnitude and vertical component.

use nalgebra::{Matrix6x4, Quaternion, Vector3, Vector4, Vector6};

/// Horizontal and vertical components of the reference field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRef {
    pub bx: f64,
    pub bz: f64,
}

impl FieldRef {
    /// The reference implied by a (unit) body-frame measurement at `q`.
    pub fn from_measurement(q: &Quaternion<f64>, m: &Vector3<f64>) -> Self {
        let h = (q * Quaternion::from_imag(*m) * q.conjugate()).imag();
        FieldRef { bx: h.x.hypot(h.y), bz: h.z }
    }
}

/// Stacked residual (accelerometer rows, then magnetometer rows) and its
/// Jacobian with respect to (w, x, y, z). Without a field the magnetometer
/// rows are zero.
pub fn residual(
    q: &Quaternion<f64>,
    a: &Vector3<f64>,
    mag: Option<(&Vector3<f64>, FieldRef)>,
) -> (Vector6<f64>, Matrix6x4<f64>) {
    let (q1, q2, q3, q4) = (q.w, q.i, q.j, q.k);
    let mut f = Vector6::zeros();
    let mut j = Matrix6x4::zeros();
    f[0] = 2.0 * (q2 * q4 - q1 * q3) - a.x;
    f[1] = 2.0 * (q1 * q2 + q3 * q4) - a.y;
    f[2] = 2.0 * (0.5 - q2 * q2 - q3 * q3) - a.z;
    j.fixed_view_mut::<3, 4>(0, 0).copy_from_slice(&[
        // column-major: d/dq1, d/dq2, d/dq3, d/dq4
        -2.0 * q3, 2.0 * q2, 0.0,
        2.0 * q4, 2.0 * q1, -4.0 * q2,
        -2.0 * q1, 2.0 * q4, -4.0 * q3,
        2.0 * q2, 2.0 * q3, 0.0,
    ]);
    if let Some((m, FieldRef { bx, bz })) = mag {
        f[3] = 2.0 * bx * (0.5 - q3 * q3 - q4 * q4) + 2.0 * bz * (q2 * q4 - q1 * q3) - m.x;
        f[4] = 2.0 * bx * (q2 * q3 - q1 * q4) + 2.0 * bz * (q1 * q2 + q3 * q4) - m.y;
        f[5] = 2.0 * bx * (q1 * q3 + q2 * q4) + 2.0 * bz * (0.5 - q2 * q2 - q3 * q3) - m.z;
        j.fixed_view_mut::<3, 4>(3, 0).copy_from_slice(&[
            -2.0 * bz * q3,
            -2.0 * bx * q4 + 2.0 * bz * q2,
            2.0 * bx * q3,
            2.0 * bz * q4,
            2.0 * bx * q3 + 2.0 * bz * q1,
            2.0 * bx * q4 - 4.0 * bz * q2,
            -4.0 * bx * q3 - 2.0 * bz * q1,
            2.0 * bx * q2 + 2.0 * bz * q4,
            2.0 * bx * q1 - 4.0 * bz * q3,
            -4.0 * bx * q4 + 2.0 * bz * q2,
            -2.0 * bx * q1 + 2.0 * bz * q3,
            2.0 * bx * q2,
        ]);
    }
    (f, j)
}

/// ½‖f‖².
pub fn objective(q: &Quaternion<f64>, a: &Vector3<f64>, mag: Option<(&Vector3<f64>, FieldRef)>) -> f64 {
    0.5 * residual(q, a, mag).0.norm_squared()
}

/// ∇(½‖f‖²) = Jᵀf, as (w, x, y, z).
pub fn gradient(q: &Quaternion<f64>, a: &Vector3<f64>, mag: Option<(&Vector3<f64>, FieldRef)>) -> Vector4<f64> {
    let (f, j) = residual(q, a, mag);
    j.transpose() * f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fused {
    pub q: Quaternion<f64>,
    /// The accelerometer read zero, so only the gyro was integrated.
    pub gyro_only: bool,
}

/// One filter step. `gyro` in rad/s; `accel` and `mag` in any units (they
/// are normalized). Pass `mag` only when a fresh sample exists.
pub fn fuse_attitude(
    q: &Quaternion<f64>,
    gyro: &Vector3<f64>,
    accel: &Vector3<f64>,
    mag: Option<&Vector3<f64>>,
    beta: f64,
    dt: f64,
) -> Fused {
    let mut q_dot = q * Quaternion::from_imag(*gyro) * 0.5;
    let gyro_only = accel.norm() == 0.0;
    if !gyro_only {
        let a = accel.normalize();
        let m = mag.filter(|m| m.norm() > 0.0).map(|m| m.normalize());
        let field = m.as_ref().map(|m| (m, FieldRef::from_measurement(q, m)));
        let g = gradient(q, &a, field);
        let n = g.norm();
        if n > 0.0 {
            let step = g * (beta / n);
            q_dot -= Quaternion::new(step[0], step[1], step[2], step[3]);
        }
    }
    Fused { q: (q + q_dot * dt).normalize(), gyro_only }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    #[test]
    fn identity_is_a_fixed_point() {
        let q = Quaternion::identity();
        let field = Vector3::new(0.21, 0.0, -0.42);
        let out = fuse_attitude(&q, &Vector3::zeros(), &Vector3::z(), Some(&field), 0.1, 0.005);
        assert!(!out.gyro_only);
        assert!((out.q - q).norm() < 1e-15);
    }

    #[test]
    fn zero_accel_integrates_gyro_only() {
        let q = Quaternion::identity();
        let w = Vector3::new(0.0, 0.0, 1.0);
        let out = fuse_attitude(&q, &w, &Vector3::zeros(), None, 0.1, 0.005);
        assert!(out.gyro_only);
        let expect = (q + q * Quaternion::from_imag(w) * 0.0025).normalize();
        assert_eq!(out.q, expect);
    }

    #[test]
    fn reference_field_recovers_measurement() {
        let q = UnitQuaternion::from_euler_angles(0.2, -0.1, 0.7);
        let world = Vector3::new(0.21, 0.0, -0.42).normalize();
        let m = q.inverse_transform_vector(&world);
        let b = FieldRef::from_measurement(q.quaternion(), &m);
        assert!((b.bx - world.x).abs() < 1e-12 && (b.bz - world.z).abs() < 1e-12);
        let a = q.inverse_transform_vector(&Vector3::z());
        assert!(objective(q.quaternion(), &a, Some((&m, b))) < 1e-25);
    }

    #[test]
    fn converges_from_a_tilt() {
        let truth = UnitQuaternion::from_euler_angles(0.3, -0.2, 0.0);
        let a = truth.inverse_transform_vector(&Vector3::z());
        let mut q = Quaternion::identity();
        for _ in 0..2000 {
            q = fuse_attitude(&q, &Vector3::zeros(), &a, None, 0.5, 0.005).q;
        }
        // The normalized step never shrinks, so the estimate settles into a
        // dither of about beta * dt around the truth.
        let est = UnitQuaternion::new_normalize(q).inverse_transform_vector(&Vector3::z());
        assert!((est - a).norm() < 2.0 * 0.5 * 0.005);
    }
}
