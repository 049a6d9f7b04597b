//! Physical sensor readings, their conversion to raw counts, and the bus
//! event sequences that deliver those counts to the driver.

use super::config::{Noise, SensorConfig, SensorSpec};
use super::dynamics::FlightState;
use crate::bus_model::{I2cEvent, SpiEvent, Word};
use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Raw counts in register order: accel x/y/z, gyro x/y/z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImuCounts {
    pub accel: [i16; 3],
    pub gyro: [i16; 3],
}

/// Round to counts and saturate at full scale.
pub fn quantize(value: f64, spec: &SensorSpec) -> i16 {
    let fs = spec.full_scale();
    (value * spec.sensitivity).round().clamp(-fs, fs) as i16
}

pub fn to_physical(counts: [i16; 3], spec: &SensorSpec) -> Vector3<f64> {
    Vector3::from(counts.map(|c| c as f64 / spec.sensitivity))
}

/// Specific force in the body frame, in g. There is no translational
/// motion, so this is the reaction to gravity alone.
pub fn true_accel(state: &FlightState) -> Vector3<f64> {
    UnitQuaternion::new_normalize(state.q).inverse_transform_vector(&Vector3::z())
}

/// Body rates in deg/s.
pub fn true_gyro(state: &FlightState) -> Vector3<f64> {
    state.omega.map(f64::to_degrees)
}

/// Earth field in the body frame, gauss.
pub fn true_mag(state: &FlightState, field: &[f64; 3]) -> Vector3<f64> {
    UnitQuaternion::new_normalize(state.q).inverse_transform_vector(&Vector3::from(*field))
}

fn noisy<R: Rng>(v: Vector3<f64>, sigma: f64, spec: &SensorSpec, rng: &mut R) -> [i16; 3] {
    let n = Normal::new(0.0, sigma).expect("noise sigma is finite and non-negative");
    std::array::from_fn(|i| quantize(v[i] + n.sample(rng), spec))
}

/// Three noise draws for the accelerometer and three for the gyro, always,
/// so the random stream does not depend on what the driver does.
pub fn sample_imu<R: Rng>(state: &FlightState, cfg: &SensorConfig, noise: &Noise, rng: &mut R) -> ImuCounts {
    ImuCounts {
        accel: noisy(true_accel(state), noise.accel, &cfg.accel, rng),
        gyro: noisy(true_gyro(state), noise.gyro, &cfg.gyro, rng),
    }
}

pub fn sample_mag<R: Rng>(
    state: &FlightState,
    field: &[f64; 3],
    cfg: &SensorConfig,
    noise: &Noise,
    rng: &mut R,
) -> [i16; 3] {
    noisy(true_mag(state, field), noise.mag, &cfg.mag, rng)
}

fn word(c: i16) -> Word {
    c as u16 as Word
}

/// What the SPI controller sees during one IMU read: per register, the
/// shift completes during the TX write and the reply lands before the first
/// status poll. The remaining two events cover the data read and the flag
/// clear.
pub fn imu_events(s: &ImuCounts) -> Vec<SpiEvent> {
    s.accel
        .iter()
        .chain(&s.gyro)
        .flat_map(|&c| [SpiEvent::XferDone, SpiEvent::Recv(word(c)), SpiEvent::Null, SpiEvent::Null])
        .collect()
}

/// One magnetometer read: three acknowledged address writes, then the data
/// bytes in device order (X, Z, Y, most significant byte first).
pub fn mag_events(counts: &[i16; 3]) -> Vec<I2cEvent> {
    let [x, y, z] = counts.map(word);
    let mut ev = vec![I2cEvent::Ack; 3];
    for w in [x, z, y] {
        ev.push(I2cEvent::Recv(w >> 8));
        ev.push(I2cEvent::Recv(w & 0xFF));
    }
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn level_hover_reads_one_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_imu(&FlightState::at_rest(), &SensorConfig::default(), &Noise::NONE, &mut rng);
        assert_eq!(s.accel, [0, 0, 4096]);
        assert_eq!(s.gyro, [0, 0, 0]);
    }

    #[test]
    fn one_degree_per_second() {
        let cfg = SensorConfig::default();
        assert_eq!(quantize(1.0, &cfg.gyro), 33);
        let st = FlightState { omega: Vector3::new(1f64.to_radians(), 0.0, 0.0), ..FlightState::at_rest() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_imu(&st, &cfg, &Noise::NONE, &mut rng).gyro, [33, 0, 0]);
    }

    #[test]
    fn mag_saturates() {
        let cfg = SensorConfig::default();
        assert_eq!(quantize(1.3, &cfg.mag), 1417);
        assert_eq!(quantize(5.0, &cfg.mag), 1417);
        assert_eq!(quantize(-5.0, &cfg.mag), -1417);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = sample_mag(&FlightState::at_rest(), &[1.3, 0.0, 0.0], &cfg, &Noise::NONE, &mut rng);
        assert_eq!(m, [1417, 0, 0]);
    }

    #[test]
    fn event_shapes() {
        let ev = imu_events(&ImuCounts { accel: [1, 2, 3], gyro: [-1, 5, 6] });
        assert_eq!(ev.len(), 24);
        assert_eq!(ev[13], SpiEvent::Recv(0xFFFF));
        let m = mag_events(&[0x0102, -1, 0x0304]);
        assert_eq!(m.len(), 9);
        assert_eq!(&m[3..5], &[I2cEvent::Recv(0x01), I2cEvent::Recv(0x02)]);
        assert_eq!(&m[5..7], &[I2cEvent::Recv(0x03), I2cEvent::Recv(0x04)]);
        assert_eq!(&m[7..], &[I2cEvent::Recv(0xFF), I2cEvent::Recv(0xFF)]);
    }
}
