//! Vehicle longitudinal model and a synthetic four-phase speed profile.

use alloc::format;
use alloc::vec::Vec;

use crate::ecm::OperatingPoint;
use crate::error::{Error, Result};
use crate::math::{abs, round, sin_cos};
use crate::qoi::OperatingSet;

pub const GRAVITY: f64 = 9.81;

/// Road-load and drivetrain data for speed-to-torque conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Vehicle {
    /// kg
    pub mass: f64,
    /// m
    pub wheel_radius: f64,
    /// Motor-to-wheel speed ratio.
    pub gear_ratio: f64,
    pub rolling_coefficient: f64,
    /// Product `rho/2 * c_d * A`, kg/m.
    pub aero_coefficient: f64,
}

impl Default for Vehicle {
    /// A scaled-down vehicle whose road load fits the reference machine.
    fn default() -> Self {
        Self {
            mass: 2.2,
            wheel_radius: 0.05,
            gear_ratio: 1.5,
            rolling_coefficient: 0.01,
            aero_coefficient: 2.0e-5,
        }
    }
}

impl Vehicle {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("mass", self.mass, false),
            ("wheel_radius", self.wheel_radius, false),
            ("gear_ratio", self.gear_ratio, false),
            ("rolling_coefficient", self.rolling_coefficient, true),
            ("aero_coefficient", self.aero_coefficient, true),
        ];
        for (key, v, zero_ok) in checks {
            if !v.is_finite() || v < 0.0 || (!zero_ok && v == 0.0) {
                return Err(Error::Config(format!(
                    "vehicle.{key} must be {} and finite, got {v}",
                    if zero_ok { "nonnegative" } else { "positive" }
                )));
            }
        }
        Ok(())
    }

    /// Tractive force at the wheel, N.
    pub fn tractive_force(&self, speed: f64, accel: f64) -> f64 {
        let rolling = if speed > 0.0 {
            self.rolling_coefficient * self.mass * GRAVITY
        } else {
            0.0
        };
        self.mass * accel + rolling + self.aero_coefficient * speed * abs(speed)
    }

    /// Motor operating point for vehicle speed (m/s) and acceleration (m/s^2).
    /// Braking torque appears as negative torque.
    pub fn operating_point(&self, speed: f64, accel: f64) -> OperatingPoint {
        let force = if speed == 0.0 && accel <= 0.0 {
            0.0
        } else {
            self.tractive_force(speed, accel)
        };
        OperatingPoint::new(
            force * self.wheel_radius / self.gear_ratio,
            abs(speed) * self.gear_ratio / self.wheel_radius,
        )
    }
}

/// Operating profile from a sampled speed trace, with accelerations from
/// central differences (one-sided at the ends).
pub fn profile_from_speed(times: &[f64], speeds: &[f64], vehicle: &Vehicle) -> Result<OperatingSet> {
    vehicle.validate()?;
    if times.len() != speeds.len() {
        return Err(Error::Contract(format!(
            "{} times for {} speeds",
            times.len(),
            speeds.len()
        )));
    }
    if let Some(k) = speeds.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config(format!(
            "speed at sample {k} must be finite and nonnegative, got {}",
            speeds[k]
        )));
    }
    let n = speeds.len();
    let accel = |k: usize| -> f64 {
        if n < 2 {
            return 0.0;
        }
        let (a, b) = match k {
            0 => (0, 1),
            k if k + 1 == n => (k - 1, k),
            k => (k - 1, k + 1),
        };
        (speeds[b] - speeds[a]) / (times[b] - times[a])
    };
    let points = (0..n).map(|k| vehicle.operating_point(speeds[k], accel(k))).collect();
    OperatingSet::profile(times.to_vec(), points)
}

/// Phase durations (s) and peak speeds (km/h) of the synthetic profile.
pub const PHASES: [(f64, f64); 4] = [(589.0, 56.5), (433.0, 76.6), (455.0, 97.4), (323.0, 131.3)];

/// Synthetic four-phase speed trace (m/s) of 1800 s: each phase is a train
/// of smooth accelerate-cruise-brake trips separated by short stops, rising
/// to the phase peak. Returns `(times, speeds)`.
pub fn wltp_like(step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("cycle step must be positive, got {step}")));
    }
    let total: f64 = PHASES.iter().map(|p| p.0).sum();
    let n = round(total / step) as usize + 1;
    let mut times = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    for k in 0..n {
        let t = (k as f64 * step).min(total);
        times.push(t);
        speeds.push(speed_at(t));
    }
    Ok((times, speeds))
}

const TRIPS: [usize; 4] = [4, 3, 2, 1];
const STOP: f64 = 0.08;

fn speed_at(t: f64) -> f64 {
    let mut start = 0.0;
    for (phase, &(duration, peak)) in PHASES.iter().enumerate() {
        if t <= start + duration || phase + 1 == PHASES.len() {
            let local = ((t - start) / duration).clamp(0.0, 1.0);
            let trips = TRIPS[phase];
            let pos = local * trips as f64;
            let trip = (pos as usize).min(trips - 1);
            let u = pos - trip as f64;
            // trips ramp up to the phase peak
            let height = peak * (0.55 + 0.45 * (trip + 1) as f64 / trips as f64);
            return height / 3.6 * trip_shape(u);
        }
        start += duration;
    }
    0.0
}

/// Stop, raised-cosine launch, cruise with a gentle wave, raised-cosine brake, stop.
fn trip_shape(u: f64) -> f64 {
    use core::f64::consts::PI;
    let a = STOP;
    let b = 1.0 - STOP;
    if u <= a || u >= b {
        return 0.0;
    }
    let v = (u - a) / (b - a);
    let ramp = 0.25;
    let envelope = if v < ramp {
        0.5 * (1.0 - sin_cos(PI * v / ramp).1)
    } else if v > 1.0 - ramp {
        0.5 * (1.0 - sin_cos(PI * (1.0 - v) / ramp).1)
    } else {
        1.0
    };
    let wave = 1.0 - 0.08 * sin_cos(4.0 * PI * v).0 * sin_cos(4.0 * PI * v).0;
    envelope * wave
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecm::{torque_envelope, EcmParameters};

    #[test]
    fn half_second_step_gives_3601_points() {
        let (t, v) = wltp_like(0.5).unwrap();
        assert_eq!(t.len(), 3601);
        assert_eq!(*t.last().unwrap(), 1800.0);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 0.0);
        let (t1, _) = wltp_like(1.0).unwrap();
        assert_eq!(t1.len(), 1801);
    }

    #[test]
    fn phase_peaks_are_reached() {
        let (t, v) = wltp_like(0.5).unwrap();
        let mut start = 0.0;
        for &(duration, peak) in &PHASES {
            let vmax = t
                .iter()
                .zip(&v)
                .filter(|(&ti, _)| ti >= start && ti <= start + duration)
                .map(|(_, &vi)| vi)
                .fold(0.0, f64::max);
            assert!((vmax * 3.6 - peak).abs() < 0.01 * peak, "{vmax} vs {peak}");
            start += duration;
        }
    }

    #[test]
    fn standstill_is_idle() {
        let times: Vec<f64> = (0..5).map(f64::from).collect();
        let set = profile_from_speed(&times, &[0.0; 5], &Vehicle::default()).unwrap();
        assert!(set.points.iter().all(|p| p.torque == 0.0 && p.omega_m == 0.0));
    }

    #[test]
    fn constant_speed_needs_road_load_only() {
        let veh = Vehicle::default();
        let times = [0.0, 1.0, 2.0];
        let set = profile_from_speed(&times, &[10.0; 3], &veh).unwrap();
        let force = veh.rolling_coefficient * veh.mass * GRAVITY + veh.aero_coefficient * 100.0;
        for p in &set.points {
            assert!((p.torque - force * veh.wheel_radius / veh.gear_ratio).abs() < 1e-15);
            assert!((p.omega_m - 10.0 * veh.gear_ratio / veh.wheel_radius).abs() < 1e-12);
        }
    }

    #[test]
    fn central_difference_acceleration() {
        let veh = Vehicle {
            rolling_coefficient: 0.0,
            aero_coefficient: 0.0,
            ..Vehicle::default()
        };
        let times = [0.0, 1.0, 3.0];
        let speeds = [1.0, 2.0, 5.0];
        let set = profile_from_speed(&times, &speeds, &veh).unwrap();
        let scale = veh.mass * veh.wheel_radius / veh.gear_ratio;
        assert!((set.points[0].torque - scale).abs() < 1e-15);
        assert!((set.points[1].torque - 4.0 / 3.0 * scale).abs() < 1e-15);
        assert!((set.points[2].torque - 1.5 * scale).abs() < 1e-15);
    }

    #[test]
    fn default_vehicle_stays_inside_envelope() {
        let ecm = EcmParameters::default();
        let (t, v) = wltp_like(0.5).unwrap();
        let set = profile_from_speed(&t, &v, &Vehicle::default()).unwrap();
        let omegas: Vec<f64> = set.points.iter().map(|p| p.omega_m).collect();
        let env = torque_envelope(&ecm, &omegas).unwrap();
        let worst = set
            .points
            .iter()
            .zip(&env)
            .map(|(p, e)| p.torque.abs() / e)
            .fold(0.0, f64::max);
        assert!(worst < 0.9, "peak envelope use {worst}");
    }

    #[test]
    fn bad_inputs() {
        assert!(wltp_like(0.0).is_err());
        assert!(profile_from_speed(&[0.0, 0.0], &[1.0, 1.0], &Vehicle::default()).is_err());
        assert!(profile_from_speed(&[0.0, 1.0], &[1.0, -1.0], &Vehicle::default()).is_err());
        assert!(Vehicle {
            mass: 0.0,
            ..Vehicle::default()
        }
        .validate()
        .is_err());
    }
}
