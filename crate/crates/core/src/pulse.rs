//! Time-dependent controls Ω(t) and Δ(t).
//!
//! [`PulseSchedule`] is the chirped pulse used for state preparation: Ω is
//! ramped on while Δ sits at its minimum, Δ is swept linearly across a plateau
//! of constant Ω, then Ω is ramped off at maximal Δ. [`LinearSweep`] is the
//! constant-Ω, linear-Δ sweep of the two-level Landau-Zener problem.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hamiltonian::HamiltonianParams;

/// Slack allowed when checking that a sample time lies in [0, T].
const TIME_SLACK: f64 = 1e-12;

/// Control values (or their time derivatives) at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ControlPoint {
    pub rabi: f64,
    pub detuning: f64,
}

impl ControlPoint {
    pub fn params(self) -> HamiltonianParams {
        HamiltonianParams {
            rabi: self.rabi,
            detuning: self.detuning,
        }
    }
}

/// Anything that supplies Ω(t), Δ(t) and their derivatives on [0, T].
pub trait Drive: Sync {
    fn duration(&self) -> f64;

    /// Controls at `t`; `t` is clamped to [0, T].
    fn controls(&self, t: f64) -> ControlPoint;

    /// (dΩ/dt, dΔ/dt) at `t`.
    fn rates(&self, t: f64) -> ControlPoint;

    /// Interval on which Ω is held constant, if any.
    fn constant_rabi_window(&self) -> Option<(f64, f64)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    SineSquared,
    Linear,
}

/// Chirped pulse: ramp Ω up at Δ_min, sweep Δ linearly, ramp Ω down at Δ_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSchedule {
    #[serde(rename = "duration_us")]
    pub total_duration: f64,
    #[serde(rename = "rabi_max_mhz")]
    pub rabi_max: f64,
    #[serde(rename = "detuning_min_mhz")]
    pub detuning_min: f64,
    #[serde(rename = "detuning_max_mhz")]
    pub detuning_max: f64,
    /// Fraction of T taken by each Ω ramp.
    pub ramp_fraction: f64,
    pub ramp_shape: RampShape,
}

impl PulseSchedule {
    pub fn new(
        total_duration: f64,
        rabi_max: f64,
        detuning_min: f64,
        detuning_max: f64,
        ramp_fraction: f64,
        ramp_shape: RampShape,
    ) -> Result<Self> {
        let s = Self {
            total_duration,
            rabi_max,
            detuning_min,
            detuning_max,
            ramp_fraction,
            ramp_shape,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_duration > 0.0 && self.total_duration.is_finite()) {
            return domain(format!("duration_us must be > 0, got {}", self.total_duration));
        }
        if !(self.rabi_max > 0.0 && self.rabi_max.is_finite()) {
            return domain(format!("rabi_max_mhz must be > 0, got {}", self.rabi_max));
        }
        if !(self.detuning_min < self.detuning_max) || !self.detuning_min.is_finite() || !self.detuning_max.is_finite() {
            return domain(format!(
                "detuning_min_mhz ({}) must be below detuning_max_mhz ({})",
                self.detuning_min, self.detuning_max
            ));
        }
        if !(self.ramp_fraction > 0.0 && self.ramp_fraction < 0.5) {
            return domain(format!(
                "ramp_fraction must satisfy 0 < ramp_fraction < 0.5, got {}",
                self.ramp_fraction
            ));
        }
        Ok(())
    }

    /// Same shape with a different duration.
    pub fn with_duration(mut self, total_duration: f64) -> Result<Self> {
        self.total_duration = total_duration;
        self.validate()?;
        Ok(self)
    }

    pub fn with_ramp_fraction(mut self, ramp_fraction: f64) -> Result<Self> {
        self.ramp_fraction = ramp_fraction;
        self.validate()?;
        Ok(self)
    }

    fn ramp_time(&self) -> f64 {
        self.ramp_fraction * self.total_duration
    }

    /// Slope of Δ on the plateau, in 2π·MHz/μs.
    pub fn chirp_rate(&self) -> f64 {
        (self.detuning_max - self.detuning_min) / (self.total_duration - 2.0 * self.ramp_time())
    }

    /// Checked sample of (Ω, Δ).
    pub fn sample(&self, t: f64) -> Result<ControlPoint> {
        if !(t >= -TIME_SLACK && t <= self.total_duration + TIME_SLACK) {
            return domain(format!("t = {t} outside [0, {}]", self.total_duration));
        }
        Ok(self.controls(t))
    }

    /// Ramp profile on the rising edge, `x` ∈ [0, 1] the fraction of the ramp elapsed.
    fn ramp(&self, x: f64) -> (f64, f64) {
        match self.ramp_shape {
            RampShape::SineSquared => {
                let s = (0.5 * PI * x).sin();
                (s * s, 0.5 * PI * (PI * x).sin())
            }
            RampShape::Linear => (x, 1.0),
        }
    }
}

/// Ω_max/2π = 2 MHz, Δ/2π from -10 to +10 MHz over T = 2 μs with
/// sine-squared ramps lasting 10% of T each.
pub fn standard_schedule() -> PulseSchedule {
    PulseSchedule {
        total_duration: 2.0,
        rabi_max: 2.0,
        detuning_min: -10.0,
        detuning_max: 10.0,
        ramp_fraction: 0.1,
        ramp_shape: RampShape::SineSquared,
    }
}

impl Default for PulseSchedule {
    fn default() -> Self {
        standard_schedule()
    }
}

impl Drive for PulseSchedule {
    fn duration(&self) -> f64 {
        self.total_duration
    }

    fn controls(&self, t: f64) -> ControlPoint {
        let t = t.clamp(0.0, self.total_duration);
        let ramp = self.ramp_time();
        let end = self.total_duration - ramp;
        if t < ramp {
            ControlPoint {
                rabi: self.rabi_max * self.ramp(t / ramp).0,
                detuning: self.detuning_min,
            }
        } else if t > end {
            ControlPoint {
                rabi: self.rabi_max * self.ramp((self.total_duration - t) / ramp).0,
                detuning: self.detuning_max,
            }
        } else {
            ControlPoint {
                rabi: self.rabi_max,
                detuning: self.detuning_min + self.chirp_rate() * (t - ramp),
            }
        }
    }

    fn rates(&self, t: f64) -> ControlPoint {
        let t = t.clamp(0.0, self.total_duration);
        let ramp = self.ramp_time();
        let end = self.total_duration - ramp;
        if t < ramp {
            ControlPoint {
                rabi: self.rabi_max * self.ramp(t / ramp).1 / ramp,
                detuning: 0.0,
            }
        } else if t > end {
            ControlPoint {
                rabi: -self.rabi_max * self.ramp((self.total_duration - t) / ramp).1 / ramp,
                detuning: 0.0,
            }
        } else {
            ControlPoint {
                rabi: 0.0,
                detuning: self.chirp_rate(),
            }
        }
    }

    fn constant_rabi_window(&self) -> Option<(f64, f64)> {
        let ramp = self.ramp_time();
        Some((ramp, self.total_duration - ramp))
    }
}

/// Constant Ω with Δ(t) = b (t - T/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSweep {
    pub rabi: f64,
    /// b in 2π·MHz/μs.
    pub slope: f64,
    pub total_duration: f64,
}

impl LinearSweep {
    pub fn new(rabi: f64, slope: f64, total_duration: f64) -> Result<Self> {
        if !(rabi >= 0.0 && rabi.is_finite()) || !slope.is_finite() || !(total_duration > 0.0 && total_duration.is_finite()) {
            return domain(format!(
                "invalid linear sweep (rabi = {rabi}, slope = {slope}, duration = {total_duration})"
            ));
        }
        Ok(Self {
            rabi,
            slope,
            total_duration,
        })
    }

    pub fn detuning(&self, t: f64) -> f64 {
        self.slope * (t - 0.5 * self.total_duration)
    }
}

impl Drive for LinearSweep {
    fn duration(&self) -> f64 {
        self.total_duration
    }

    fn controls(&self, t: f64) -> ControlPoint {
        ControlPoint {
            rabi: self.rabi,
            detuning: self.detuning(t.clamp(0.0, self.total_duration)),
        }
    }

    fn rates(&self, _t: f64) -> ControlPoint {
        ControlPoint {
            rabi: 0.0,
            detuning: self.slope,
        }
    }

    fn constant_rabi_window(&self) -> Option<(f64, f64)> {
        Some((0.0, self.total_duration))
    }
}

/// Time-reversed controls: Ω'(t) = Ω(T - t), Δ'(t) = Δ(T - t).
#[derive(Debug, Clone, Copy)]
pub struct Reversed<D>(pub D);

impl<D: Drive> Drive for Reversed<D> {
    fn duration(&self) -> f64 {
        self.0.duration()
    }

    fn controls(&self, t: f64) -> ControlPoint {
        self.0.controls(self.0.duration() - t)
    }

    fn rates(&self, t: f64) -> ControlPoint {
        let r = self.0.rates(self.0.duration() - t);
        ControlPoint {
            rabi: -r.rabi,
            detuning: -r.detuning,
        }
    }

    fn constant_rabi_window(&self) -> Option<(f64, f64)> {
        let t = self.0.duration();
        self.0.constant_rabi_window().map(|(a, b)| (t - b, t - a))
    }
}

/// Controls held fixed for the whole duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frozen {
    pub point: ControlPoint,
    pub total_duration: f64,
}

impl Drive for Frozen {
    fn duration(&self) -> f64 {
        self.total_duration
    }

    fn controls(&self, _t: f64) -> ControlPoint {
        self.point
    }

    fn rates(&self, _t: f64) -> ControlPoint {
        ControlPoint::default()
    }

    fn constant_rabi_window(&self) -> Option<(f64, f64)> {
        Some((0.0, self.total_duration))
    }
}

impl<D: Drive + ?Sized> Drive for &D {
    fn duration(&self) -> f64 {
        (**self).duration()
    }
    fn controls(&self, t: f64) -> ControlPoint {
        (**self).controls(t)
    }
    fn rates(&self, t: f64) -> ControlPoint {
        (**self).rates(t)
    }
    fn constant_rabi_window(&self) -> Option<(f64, f64)> {
        (**self).constant_rabi_window()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_endpoints() {
        let s = standard_schedule();
        let start = s.sample(0.0).unwrap();
        assert_eq!((start.rabi, start.detuning), (0.0, -10.0));
        let end = s.sample(2.0).unwrap();
        assert!(end.rabi.abs() < 1e-15);
        assert_eq!(end.detuning, 10.0);
        let mid = s.sample(1.0).unwrap();
        assert_eq!(mid.rabi, 2.0);
        assert!(mid.detuning.abs() < 1e-12);
    }

    #[test]
    fn sample_outside_duration_fails() {
        let s = standard_schedule();
        assert!(s.sample(-0.1).is_err());
        assert!(s.sample(2.1).is_err());
    }

    #[test]
    fn plateau_slope_by_finite_difference() {
        let s = standard_schedule();
        let h = 1e-6;
        let fd = (s.controls(0.8 + h).detuning - s.controls(0.8 - h).detuning) / (2.0 * h);
        let expected = 20.0 / (0.8 * 2.0);
        assert!((fd - expected).abs() < 1e-6);
        assert!((s.chirp_rate() - expected).abs() < 1e-12);
    }

    #[test]
    fn analytic_rates_match_finite_differences() {
        for shape in [RampShape::SineSquared, RampShape::Linear] {
            let s = PulseSchedule::new(1.5, 2.0, -7.0, 9.0, 0.15, shape).unwrap();
            for &t in &[0.05, 0.11, 0.4, 0.9, 1.3, 1.42] {
                let h = 1e-6;
                let fd_rabi = (s.controls(t + h).rabi - s.controls(t - h).rabi) / (2.0 * h);
                let fd_det = (s.controls(t + h).detuning - s.controls(t - h).detuning) / (2.0 * h);
                let r = s.rates(t);
                assert!((r.rabi - fd_rabi).abs() < 1e-5, "{shape:?} t={t}");
                assert!((r.detuning - fd_det).abs() < 1e-5, "{shape:?} t={t}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(PulseSchedule::new(2.0, 2.0, -10.0, 10.0, 0.6, RampShape::SineSquared).is_err());
        assert!(PulseSchedule::new(2.0, 2.0, -10.0, 10.0, 0.0, RampShape::SineSquared).is_err());
        assert!(PulseSchedule::new(2.0, 2.0, 10.0, -10.0, 0.1, RampShape::SineSquared).is_err());
        assert!(PulseSchedule::new(0.0, 2.0, -10.0, 10.0, 0.1, RampShape::SineSquared).is_err());
        assert!(PulseSchedule::new(2.0, 0.0, -10.0, 10.0, 0.1, RampShape::SineSquared).is_err());
    }

    #[test]
    fn linear_sweep_is_centred() {
        let sweep = LinearSweep::new(1.0, 4.0, 3.0).unwrap();
        assert_eq!(sweep.controls(1.5).detuning, 0.0);
        assert_eq!(sweep.controls(0.0).detuning, -6.0);
        assert_eq!(sweep.rates(0.3).detuning, 4.0);
    }

    #[test]
    fn reversal_mirrors_controls() {
        let s = standard_schedule();
        let r = Reversed(s);
        assert_eq!(r.controls(0.3), s.controls(1.7));
        assert_eq!(r.rates(0.3).detuning, -s.rates(1.7).detuning);
        let (a, b) = r.constant_rabi_window().unwrap();
        assert!((a - 0.2).abs() < 1e-12 && (b - 1.8).abs() < 1e-12);
    }

    #[test]
    fn schedule_serde_keys() {
        let json = serde_json::to_string(&standard_schedule()).unwrap();
        for key in [
            "duration_us",
            "rabi_max_mhz",
            "detuning_min_mhz",
            "detuning_max_mhz",
            "ramp_fraction",
            "ramp_shape",
        ] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
        assert!(json.contains("\"sine-squared\""));
        let back: PulseSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, standard_schedule());
    }
}
