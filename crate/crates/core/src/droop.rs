//! Power-factor-angle droop: each module measures its own power factor angle
//! and shifts its frequency in proportion to the deviation from the setpoint.
//! The voltage amplitude is held at its nominal value.

use crate::error::{Error, Result};
use crate::phasor::PowerPair;
use crate::scalar::{wrap_angle, Scalar};

/// Relative magnitude below which a module's power is considered zero.
pub const ZERO_POWER: f64 = 1e-12;

/// Output saturation band for the commanded frequency, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqClamp<T> {
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopParams<T> {
    /// ω* in rad/s.
    pub nominal_omega: T,
    /// V* in volts.
    pub nominal_voltage: T,
    /// φ* in radians.
    pub nominal_pf_angle: T,
    /// m, rad/s of frequency shift per radian of angle error.
    pub droop_gain: T,
    pub freq_clamp: Option<FreqClamp<T>>,
}

impl<T: Scalar> DroopParams<T> {
    /// Builds parameters from a nominal frequency in Hz.
    pub fn new(
        nominal_frequency: T,
        nominal_voltage: T,
        nominal_pf_angle: T,
        droop_gain: T,
        freq_clamp: Option<FreqClamp<T>>,
    ) -> Result<Self> {
        let params = Self {
            nominal_omega: T::TAU() * nominal_frequency,
            nominal_voltage,
            nominal_pf_angle: wrap_angle(nominal_pf_angle),
            droop_gain,
            freq_clamp,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nominal_omega.is_finite() || self.nominal_omega <= T::zero() {
            return Err(Error::invalid(
                "nominal_frequency",
                "must be finite and > 0",
            ));
        }
        if !self.nominal_voltage.is_finite() || self.nominal_voltage <= T::zero() {
            return Err(Error::invalid("nominal_voltage", "must be finite and > 0"));
        }
        let pi = T::PI();
        if !(self.nominal_pf_angle > -pi && self.nominal_pf_angle <= pi) {
            return Err(Error::invalid("nominal_pf_angle", "must lie in (-pi, pi]"));
        }
        if !self.droop_gain.is_finite() || self.droop_gain <= T::zero() {
            return Err(Error::invalid("droop_gain", "must be finite and > 0"));
        }
        if let Some(c) = self.freq_clamp {
            let f = self.nominal_frequency();
            if !(c.lower < f && f < c.upper) {
                return Err(Error::invalid(
                    "freq_clamp",
                    "requires lower < nominal frequency < upper",
                ));
            }
        }
        Ok(())
    }

    pub fn nominal_frequency(&self) -> T {
        self.nominal_omega / T::TAU()
    }

    /// Returns a copy with a new power factor angle setpoint.
    pub fn with_pf_angle(&self, pf_angle: T) -> Result<Self> {
        if !pf_angle.is_finite() {
            return Err(Error::invalid("nominal_pf_angle", "must be finite"));
        }
        Ok(Self {
            nominal_pf_angle: wrap_angle(pf_angle),
            ..*self
        })
    }
}

/// Four-quadrant power factor angle `atan2(Q, P)` in `(-π, π]`.
///
/// `rated` scales the zero-power threshold: the angle is undefined when both
/// `|P|` and `|Q|` are below `1e-12 · rated`.
pub fn power_factor_angle<T: Scalar>(p: &PowerPair<T>, rated: T) -> Result<T> {
    let floor = T::lit(ZERO_POWER) * rated.abs();
    if p.active.abs() <= floor && p.reactive.abs() <= floor {
        return Err(Error::ZeroPower);
    }
    Ok(wrap_angle(p.reactive.atan2(p.active)))
}

/// Droop law `ω = ω* − m · wrap(φ − φ*)`, saturated to the clamp band.
pub fn droop_frequency<T: Scalar>(phi: T, params: &DroopParams<T>) -> T {
    let error = wrap_angle(phi - params.nominal_pf_angle);
    let omega = params.nominal_omega - params.droop_gain * error;
    match params.freq_clamp {
        Some(c) => omega.max(T::TAU() * c.lower).min(T::TAU() * c.upper),
        None => omega,
    }
}

/// Constant-amplitude voltage law.
pub fn voltage_reference<T: Scalar>(params: &DroopParams<T>) -> T {
    params.nominal_voltage
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn reference_plant() -> DroopParams<f64> {
        DroopParams::new(
            50.0,
            315.0 / 4.0,
            0.2,
            0.5,
            Some(FreqClamp {
                lower: 49.0,
                upper: 51.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn quadrant_angles() {
        let a = power_factor_angle(&PowerPair::new(1.0, 1.0), 1.0).unwrap();
        assert!((a - FRAC_PI_4).abs() < 1e-15);
        let a = power_factor_angle(&PowerPair::new(-1.0, 1.0), 1.0).unwrap();
        assert!((a - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let a = power_factor_angle(&PowerPair::new(-1.0, -0.0), 1.0).unwrap();
        assert_eq!(a, PI);
    }

    #[test]
    fn zero_power_has_no_angle() {
        assert_eq!(
            power_factor_angle(&PowerPair::new(0.0, 0.0), 1.0),
            Err(Error::ZeroPower)
        );
        assert!(power_factor_angle(&PowerPair::new(1e-9, 0.0), 1e6).is_err());
        assert!(power_factor_angle(&PowerPair::new(1e-9, 0.0), 1.0).is_ok());
    }

    #[test]
    fn setpoint_gives_nominal_frequency() {
        let p = reference_plant();
        assert_eq!(droop_frequency(0.2, &p), TAU * 50.0);
    }

    #[test]
    fn reference_plant_droop_shift() {
        let p = reference_plant();
        let w = droop_frequency(0.0, &p);
        assert!((w - (TAU * 50.0 + 0.1)).abs() < 1e-12);
        assert!((w / TAU - 50.015_915_494).abs() < 1e-8);
    }

    #[test]
    fn error_wraps_across_seam() {
        let mut p = reference_plant();
        p.nominal_pf_angle = -PI + 0.1;
        let w = droop_frequency(PI - 0.1, &p);
        // wrapped error is -0.2, not 2π - 0.2
        assert!((w - (p.nominal_omega + 0.1)).abs() < 1e-9);
    }

    #[test]
    fn clamp_saturates() {
        let mut p = reference_plant();
        p.droop_gain = 100.0;
        assert_eq!(droop_frequency(-1.0, &p), TAU * 51.0);
        assert_eq!(droop_frequency(1.5, &p), TAU * 49.0);
        p.freq_clamp = None;
        assert!(droop_frequency(1.5, &p) < TAU * 49.0);
    }

    #[test]
    fn voltage_law_is_constant() {
        let p = reference_plant();
        assert_eq!(voltage_reference(&p), 78.75);
        assert_eq!(voltage_reference(&p), voltage_reference(&p));
    }

    #[test]
    fn validation() {
        assert!(DroopParams::new(50.0, 78.75, 0.2, -1.0, None).is_err());
        assert!(DroopParams::new(50.0, 78.75, 0.2, 0.0, None).is_err());
        let bad = Some(FreqClamp {
            lower: 51.0,
            upper: 52.0,
        });
        assert!(DroopParams::new(50.0, 78.75, 0.2, 0.5, bad).is_err());
        assert!(DroopParams::new(50.0, -1.0, 0.2, 0.5, None).is_err());
    }
}
