//! Phasors, impedances and the power transmission equations of a series
//! string of voltage sources feeding either a lumped load or a stiff grid.
//!
//! Complex power follows `S = V · I*` with current flowing out of the string,
//! so an inductive impedance yields positive reactive power.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Scalar};

/// Series combinations below this magnitude (ohm) are treated as short circuits.
pub const SINGULAR_IMPEDANCE: f64 = 1e-12;

/// A complex quantity in polar form. The angle is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor<T> {
    magnitude: T,
    angle: T,
}

impl<T: Scalar> Phasor<T> {
    pub fn new(magnitude: T, angle: T) -> Result<Self> {
        if !magnitude.is_finite() || magnitude < T::zero() {
            return Err(Error::invalid(
                "phasor magnitude",
                "must be finite and >= 0",
            ));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("phasor angle", "must be finite"));
        }
        Ok(Self {
            magnitude,
            angle: wrap_angle(angle),
        })
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        let (magnitude, angle) = z.to_polar();
        Self {
            magnitude,
            angle: wrap_angle(angle),
        }
    }

    pub fn magnitude(&self) -> T {
        self.magnitude
    }

    pub fn angle(&self) -> T {
        self.angle
    }

    pub fn to_complex(&self) -> Complex<T> {
        Complex::from_polar(self.magnitude, self.angle)
    }
}

/// A passive impedance `|Z|∠θ` with `|Z| > 0` and `θ ∈ [-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impedance<T> {
    magnitude: T,
    angle: T,
}

impl<T: Scalar> Impedance<T> {
    pub fn new(magnitude: T, angle: T) -> Result<Self> {
        if !magnitude.is_finite() || magnitude <= T::zero() {
            return Err(Error::invalid(
                "impedance magnitude",
                "must be finite and > 0",
            ));
        }
        let half_pi = T::FRAC_PI_2();
        if !angle.is_finite() || angle < -half_pi || angle > half_pi {
            return Err(Error::invalid(
                "impedance angle",
                "must lie in [-pi/2, pi/2] (passive element)",
            ));
        }
        Ok(Self { magnitude, angle })
    }

    /// Builds an impedance from resistance and reactance (ohm).
    pub fn from_rx(resistance: T, reactance: T) -> Result<Self> {
        if !resistance.is_finite() || resistance < T::zero() {
            return Err(Error::invalid("resistance", "must be finite and >= 0"));
        }
        if !reactance.is_finite() {
            return Err(Error::invalid("reactance", "must be finite"));
        }
        Self::new(resistance.hypot(reactance), reactance.atan2(resistance))
    }

    pub fn magnitude(&self) -> T {
        self.magnitude
    }

    pub fn angle(&self) -> T {
        self.angle
    }

    pub fn resistance(&self) -> T {
        self.magnitude * self.angle.cos()
    }

    pub fn reactance(&self) -> T {
        self.magnitude * self.angle.sin()
    }

    pub fn to_complex(&self) -> Complex<T> {
        Complex::from_polar(self.magnitude, self.angle)
    }
}

/// Active and reactive power of one module.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerPair<T> {
    pub active: T,
    pub reactive: T,
}

impl<T: Scalar> PowerPair<T> {
    pub fn new(active: T, reactive: T) -> Self {
        Self { active, reactive }
    }

    pub fn apparent(&self) -> T {
        self.active.hypot(self.reactive)
    }
}

/// Series combination of the line and load seen by the islanded string.
pub fn generalized_load<T: Scalar>(
    line: &Impedance<T>,
    load: &Impedance<T>,
) -> Result<Impedance<T>> {
    let total = line.to_complex() + load.to_complex();
    let magnitude = total.norm();
    if magnitude < T::lit(SINGULAR_IMPEDANCE) {
        return Err(Error::SingularImpedance {
            magnitude: magnitude.to_f64().unwrap_or(0.0),
        });
    }
    // both real parts are >= 0, so the sum stays in the right half plane
    let half_pi = T::FRAC_PI_2();
    let angle = total.im.atan2(total.re).max(-half_pi).min(half_pi);
    Impedance::new(magnitude, angle)
}

fn check_string<T>(voltages: &[Phasor<T>]) -> Result<()> {
    if voltages.is_empty() {
        return Err(Error::invalid(
            "voltages",
            "string needs at least one module",
        ));
    }
    Ok(())
}

/// Per-module powers of the islanded string feeding the generalized load.
///
/// `P_i = V_i/|Z'| · Σ_j V_j cos(δ_i − δ_j + θ')`, and the same with `sin`
/// for `Q_i`.
pub fn islanded_power_flow<T: Scalar>(
    voltages: &[Phasor<T>],
    zload: &Impedance<T>,
) -> Result<Vec<PowerPair<T>>> {
    check_string(voltages)?;
    let theta = zload.angle();
    let zmag = zload.magnitude();
    Ok(voltages
        .iter()
        .map(|vi| {
            let (mut p, mut q) = (T::zero(), T::zero());
            for vj in voltages {
                let arg = vi.angle() - vj.angle() + theta;
                p = p + vj.magnitude() * arg.cos();
                q = q + vj.magnitude() * arg.sin();
            }
            let scale = vi.magnitude() / zmag;
            PowerPair::new(scale * p, scale * q)
        })
        .collect())
}

/// Per-module powers of the string tied to a stiff grid through `zline`.
///
/// Adds the `−V_g cos(δ_i − δ_g + θ_line)` and `−V_g sin(·)` grid terms to the
/// islanded expressions.
pub fn grid_power_flow<T: Scalar>(
    voltages: &[Phasor<T>],
    grid: &Phasor<T>,
    zline: &Impedance<T>,
) -> Result<Vec<PowerPair<T>>> {
    check_string(voltages)?;
    let theta = zline.angle();
    let zmag = zline.magnitude();
    Ok(voltages
        .iter()
        .map(|vi| {
            let (mut p, mut q) = (T::zero(), T::zero());
            for vj in voltages {
                let arg = vi.angle() - vj.angle() + theta;
                p = p + vj.magnitude() * arg.cos();
                q = q + vj.magnitude() * arg.sin();
            }
            let arg = vi.angle() - grid.angle() + theta;
            p = p - grid.magnitude() * arg.cos();
            q = q - grid.magnitude() * arg.sin();
            let scale = vi.magnitude() / zmag;
            PowerPair::new(scale * p, scale * q)
        })
        .collect())
}

/// Reference evaluation of `S_i = V_i · I*` in rectangular arithmetic, with
/// `I = (Σ V_j − V_sink) / Z`. `sink = None` is the islanded string.
pub fn complex_power_oracle<T: Scalar>(
    voltages: &[Phasor<T>],
    sink: Option<&Phasor<T>>,
    z: &Impedance<T>,
) -> Result<Vec<PowerPair<T>>> {
    check_string(voltages)?;
    let mut drive: Complex<T> = voltages.iter().map(Phasor::to_complex).sum();
    if let Some(sink) = sink {
        drive = drive - sink.to_complex();
    }
    let current = drive / z.to_complex();
    Ok(voltages
        .iter()
        .map(|v| {
            let s = v.to_complex() * current.conj();
            PowerPair::new(s.re, s.im)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ph(m: f64, a: f64) -> Phasor<f64> {
        Phasor::new(m, a).unwrap()
    }

    fn z(m: f64, a: f64) -> Impedance<f64> {
        Impedance::new(m, a).unwrap()
    }

    #[test]
    fn phasor_rejects_negative_magnitude() {
        assert!(Phasor::new(-1.0, 0.0).is_err());
        assert!(Phasor::new(1.0, f64::NAN).is_err());
        assert_eq!(ph(2.0, 3.0 * PI).angle(), ph(2.0, PI).angle());
    }

    #[test]
    fn impedance_rejects_zero_and_active_angles() {
        assert!(Impedance::new(0.0, 0.0).is_err());
        assert!(Impedance::new(1.0, 2.0).is_err());
        assert!(Impedance::from_rx(-1.0, 0.0).is_err());
        assert!(Impedance::from_rx(0.0, 0.0).is_err());
        let zrx = Impedance::from_rx(12.0_f64, -6.0).unwrap();
        assert!((zrx.resistance() - 12.0).abs() < 1e-12);
        assert!((zrx.reactance() + 6.0).abs() < 1e-12);
    }

    #[test]
    fn series_resistors_add() {
        let g = generalized_load(&z(1.0, 0.0), &z(1.0, 0.0)).unwrap();
        assert!((g.magnitude() - 2.0).abs() < 1e-15);
        assert_eq!(g.angle(), 0.0);
    }

    #[test]
    fn line_plus_resistive_load() {
        let r = 12.0;
        let g = generalized_load(&z(0.314, FRAC_PI_2), &z(r, 0.0)).unwrap();
        assert!((g.magnitude() - (r * r + 0.314 * 0.314).sqrt()).abs() < 1e-12);
        assert!((g.angle() - 0.314_f64.atan2(r)).abs() < 1e-12);
    }

    #[test]
    fn resonant_series_is_singular() {
        let err = generalized_load(&z(1.0, FRAC_PI_2), &z(1.0, -FRAC_PI_2)).unwrap_err();
        assert!(matches!(err, Error::SingularImpedance { .. }));
    }

    #[test]
    fn symmetric_resistive_string() {
        let v = [ph(1.0, 0.0), ph(1.0, 0.0)];
        let s = islanded_power_flow(&v, &z(1.0, 0.0)).unwrap();
        for p in &s {
            assert!((p.active - 2.0).abs() < 1e-15);
            assert!(p.reactive.abs() < 1e-15);
        }
    }

    #[test]
    fn inductor_absorbs_only_reactive_power() {
        let s = islanded_power_flow(&[ph(1.0, 0.0)], &z(1.0, FRAC_PI_2)).unwrap();
        assert!(s[0].active.abs() < 1e-15);
        assert!((s[0].reactive - 1.0).abs() < 1e-15);
    }

    #[test]
    fn string_matching_grid_carries_no_power() {
        let s = grid_power_flow(&[ph(315.0, 0.0)], &ph(315.0, 0.0), &z(0.314, 1.1)).unwrap();
        assert!(s[0].active.abs() < 1e-9 && s[0].reactive.abs() < 1e-9);

        // four modules of 315/4 V sum to the grid voltage
        let v = vec![ph(315.0 / 4.0, 0.0); 4];
        let s = grid_power_flow(&v, &ph(315.0, 0.0), &z(0.314, FRAC_PI_2)).unwrap();
        for p in s {
            assert!(p.active.abs() < 1e-9 && p.reactive.abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_hand_values() {
        let s = complex_power_oracle(&[ph(1.0, 0.0), ph(1.0, 0.0)], None, &z(1.0, 0.0)).unwrap();
        assert!((s[0].active - 2.0).abs() < 1e-15 && s[1].reactive.abs() < 1e-15);

        let s = complex_power_oracle(&[ph(1.0, FRAC_PI_2)], None, &z(1.0, 0.0)).unwrap();
        assert!((s[0].active - 1.0).abs() < 1e-15 && s[0].reactive.abs() < 1e-15);

        // I = (1 - (-j)) / 1 = 1 + j, S = 1 · (1 - j)
        let sink = ph(1.0, -FRAC_PI_2);
        let s = complex_power_oracle(&[ph(1.0, 0.0)], Some(&sink), &z(1.0, 0.0)).unwrap();
        assert!((s[0].active - 1.0).abs() < 1e-15);
        assert!((s[0].reactive + 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_string_rejected() {
        assert!(islanded_power_flow::<f64>(&[], &z(1.0, 0.0)).is_err());
        assert!(grid_power_flow(&[], &ph(1.0, 0.0), &z(1.0, 0.0)).is_err());
    }

    #[test]
    fn equal_angles_give_load_angle() {
        let theta = 0.37;
        let v = vec![ph(78.75, 1.234); 5];
        let s = islanded_power_flow(&v, &z(7.0, theta)).unwrap();
        for p in s {
            assert!((p.reactive.atan2(p.active) - theta).abs() < 1e-15);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let v = [Phasor::new(1.0_f32, 0.0).unwrap(); 2];
        let s = islanded_power_flow(&v, &Impedance::new(1.0_f32, 0.0).unwrap()).unwrap();
        assert!((s[0].active - 2.0).abs() < 1e-6);
    }
}
