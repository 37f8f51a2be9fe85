//! Closed-loop time-domain simulation of the cascaded string.
//!
//! Angles live in a frame rotating at the nominal frequency ω*, so each
//! module obeys `δ̇_i = ω_i − ω*` with `ω_i` from the droop law evaluated on
//! the algebraic power-flow solution. The grid, when connected, sits at the
//! constant angle `δ_g`. Integration is fixed-step classical RK4.

use crate::droop::{droop_frequency, power_factor_angle, voltage_reference, DroopParams};
use crate::error::{Error, Result};
use crate::phasor::{
    generalized_load, grid_power_flow, islanded_power_flow, Impedance, Phasor, PowerPair,
};
use crate::roots::bisect;
use crate::scalar::{wrap_angle, Scalar};
use crate::small_signal::{grid_ab, grid_jacobian, stability_condition, LinearModel, Stability};

/// Resolution of the equilibrium scan over `(-π, π]`.
pub const SCAN_POINTS: usize = 360;
/// Bisection stops once the bracket is this narrow (rad).
pub const ROOT_TOL: f64 = 1e-12;
/// A bisected bracket counts as a root only if the residual is this small.
/// Larger residuals mark a jump of the wrapped residual, not a zero.
pub const ROOT_ACCEPT: f64 = 1e-8;
/// Event times must sit within this fraction of a step from a grid point.
const STEP_ALIGNMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Islanded,
    GridConnected,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Islanded => "islanded",
            Mode::GridConnected => "grid-connected",
        }
    }
}

/// Full plant description.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    pub n: usize,
    pub droop: DroopParams<T>,
    /// V_g in volts.
    pub grid_voltage: T,
    /// δ_g in radians, constant in the rotating frame.
    pub grid_angle: T,
    pub line: Impedance<T>,
    pub load: Impedance<T>,
    pub mode: Mode,
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        self.droop.validate()?;
        if !self.grid_voltage.is_finite() || self.grid_voltage < T::zero() {
            return Err(Error::invalid("grid_voltage", "must be finite and >= 0"));
        }
        if !self.grid_angle.is_finite() {
            return Err(Error::invalid("grid_angle", "must be finite"));
        }
        Ok(())
    }

    /// Line plus load, as seen by the islanded string.
    pub fn generalized_load(&self) -> Result<Impedance<T>> {
        generalized_load(&self.line, &self.load)
    }

    /// Power scale used for the zero-power threshold.
    pub fn rated_power(&self) -> Result<T> {
        let v = voltage_reference(&self.droop);
        let nv = T::count(self.n) * v;
        Ok(match self.mode {
            Mode::Islanded => v * nv / self.generalized_load()?.magnitude(),
            Mode::GridConnected => v * (nv + self.grid_voltage) / self.line.magnitude(),
        })
    }

    /// Per-module powers for the given module angles in the current mode.
    pub fn module_powers(&self, deltas: &[T]) -> Result<Vec<PowerPair<T>>> {
        let v = voltage_reference(&self.droop);
        let voltages = deltas
            .iter()
            .map(|&d| Phasor::new(v, d))
            .collect::<Result<Vec<_>>>()?;
        match self.mode {
            Mode::Islanded => islanded_power_flow(&voltages, &self.generalized_load()?),
            Mode::GridConnected => {
                let grid = Phasor::new(self.grid_voltage, self.grid_angle)?;
                grid_power_flow(&voltages, &grid, &self.line)
            }
        }
    }

    /// Grid-mode Jacobian at the synchronized angle `delta_s`.
    pub fn grid_linear_model(&self, delta_s: T) -> Result<LinearModel<T>> {
        let lin = grid_ab(
            self.n,
            self.droop.nominal_voltage,
            self.grid_voltage,
            delta_s - self.grid_angle,
        )?;
        grid_jacobian(&lin, self.n, self.droop.droop_gain)
    }
}

/// Dynamic and measured quantities of one module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverterState<T> {
    /// δ_i in the rotating frame (not wrapped, so it stays continuous).
    pub delta: T,
    pub voltage: T,
    pub power: PowerPair<T>,
    /// Last valid power factor angle.
    pub pf_angle: T,
    /// Commanded angular frequency, rad/s.
    pub omega: T,
}

impl<T: Scalar> InverterState<T> {
    pub fn frequency(&self) -> T {
        self.omega / T::TAU()
    }
}

struct Measurement<T> {
    power: Vec<PowerPair<T>>,
    phi: Vec<T>,
    omega: Vec<T>,
}

fn measure<T: Scalar>(
    config: &SystemConfig<T>,
    deltas: &[T],
    held_phi: &[T],
) -> Result<Measurement<T>> {
    let power = config.module_powers(deltas)?;
    let rated = config.rated_power()?;
    let phi: Vec<T> = power
        .iter()
        .zip(held_phi)
        .map(|(p, &held)| power_factor_angle(p, rated).unwrap_or(held))
        .collect();
    let omega = phi
        .iter()
        .map(|&f| droop_frequency(f, &config.droop))
        .collect();
    Ok(Measurement { power, phi, omega })
}

fn states_from<T: Scalar>(
    config: &SystemConfig<T>,
    deltas: &[T],
    held_phi: &[T],
) -> Result<Vec<InverterState<T>>> {
    let m = measure(config, deltas, held_phi)?;
    let v = voltage_reference(&config.droop);
    Ok((0..deltas.len())
        .map(|i| InverterState {
            delta: deltas[i],
            voltage: v,
            power: m.power[i],
            pf_angle: m.phi[i],
            omega: m.omega[i],
        })
        .collect())
}

/// Builds module states at the given angles, measuring power immediately.
/// Modules with no power start from the setpoint angle.
pub fn initial_states<T: Scalar>(
    config: &SystemConfig<T>,
    deltas: &[T],
) -> Result<Vec<InverterState<T>>> {
    if deltas.len() != config.n {
        return Err(Error::invalid("initial_deltas", "length must equal n"));
    }
    let held = vec![config.droop.nominal_pf_angle; deltas.len()];
    states_from(config, deltas, &held)
}

/// Recomputes the measured fields of `states` for the current topology.
pub fn refresh<T: Scalar>(
    states: &[InverterState<T>],
    config: &SystemConfig<T>,
) -> Result<Vec<InverterState<T>>> {
    let deltas: Vec<T> = states.iter().map(|s| s.delta).collect();
    let held: Vec<T> = states.iter().map(|s| s.pf_angle).collect();
    states_from(config, &deltas, &held)
}

/// Advances all modules by one RK4 step of length `dt`.
pub fn step<T: Scalar>(
    states: &[InverterState<T>],
    config: &SystemConfig<T>,
    dt: T,
) -> Result<Vec<InverterState<T>>> {
    if !dt.is_finite() || dt <= T::zero() {
        return Err(Error::invalid("dt", "must be finite and > 0"));
    }
    if states.len() != config.n {
        return Err(Error::invalid("states", "length must equal n"));
    }
    let held: Vec<T> = states.iter().map(|s| s.pf_angle).collect();
    let w0 = config.droop.nominal_omega;
    let rate = |deltas: &[T]| -> Result<Vec<T>> {
        Ok(measure(config, deltas, &held)?
            .omega
            .into_iter()
            .map(|w| w - w0)
            .collect())
    };
    let axpy =
        |x: &[T], k: &[T], h: T| -> Vec<T> { x.iter().zip(k).map(|(&x, &k)| x + h * k).collect() };

    let half = dt * T::lit(0.5);
    let d0: Vec<T> = states.iter().map(|s| s.delta).collect();
    let k1 = rate(&d0)?;
    let k2 = rate(&axpy(&d0, &k1, half))?;
    let k3 = rate(&axpy(&d0, &k2, half))?;
    let k4 = rate(&axpy(&d0, &k3, dt))?;
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let next: Vec<T> = (0..d0.len())
        .map(|i| d0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect();
    states_from(config, &next, &held)
}

/// Timeline event applied between integration steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Event<T> {
    /// Open or close the transfer switch.
    SetMode(Mode),
    SetLoad(Impedance<T>),
    SetLine(Impedance<T>),
    /// New power factor angle setpoint φ*.
    SetPfRef(T),
    /// Re-initialize every module angle (starts a fresh sub-run).
    SetInitialDelta(Vec<T>),
}

impl<T> Event<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Event::SetMode(_) => "set_mode",
            Event::SetLoad(_) => "set_load",
            Event::SetLine(_) => "set_line",
            Event::SetPfRef(_) => "set_pf_ref",
            Event::SetInitialDelta(_) => "set_initial_delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent<T> {
    pub time: T,
    pub event: Event<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub config: SystemConfig<T>,
    pub initial_deltas: Vec<T>,
    /// Sorted by time.
    pub events: Vec<TimedEvent<T>>,
    pub duration: T,
    pub dt: T,
    pub record_decimation: usize,
}

fn step_index<T: Scalar>(t: T, dt: T, field: &'static str) -> Result<usize> {
    let k = t / dt;
    let r = k.round();
    if (k - r).abs() > T::lit(STEP_ALIGNMENT) * r.max(T::one()) {
        return Err(Error::invalid(field, "must be an integer multiple of dt"));
    }
    r.to_usize()
        .ok_or_else(|| Error::invalid(field, "out of range"))
}

impl<T: Scalar> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.initial_deltas.len() != self.config.n {
            return Err(Error::invalid("initial_deltas", "length must equal n"));
        }
        if self.initial_deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("initial_deltas", "must be finite"));
        }
        if !self.dt.is_finite() || self.dt <= T::zero() {
            return Err(Error::invalid("dt", "must be finite and > 0"));
        }
        if !self.duration.is_finite() || self.duration <= T::zero() {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        if self.record_decimation == 0 {
            return Err(Error::invalid("record_decimation", "must be >= 1"));
        }
        step_index(self.duration, self.dt, "duration")?;
        let mut last = T::zero();
        for ev in &self.events {
            if !ev.time.is_finite() || ev.time < T::zero() || ev.time > self.duration {
                return Err(Error::invalid("event time", "must lie in [0, duration]"));
            }
            if ev.time < last {
                return Err(Error::invalid("events", "must be sorted by time"));
            }
            last = ev.time;
            step_index(ev.time, self.dt, "event time")?;
            match &ev.event {
                Event::SetInitialDelta(d) if d.len() != self.config.n => {
                    return Err(Error::invalid("set_initial_delta", "length must equal n"))
                }
                Event::SetInitialDelta(d) if d.iter().any(|x| !x.is_finite()) => {
                    return Err(Error::invalid("set_initial_delta", "must be finite"))
                }
                Event::SetPfRef(p) if !p.is_finite() => {
                    return Err(Error::invalid("set_pf_ref", "must be finite"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn step_count(&self) -> Result<usize> {
        step_index(self.duration, self.dt, "duration")
    }
}

/// An event as it was applied during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedEvent<T> {
    pub time: T,
    pub event: Event<T>,
    pub delta_before: Vec<T>,
    pub delta_after: Vec<T>,
}

/// Recorded samples; each per-sample row has one entry per module.
///
/// A sample at time `t` reflects any events scheduled at `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace<T> {
    pub n: usize,
    pub times: Vec<T>,
    pub delta: Vec<Vec<T>>,
    /// Hz.
    pub frequency: Vec<Vec<T>>,
    pub active: Vec<Vec<T>>,
    pub reactive: Vec<Vec<T>>,
    pub pf_angle: Vec<Vec<T>>,
    pub events: Vec<AppliedEvent<T>>,
}

impl<T: Scalar> Trace<T> {
    fn with_modules(n: usize) -> Self {
        Self {
            n,
            times: Vec::new(),
            delta: Vec::new(),
            frequency: Vec::new(),
            active: Vec::new(),
            reactive: Vec::new(),
            pf_angle: Vec::new(),
            events: Vec::new(),
        }
    }

    fn push(&mut self, t: T, states: &[InverterState<T>]) {
        self.times.push(t);
        self.delta.push(states.iter().map(|s| s.delta).collect());
        self.frequency
            .push(states.iter().map(InverterState::frequency).collect());
        self.active
            .push(states.iter().map(|s| s.power.active).collect());
        self.reactive
            .push(states.iter().map(|s| s.power.reactive).collect());
        self.pf_angle
            .push(states.iter().map(|s| s.pf_angle).collect());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: T) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, &ti) in self.times.iter().enumerate() {
            let d = (ti - t).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Index of the last sample strictly before `t`.
    pub fn index_before(&self, t: T) -> Option<usize> {
        self.times.iter().rposition(|&ti| ti < t)
    }
}

/// Runs a scenario from `t = 0` to its duration.
///
/// Events at a step boundary are applied before the next step; module
/// angles carry over unchanged except for [`Event::SetInitialDelta`].
pub fn run_scenario<T: Scalar>(scenario: &Scenario<T>) -> Result<Trace<T>> {
    scenario.validate()?;
    let steps = scenario.step_count()?;
    let dt = scenario.dt;
    let at = |k: usize, e: Error| Error::AtTime {
        time: (T::count(k) * dt).to_f64().unwrap_or(f64::NAN),
        source: Box::new(e),
    };

    let mut config = scenario.config.clone();
    let mut trace = Trace::with_modules(config.n);
    let mut events = scenario
        .events
        .iter()
        .map(|e| Ok((step_index(e.time, dt, "event time")?, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .peekable();

    let mut states = initial_states(&config, &scenario.initial_deltas).map_err(|e| at(0, e))?;

    for k in 0..=steps {
        let mut touched = false;
        while let Some((_, ev)) = events.next_if(|(idx, _)| *idx == k) {
            let before: Vec<T> = states.iter().map(|s| s.delta).collect();
            match &ev.event {
                Event::SetMode(mode) => config.mode = *mode,
                Event::SetLoad(z) => config.load = *z,
                Event::SetLine(z) => config.line = *z,
                Event::SetPfRef(p) => {
                    config.droop = config.droop.with_pf_angle(*p).map_err(|e| at(k, e))?
                }
                Event::SetInitialDelta(d) => {
                    for (s, &d) in states.iter_mut().zip(d) {
                        s.delta = d;
                    }
                }
            }
            trace.events.push(AppliedEvent {
                time: ev.time,
                event: ev.event.clone(),
                delta_before: before,
                delta_after: states.iter().map(|s| s.delta).collect(),
            });
            touched = true;
        }
        if touched {
            states = refresh(&states, &config).map_err(|e| at(k, e))?;
        }
        if k % scenario.record_decimation == 0 || k == steps {
            trace.push(T::count(k) * dt, &states);
        }
        if k < steps {
            states = step(&states, &config, dt).map_err(|e| at(k, e))?;
        }
    }
    Ok(trace)
}

/// Symmetric islanded operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslandedEquilibrium<T> {
    /// Representative common angle; every common rotation is equivalent.
    pub delta_common: T,
    /// Hz.
    pub frequency: T,
    /// Per-module power (identical for every module).
    pub power: PowerPair<T>,
}

/// Closed-form islanded equilibrium: all angles equal, `φ_i = θ'`,
/// `f = f* − m·wrap(θ' − φ*)/(2π)`, `P_i = n·V*²·cosθ'/|Z'|`.
pub fn islanded_equilibrium<T: Scalar>(config: &SystemConfig<T>) -> Result<IslandedEquilibrium<T>> {
    config.validate()?;
    if config.mode != Mode::Islanded {
        return Err(Error::WrongMode {
            expected: "islanded",
        });
    }
    let z = config.generalized_load()?;
    let v = voltage_reference(&config.droop);
    let s = T::count(config.n) * v * v / z.magnitude();
    Ok(IslandedEquilibrium {
        delta_common: T::zero(),
        frequency: droop_frequency(z.angle(), &config.droop) / T::TAU(),
        power: PowerPair::new(s * z.angle().cos(), s * z.angle().sin()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRoot<T> {
    pub delta: T,
    pub verdict: Stability,
}

/// Synchronized grid-connected operating point(s).
#[derive(Debug, Clone, PartialEq)]
pub struct GridEquilibrium<T> {
    /// Selected root: the first stable one, else marginal, else unstable.
    pub delta_s: T,
    pub verdict: Stability,
    /// Every root found, ascending in angle.
    pub roots: Vec<GridRoot<T>>,
}

/// `wrap(φ(δ) − φ*)` with every module at angle `delta`; `None` where the
/// string carries no power.
pub fn grid_residual<T: Scalar>(config: &SystemConfig<T>, delta: T) -> Option<T> {
    let cfg = SystemConfig {
        mode: Mode::GridConnected,
        ..config.clone()
    };
    let power = cfg.module_powers(&vec![delta; cfg.n]).ok()?;
    let phi = power_factor_angle(&power[0], cfg.rated_power().ok()?).ok()?;
    Some(wrap_angle(phi - cfg.droop.nominal_pf_angle))
}

/// Scans `(-π, π]` at [`SCAN_POINTS`] resolution for sign changes of the
/// setpoint residual and refines each bracket by bisection.
pub fn grid_equilibrium<T: Scalar>(config: &SystemConfig<T>) -> Result<GridEquilibrium<T>> {
    config.validate()?;
    if config.mode != Mode::GridConnected {
        return Err(Error::WrongMode {
            expected: "grid-connected",
        });
    }
    let pi = T::PI();
    let h = T::TAU() / T::count(SCAN_POINTS);
    let grid: Vec<T> = (0..=SCAN_POINTS).map(|k| -pi + T::count(k) * h).collect();
    let residual: Vec<Option<T>> = grid.iter().map(|&d| grid_residual(config, d)).collect();
    let exact = T::lit(1e-12);
    let accept = T::lit(ROOT_ACCEPT);

    let mut found: Vec<T> = Vec::new();
    for k in 0..SCAN_POINTS {
        let (Some(r0), Some(r1)) = (residual[k], residual[k + 1]) else {
            if let Some(r0) = residual[k] {
                if r0.abs() <= exact {
                    found.push(grid[k]);
                }
            }
            continue;
        };
        if r0.abs() <= exact {
            found.push(grid[k]);
            continue;
        }
        if r1.abs() <= exact || r0.signum() == r1.signum() {
            continue;
        }
        let f = |d: T| grid_residual(config, d).unwrap_or(T::nan());
        let Some(root) = bisect(f, grid[k], grid[k + 1], T::lit(ROOT_TOL)) else {
            continue;
        };
        if grid_residual(config, root).is_some_and(|r| r.abs() <= accept) {
            found.push(root);
        }
    }

    let mut found: Vec<T> = found.into_iter().map(wrap_angle).collect();
    found.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    found.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-9));
    if found.len() > 1 {
        let first = found[0];
        let last = *found.last().expect("non-empty");
        if (first + T::TAU() - last).abs() <= T::lit(1e-9) {
            found.remove(0);
        }
    }
    if found.is_empty() {
        return Err(Error::NoRoot);
    }

    let v = config.droop.nominal_voltage;
    let roots = found
        .into_iter()
        .map(|delta| {
            let verdict =
                stability_condition(config.n, v, config.grid_voltage, delta - config.grid_angle)?;
            Ok(GridRoot { delta, verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = [Stability::Stable, Stability::Marginal, Stability::Unstable]
        .iter()
        .find_map(|want| roots.iter().find(|r| r.verdict == *want))
        .copied()
        .expect("non-empty");
    Ok(GridEquilibrium {
        delta_s: pick.delta,
        verdict: pick.verdict,
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::droop::FreqClamp;
    use std::f64::consts::{FRAC_PI_2, TAU};

    pub(crate) fn reference_plant(mode: Mode) -> SystemConfig<f64> {
        SystemConfig {
            n: 4,
            droop: DroopParams::new(
                50.0,
                315.0 / 4.0,
                0.2,
                0.5,
                Some(FreqClamp {
                    lower: 49.0,
                    upper: 51.0,
                }),
            )
            .unwrap(),
            grid_voltage: 315.0,
            grid_angle: 0.0,
            line: Impedance::new(0.314, FRAC_PI_2).unwrap(),
            load: Impedance::new(12.0, 0.0).unwrap(),
            mode,
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let mut cfg = reference_plant(Mode::Islanded);
        let theta = cfg.generalized_load().unwrap().angle();
        cfg.droop.nominal_pf_angle = theta;
        let s0 = initial_states(&cfg, &[0.3; 4]).unwrap();
        let s1 = step(&s0, &cfg, 1e-3).unwrap();
        for (a, b) in s0.iter().zip(&s1) {
            assert!((a.delta - b.delta).abs() < 1e-15);
            assert!((a.omega - TAU * 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_modules_contract() {
        let mut cfg = reference_plant(Mode::Islanded);
        cfg.n = 2;
        cfg.line = Impedance::new(0.5, 0.0).unwrap();
        let s = initial_states(&cfg, &[0.1, -0.1]).unwrap();
        // φ_i = θ' + δ_i − arg(e^{jδ_1} + e^{jδ_2}) = δ_i for a resistive load
        assert!((s[0].pf_angle - 0.1).abs() < 1e-12);
        assert!((s[1].pf_angle + 0.1).abs() < 1e-12);
        let rate_gap = s[0].omega - s[1].omega;
        assert!((rate_gap + 0.5 * 0.2).abs() < 1e-12);
        let next = step(&s, &cfg, 1e-2).unwrap();
        assert!((next[0].delta - next[1].delta) < 0.2);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let cfg = reference_plant(Mode::Islanded);
        let s0 = initial_states(&cfg, &[1.0, -0.5, 0.2, 2.0]).unwrap();
        let err = |dt: f64| {
            let one = step(&s0, &cfg, dt).unwrap();
            let half = step(&step(&s0, &cfg, dt / 2.0).unwrap(), &cfg, dt / 2.0).unwrap();
            (one[0].delta - half[0].delta).abs()
        };
        let ratio = err(0.4) / err(0.2);
        // O(dt⁵) local error: halving dt shrinks the gap about 32×
        assert!(ratio > 20.0 && ratio < 45.0, "ratio {ratio}");
    }

    #[test]
    fn zero_power_holds_setpoint_angle() {
        let cfg = reference_plant(Mode::GridConnected);
        let s = initial_states(&cfg, &[0.0; 4]).unwrap();
        for m in &s {
            assert_eq!(m.pf_angle, 0.2);
            assert_eq!(m.omega, cfg.droop.nominal_omega);
        }
    }

    #[test]
    fn islanded_equilibrium_closed_form() {
        let mut cfg = reference_plant(Mode::Islanded);
        cfg.line = Impedance::new(0.314, 0.0).unwrap();
        let eq = islanded_equilibrium(&cfg).unwrap();
        // θ' = 0, φ* = 0.2: ω = ω* + 0.1
        assert!((eq.frequency - (50.0 + 0.1 / TAU)).abs() < 1e-12);
        let z = 12.314;
        assert!((eq.power.active - 4.0 * 78.75 * 78.75 / z).abs() < 1e-9);

        let theta = cfg.generalized_load().unwrap().angle();
        cfg.droop.nominal_pf_angle = theta;
        assert_eq!(islanded_equilibrium(&cfg).unwrap().frequency, 50.0);
    }

    #[test]
    fn capacitive_load_runs_faster() {
        let mut cfg = reference_plant(Mode::Islanded);
        cfg.load = Impedance::from_rx(12.0, -6.0).unwrap();
        let f_rc = islanded_equilibrium(&cfg).unwrap().frequency;
        cfg.load = Impedance::from_rx(12.0, 6.0).unwrap();
        let f_rl = islanded_equilibrium(&cfg).unwrap().frequency;
        assert!(f_rc > f_rl);
        assert!(islanded_equilibrium(&reference_plant(Mode::GridConnected)).is_err());
    }

    #[test]
    fn grid_equilibrium_reference_plant() {
        let cfg = reference_plant(Mode::GridConnected);
        let eq = grid_equilibrium(&cfg).unwrap();
        // nV* = V_g and an inductive line: φ = δ/2 on (0, π]
        assert!((eq.delta_s - 0.4).abs() < 1e-10, "{eq:?}");
        assert_eq!(eq.verdict, Stability::Stable);
        assert!(grid_residual(&cfg, eq.delta_s).unwrap().abs() < 1e-10);
    }

    #[test]
    fn dead_grid_collapses_to_line_angle() {
        let mut cfg = reference_plant(Mode::GridConnected);
        cfg.grid_voltage = 0.0;
        assert_eq!(grid_equilibrium(&cfg).unwrap_err(), Error::NoRoot);
        cfg.droop.nominal_pf_angle = FRAC_PI_2;
        let eq = grid_equilibrium(&cfg).unwrap();
        assert!(!eq.roots.is_empty());
        assert_eq!(eq.verdict, Stability::Marginal);
    }

    #[test]
    fn scenario_validation() {
        let cfg = reference_plant(Mode::Islanded);
        let mut sc = Scenario {
            config: cfg,
            initial_deltas: vec![0.0; 4],
            events: vec![],
            duration: 1.0,
            dt: 1e-3,
            record_decimation: 10,
        };
        assert!(sc.validate().is_ok());
        sc.events.push(TimedEvent {
            time: 0.0005,
            event: Event::SetMode(Mode::GridConnected),
        });
        assert!(sc.validate().is_err());
        sc.events[0].time = 2.0;
        assert!(sc.validate().is_err());
        sc.events[0].time = 0.5;
        sc.events.push(TimedEvent {
            time: 0.25,
            event: Event::SetPfRef(0.1),
        });
        assert!(sc.validate().is_err());
        sc.events.pop();
        sc.initial_deltas.pop();
        assert!(sc.validate().is_err());
    }

    #[test]
    fn flat_trace_at_equilibrium() {
        let sc = Scenario {
            config: reference_plant(Mode::Islanded),
            initial_deltas: vec![0.7; 4],
            events: vec![],
            duration: 0.5,
            dt: 1e-3,
            record_decimation: 10,
        };
        let tr = run_scenario(&sc).unwrap();
        assert_eq!(tr.len(), 51);
        let f0 = &tr.frequency[0];
        for row in &tr.frequency {
            for (a, b) in row.iter().zip(f0) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        for w in tr.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn singular_load_reports_event_time() {
        let mut sc = Scenario {
            config: reference_plant(Mode::Islanded),
            initial_deltas: vec![0.0; 4],
            events: vec![TimedEvent {
                time: 0.1,
                event: Event::SetLoad(Impedance::new(0.314, -FRAC_PI_2).unwrap()),
            }],
            duration: 0.2,
            dt: 1e-3,
            record_decimation: 1,
        };
        let err = run_scenario(&sc).unwrap_err();
        match err {
            Error::AtTime { time, source } => {
                assert!((time - 0.1).abs() < 1e-12);
                assert!(matches!(*source, Error::SingularImpedance { .. }));
            }
            e => panic!("unexpected {e:?}"),
        }
        sc.events.clear();
        assert!(run_scenario(&sc).is_ok());
    }
}
