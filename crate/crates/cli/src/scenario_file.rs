//! TOML scenario documents.
//!
//! ```toml
//! [system]
//! n = 4
//! frequency = 50.0        # f*, Hz
//! v_star = 78.75          # V*, V
//! v_grid = 315.0          # V_g, V
//! grid_angle = 0.0        # δ_g, rad (optional)
//! pf_ref = 0.2            # φ*, rad
//! droop_gain = 0.5        # m, rad/s per rad
//! clamp = [49.0, 51.0]    # Hz (optional)
//! clamp_enabled = true    # optional
//! mode = "grid-connected" # or "islanded"
//!
//! [line]
//! magnitude = 0.314       # ohm; or r/x (ohm), l (H), c (F)
//! angle = 1.5707963267948966
//!
//! [load]
//! r = 12.0
//!
//! [initial]
//! delta = [0.0, 0.0, 0.0, 0.0]
//!
//! [[events]]
//! time = 2.0
//! mode = "islanded"
//!
//! [solver]
//! dt = 0.001
//! duration = 7.0
//! decimation = 10
//! ```

use cascade_droop::{
    DroopParams, Event, FreqClamp, Impedance, Mode, Scenario, SystemConfig, TimedEvent,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DECIMATION: usize = 10;
pub const DEFAULT_CLAMP: [f64; 2] = [49.0, 51.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeName {
    Islanded,
    GridConnected,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Islanded => Mode::Islanded,
            ModeName::GridConnected => Mode::GridConnected,
        }
    }
}

impl From<Mode> for ModeName {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Islanded => ModeName::Islanded,
            Mode::GridConnected => ModeName::GridConnected,
        }
    }
}

fn default_clamp() -> [f64; 2] {
    DEFAULT_CLAMP
}

fn default_true() -> bool {
    true
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_decimation() -> usize {
    DEFAULT_DECIMATION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    system: SystemSection,
    line: ImpedanceSection,
    load: ImpedanceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<EventSection>,
    solver: SolverSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    n: usize,
    frequency: f64,
    v_star: f64,
    v_grid: f64,
    #[serde(default)]
    grid_angle: f64,
    pf_ref: f64,
    droop_gain: f64,
    #[serde(default = "default_clamp")]
    clamp: [f64; 2],
    #[serde(default = "default_true")]
    clamp_enabled: bool,
    mode: ModeName,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImpedanceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    delta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventSection {
    time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<ModeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load: Option<ImpedanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<ImpedanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pf_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    #[serde(default = "default_dt")]
    dt: f64,
    duration: f64,
    #[serde(default = "default_decimation")]
    decimation: usize,
}

impl ImpedanceSection {
    fn polar(z: &Impedance<f64>) -> Self {
        Self {
            magnitude: Some(z.magnitude()),
            angle: Some(z.angle()),
            ..Self::default()
        }
    }

    fn to_impedance(&self, field: &str, omega: f64) -> Result<Impedance<f64>> {
        let polar = self.magnitude.is_some() || self.angle.is_some();
        let rect = self.r.is_some() || self.x.is_some() || self.l.is_some() || self.c.is_some();
        let invalid = |what: &str| CliError::validation(field, what);
        let z = match (polar, rect) {
            (true, true) => {
                return Err(invalid("give either magnitude/angle or r/x/l/c, not both"))
            }
            (false, false) => return Err(invalid("needs magnitude/angle or r/x/l/c")),
            (true, false) => {
                let magnitude = self
                    .magnitude
                    .ok_or_else(|| invalid("magnitude is required with angle"))?;
                Impedance::new(magnitude, self.angle.unwrap_or(0.0))
            }
            (false, true) => {
                let mut x = self.x.unwrap_or(0.0);
                if let Some(l) = self.l {
                    if !l.is_finite() || l < 0.0 {
                        return Err(invalid("inductance l must be >= 0"));
                    }
                    x += omega * l;
                }
                if let Some(c) = self.c {
                    if !c.is_finite() || c <= 0.0 {
                        return Err(invalid("capacitance c must be > 0"));
                    }
                    x -= 1.0 / (omega * c);
                }
                Impedance::from_rx(self.r.unwrap_or(0.0), x)
            }
        };
        z.map_err(|e| match e {
            cascade_droop::Error::Invalid { constraint, .. } => {
                CliError::validation(field, constraint)
            }
            e => e.into(),
        })
    }
}

fn parse_error(text: &str, err: &toml::de::Error) -> CliError {
    let offset = err.span().map_or(0, |s| s.start).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    CliError::Parse {
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

fn model_to_validation(e: cascade_droop::Error) -> CliError {
    match e {
        cascade_droop::Error::Invalid { field, constraint } => {
            CliError::validation(field, constraint)
        }
        e => e.into(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario<f64>> {
    let doc: Document = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let sys = &doc.system;
    let [lower, upper] = sys.clamp;
    let clamp = sys.clamp_enabled.then_some(FreqClamp { lower, upper });
    let droop = DroopParams::new(sys.frequency, sys.v_star, sys.pf_ref, sys.droop_gain, clamp)
        .map_err(model_to_validation)?;
    let omega = droop.nominal_omega;

    let config = SystemConfig {
        n: sys.n,
        droop,
        grid_voltage: sys.v_grid,
        grid_angle: sys.grid_angle,
        line: doc.line.to_impedance("line", omega)?,
        load: doc.load.to_impedance("load", omega)?,
        mode: sys.mode.into(),
    };

    let initial_deltas = match &doc.initial {
        Some(init) => init.delta.clone(),
        None => vec![0.0; sys.n],
    };

    let events = doc
        .events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let set = [
                ev.mode.is_some(),
                ev.load.is_some(),
                ev.line.is_some(),
                ev.pf_ref.is_some(),
                ev.delta.is_some(),
            ]
            .iter()
            .filter(|&&b| b)
            .count();
            if set != 1 {
                return Err(CliError::validation(
                    format!("events[{i}]"),
                    "exactly one of mode, load, line, pf_ref, delta is required",
                ));
            }
            let event = if let Some(m) = ev.mode {
                Event::SetMode(m.into())
            } else if let Some(z) = &ev.load {
                Event::SetLoad(z.to_impedance(&format!("events[{i}].load"), omega)?)
            } else if let Some(z) = &ev.line {
                Event::SetLine(z.to_impedance(&format!("events[{i}].line"), omega)?)
            } else if let Some(p) = ev.pf_ref {
                Event::SetPfRef(p)
            } else {
                Event::SetInitialDelta(ev.delta.clone().unwrap_or_default())
            };
            Ok(TimedEvent {
                time: ev.time,
                event,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scenario = Scenario {
        config,
        initial_deltas,
        events,
        duration: doc.solver.duration,
        dt: doc.solver.dt,
        record_decimation: doc.solver.decimation,
    };
    scenario.validate().map_err(model_to_validation)?;
    Ok(scenario)
}

/// Writes a scenario back out in canonical form (impedances in polar form).
pub fn serialize_scenario(scenario: &Scenario<f64>) -> String {
    let cfg = &scenario.config;
    let clamp = cfg.droop.freq_clamp;
    let doc = Document {
        system: SystemSection {
            n: cfg.n,
            frequency: cfg.droop.nominal_frequency(),
            v_star: cfg.droop.nominal_voltage,
            v_grid: cfg.grid_voltage,
            grid_angle: cfg.grid_angle,
            pf_ref: cfg.droop.nominal_pf_angle,
            droop_gain: cfg.droop.droop_gain,
            clamp: clamp.map_or(DEFAULT_CLAMP, |c| [c.lower, c.upper]),
            clamp_enabled: clamp.is_some(),
            mode: cfg.mode.into(),
        },
        line: ImpedanceSection::polar(&cfg.line),
        load: ImpedanceSection::polar(&cfg.load),
        initial: Some(InitialSection {
            delta: scenario.initial_deltas.clone(),
        }),
        events: scenario
            .events
            .iter()
            .map(|ev| {
                let mut out = EventSection {
                    time: ev.time,
                    mode: None,
                    load: None,
                    line: None,
                    pf_ref: None,
                    delta: None,
                };
                match &ev.event {
                    Event::SetMode(m) => out.mode = Some((*m).into()),
                    Event::SetLoad(z) => out.load = Some(ImpedanceSection::polar(z)),
                    Event::SetLine(z) => out.line = Some(ImpedanceSection::polar(z)),
                    Event::SetPfRef(p) => out.pf_ref = Some(*p),
                    Event::SetInitialDelta(d) => out.delta = Some(d.clone()),
                }
                out
            })
            .collect(),
        solver: SolverSection {
            dt: scenario.dt,
            duration: scenario.duration,
            decimation: scenario.record_decimation,
        },
    };
    toml::to_string(&doc).expect("scenario document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) const REFERENCE: &str = r#"
[system]
n = 4
frequency = 50.0
v_star = 78.75
v_grid = 315.0
pf_ref = 0.2
droop_gain = 0.5
mode = "grid-connected"

[line]
x = 0.314

[load]
r = 12.0

[solver]
duration = 1.0
"#;

    #[test]
    fn reference_document() {
        let sc = parse_scenario(REFERENCE).unwrap();
        let c = &sc.config;
        assert_eq!(c.grid_voltage, 315.0);
        assert_eq!(c.droop.nominal_voltage, 78.75);
        assert_eq!(c.droop.droop_gain, 0.5);
        assert_eq!(c.droop.nominal_pf_angle, 0.2);
        assert!((c.line.magnitude() - 0.314).abs() < 1e-15);
        assert_eq!(c.line.angle(), FRAC_PI_2);
        assert_eq!(sc.dt, 1e-3);
        assert_eq!(sc.record_decimation, 10);
        let clamp = c.droop.freq_clamp.unwrap();
        assert_eq!((clamp.lower, clamp.upper), (49.0, 51.0));
        assert_eq!(sc.initial_deltas, vec![0.0; 4]);
    }

    #[test]
    fn negative_gain_is_a_validation_error() {
        let text = REFERENCE.replace("droop_gain = 0.5", "droop_gain = -1.0");
        match parse_scenario(&text).unwrap_err() {
            CliError::Validation { field, .. } => assert_eq!(field, "droop_gain"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = REFERENCE.replace("droop_gain = 0.5", "droop_gain = 0.5\nspeed = 3");
        match parse_scenario(&text).unwrap_err() {
            e @ CliError::Parse { line, .. } => {
                assert_eq!(line, 9, "{e}");
                assert_eq!(e.exit_code(), 1);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_value_reports_line() {
        let text = REFERENCE.replace("v_grid = 315.0", "v_grid = \"high\"");
        assert!(matches!(
            parse_scenario(&text),
            Err(CliError::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn rlc_load_at_nominal_frequency() {
        let text = REFERENCE.replace("[load]\nr = 12.0", "[load]\nr = 12.0\nl = 0.02\nc = 0.001");
        let sc = parse_scenario(&text).unwrap();
        let w = 2.0 * std::f64::consts::PI * 50.0;
        let x = w * 0.02 - 1.0 / (w * 0.001);
        assert!((sc.config.load.reactance() - x).abs() < 1e-12);
    }

    #[test]
    fn mixed_impedance_forms_rejected() {
        let text = REFERENCE.replace("[line]\nx = 0.314", "[line]\nx = 0.314\nmagnitude = 1.0");
        assert!(matches!(
            parse_scenario(&text),
            Err(CliError::Validation { .. })
        ));
    }

    #[test]
    fn events_need_exactly_one_action() {
        let text = format!("{REFERENCE}\n[[events]]\ntime = 0.5\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(CliError::Validation { .. })
        ));
        let text =
            format!("{REFERENCE}\n[[events]]\ntime = 0.5\nmode = \"islanded\"\npf_ref = 0.1\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(CliError::Validation { .. })
        ));
    }

    #[test]
    fn misaligned_event_rejected() {
        let text = format!("{REFERENCE}\n[[events]]\ntime = 0.0005\nmode = \"islanded\"\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(CliError::Validation { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{REFERENCE}\n[[events]]\ntime = 0.5\nmode = \"islanded\"\n\n[[events]]\ntime = 0.5\nload = {{ r = 12.0, x = 6.0 }}\n\n[[events]]\ntime = 0.75\ndelta = [0.1, 0.0, 0.0, 0.0]\n"
        );
        let sc = parse_scenario(&text).unwrap();
        let again = parse_scenario(&serialize_scenario(&sc)).unwrap();
        assert_eq!(sc, again);
    }
}
