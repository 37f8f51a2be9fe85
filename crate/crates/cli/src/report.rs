//! Plain-text reports: per-case acceptance checks and grid-mode stability.

use std::fmt::Write as _;
use std::path::PathBuf;

use cascade_droop::{
    grid_equilibrium, islanded_jacobian, stability_condition, Mode, Stability, SystemConfig,
};

use crate::error::{CliError, Result};
use crate::trace_csv::format_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Passes when `measured <= tol`.
    AtMost,
    /// Passes when `measured > tol`.
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tol: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tol,
            bound: Bound::AtMost,
        }
    }

    pub fn above(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tol,
            bound: Bound::Above,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.tol,
            Bound::Above => self.measured > self.tol,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "CHECK {} {} measured={} tol={}",
            self.name,
            if self.passed() { "pass" } else { "fail" },
            format_sig(self.measured),
            format_sig(self.tol)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case: usize,
    pub title: String,
    /// Artifact choices the built-in scenario makes where the source is silent.
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub trace_path: Option<PathBuf>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = if self.case == 0 {
            format!("{}\n", self.title)
        } else {
            format!("case {}: {}\n", self.case, self.title)
        };
        for note in &self.notes {
            let _ = writeln!(out, "default: {note}");
        }
        if let Some(p) = self.trace_path.as_ref().and_then(|p| p.file_name()) {
            let _ = writeln!(out, "trace: {}", p.to_string_lossy());
        }
        for c in &self.checks {
            out.push_str(&c.line());
            out.push('\n');
        }
        out
    }
}

/// Inclusive range `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    pub fn single(v: f64) -> Self {
        Self {
            lo: v,
            hi: v,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor().max(0.0) as usize;
        (0..=count)
            .map(|k| self.lo + k as f64 * self.step)
            .collect()
    }
}

impl std::str::FromStr for Range {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::validation("sweep", format!("expected lo:hi:step, got {s:?}"));
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let r = match nums.as_slice() {
            [v] => Range::single(*v),
            [lo, hi, step] => Range {
                lo: *lo,
                hi: *hi,
                step: *step,
            },
            _ => return Err(bad()),
        };
        if !r.lo.is_finite()
            || !r.hi.is_finite()
            || !r.step.is_finite()
            || r.step <= 0.0
            || r.hi < r.lo
        {
            return Err(CliError::validation(
                "sweep",
                "needs finite lo <= hi and step > 0",
            ));
        }
        if r.values().len() > 100_000 {
            return Err(CliError::validation("sweep", "more than 100000 points"));
        }
        Ok(r)
    }
}

/// Grid of operating points for the stability table.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// `δ_s − δ_g`, rad.
    pub angle: Range,
    /// V*, volts. `None` keeps the configured value.
    pub v_star: Option<Range>,
}

impl Sweep {
    /// Parses `angle=<lo:hi:step>` and `vstar=<lo:hi:step>` terms.
    pub fn parse(terms: &[String]) -> Result<Self> {
        let mut angle = None;
        let mut v_star = None;
        for term in terms {
            let (key, value) = term.split_once('=').ok_or_else(|| {
                CliError::validation("sweep", format!("expected key=range, got {term:?}"))
            })?;
            match key.trim() {
                "angle" => angle = Some(value.parse()?),
                "vstar" => v_star = Some(value.parse()?),
                other => {
                    return Err(CliError::validation(
                        "sweep",
                        format!("unknown key {other:?}"),
                    ))
                }
            }
        }
        Ok(Self {
            angle: angle.unwrap_or(Range::single(0.0)),
            v_star,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub angle_diff: f64,
    pub v_star: f64,
    /// `None` at the degenerate point.
    pub lambda1: Option<f64>,
    pub verdict: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub delta_s: f64,
    pub lambda1: f64,
    pub lambda_rest: f64,
    pub verdict: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub droop_gain: f64,
    pub v_star: f64,
    pub v_grid: f64,
    pub grid_angle: f64,
    pub islanded_eigs: Vec<f64>,
    pub operating: std::result::Result<OperatingPoint, String>,
    pub rows: Vec<SweepRow>,
}

fn sweep_row(config: &SystemConfig<f64>, angle_diff: f64, v_star: f64) -> Result<SweepRow> {
    let n = config.n;
    let m = config.droop.droop_gain;
    let verdict = stability_condition(n, v_star, config.grid_voltage, angle_diff)?;
    let lambda1 = match cascade_droop::grid_ab(n, v_star, config.grid_voltage, angle_diff) {
        Ok(lin) => Some(-m * (lin.a + (n as f64 - 1.0) * lin.b)),
        Err(cascade_droop::Error::DegeneratePoint { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SweepRow {
        angle_diff,
        v_star,
        lambda1,
        verdict,
    })
}

/// Grid-mode stability at the configured operating point, plus an optional
/// table of verdicts. Only `n`, `m`, `V*`, `V_g` and the angle enter a
/// verdict; the line impedance only moves where the operating point sits.
pub fn report_stability(
    config: &SystemConfig<f64>,
    sweep: Option<&Sweep>,
) -> Result<StabilityReport> {
    config.validate()?;
    let grid_cfg = SystemConfig {
        mode: Mode::GridConnected,
        ..config.clone()
    };
    let m = config.droop.droop_gain;
    let operating = grid_equilibrium(&grid_cfg)
        .and_then(|eq| {
            let lm = grid_cfg.grid_linear_model(eq.delta_s)?;
            let lin = cascade_droop::grid_ab(
                config.n,
                config.droop.nominal_voltage,
                config.grid_voltage,
                eq.delta_s - config.grid_angle,
            )?;
            Ok(OperatingPoint {
                delta_s: eq.delta_s,
                lambda1: -m * (lin.a + (config.n as f64 - 1.0) * lin.b),
                lambda_rest: -m,
                verdict: lm.stable,
            })
        })
        .map_err(|e| e.to_string());

    let mut rows = Vec::new();
    if let Some(sweep) = sweep {
        let v_values = sweep
            .v_star
            .map_or_else(|| vec![config.droop.nominal_voltage], |r| r.values());
        for &v in &v_values {
            for a in sweep.angle.values() {
                rows.push(sweep_row(config, a, v)?);
            }
        }
    }

    Ok(StabilityReport {
        n: config.n,
        droop_gain: config.droop.droop_gain,
        v_star: config.droop.nominal_voltage,
        v_grid: config.grid_voltage,
        grid_angle: config.grid_angle,
        islanded_eigs: islanded_jacobian(config.n, config.droop.droop_gain)?.analytic_eigs,
        operating,
        rows,
    })
}

impl StabilityReport {
    /// The parts of the report that depend only on the verdict inputs.
    pub fn verdicts(&self) -> Vec<(String, Stability)> {
        self.rows
            .iter()
            .map(|r| {
                (
                    format!("{}:{}", format_sig(r.angle_diff), format_sig(r.v_star)),
                    r.verdict,
                )
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("stability report\n");
        let _ = writeln!(
            out,
            "n={} m={} v_star={} v_grid={} grid_angle={}",
            self.n,
            format_sig(self.droop_gain),
            format_sig(self.v_star),
            format_sig(self.v_grid),
            format_sig(self.grid_angle)
        );
        let eigs: Vec<String> = self.islanded_eigs.iter().map(|&e| format_sig(e)).collect();
        let _ = writeln!(
            out,
            "islanded eigenvalues: {} verdict=marginal",
            eigs.join(" ")
        );
        match &self.operating {
            Ok(op) => {
                let _ = writeln!(
                    out,
                    "grid operating point: delta_s={} lambda1={} lambda2..n={} verdict={}",
                    format_sig(op.delta_s),
                    format_sig(op.lambda1),
                    format_sig(op.lambda_rest),
                    op.verdict
                );
            }
            Err(msg) => {
                let _ = writeln!(out, "grid operating point: unavailable ({msg})");
            }
        }
        if !self.rows.is_empty() {
            out.push_str("angle_diff v_star lambda1 verdict\n");
            for r in &self.rows {
                let l = r
                    .lambda1
                    .map_or_else(|| "degenerate".to_string(), format_sig);
                let _ = writeln!(
                    out,
                    "{} {} {} {}",
                    format_sig(r.angle_diff),
                    format_sig(r.v_star),
                    l,
                    r.verdict
                );
            }
        }
        out
    }
}
