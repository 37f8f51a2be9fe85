//! CSV serialization of simulation traces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cascade_droop::Trace;

use crate::error::{CliError, Result};

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e9)`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Renders `time,f1..fn,P1..Pn,Q1..Qn,phi1..phin` followed by one row per sample.
pub fn trace_to_csv(trace: &Trace<f64>) -> Result<String> {
    if trace.is_empty() {
        return Err(CliError::EmptyTrace);
    }
    let n = trace.n;
    let mut out = String::from("time");
    for prefix in ["f", "P", "Q", "phi"] {
        for i in 1..=n {
            let _ = write!(out, ",{prefix}{i}");
        }
    }
    out.push('\n');
    for k in 0..trace.len() {
        out.push_str(&format_sig(trace.times[k]));
        for channel in [
            &trace.frequency,
            &trace.active,
            &trace.reactive,
            &trace.pf_angle,
        ] {
            for v in &channel[k] {
                out.push(',');
                out.push_str(&format_sig(*v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_trace_csv(trace: &Trace<f64>, path: &Path) -> Result<()> {
    let text = trace_to_csv(trace)?;
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
