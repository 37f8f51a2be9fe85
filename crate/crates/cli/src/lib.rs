//! Scenario files, the built-in demonstration cases, and text/CSV output for
//! the `cascade-droop` command-line tool.

pub mod cases;
pub mod error;
pub mod report;
pub mod scenario_file;
pub mod trace_csv;

pub use cases::{
    case_scenario, evaluate_case, final_config, reference_plant, run_case, scenario_checks,
    Overrides, CASES,
};
pub use error::{CliError, Result};
pub use report::{report_stability, CaseReport, Check, Range, StabilityReport, Sweep};
pub use scenario_file::{parse_scenario, serialize_scenario};
pub use trace_csv::{emit_trace_csv, format_sig, trace_to_csv};
