use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cascade_droop::run_scenario;
use cascade_droop_cli::{
    emit_trace_csv, parse_scenario, report_stability, run_case, scenario_checks, CaseReport,
    CliError, Overrides, Sweep, CASES,
};

#[derive(Parser)]
#[command(
    name = "cascade-droop",
    version,
    about = "Power factor angle droop simulator for cascaded inverters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct OverrideArgs {
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time (s).
    #[arg(long)]
    duration: Option<f64>,
    /// Disable the frequency clamp.
    #[arg(long)]
    no_clamp: bool,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            dt: a.dt,
            duration: a.duration,
            no_clamp: a.no_clamp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file; writes <stem>.csv and <stem>_report.txt.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run a built-in case (1-5) or `all`.
    Case {
        which: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Print the small-signal stability report for a scenario file.
    Stability {
        file: PathBuf,
        /// Sweep terms: angle=lo:hi:step and/or vstar=lo:hi:step.
        #[arg(long, num_args = 1..)]
        sweep: Vec<String>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn simulate(file: &Path, out: &Path, overrides: Overrides) -> Result<String, CliError> {
    let mut scenario = parse_scenario(&read(file)?)?;
    overrides.apply(&mut scenario)?;
    let trace = run_scenario(&scenario)?;
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let stem = file
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    let csv = out.join(format!("{stem}.csv"));
    emit_trace_csv(&trace, &csv)?;
    let report = CaseReport {
        case: 0,
        title: format!("scenario {stem}"),
        notes: Vec::new(),
        checks: scenario_checks(&scenario, &trace)?,
        trace_path: Some(csv),
    };
    let text = report.render();
    let path = out.join(format!("{stem}_report.txt"));
    fs::write(&path, &text).map_err(|source| CliError::Io { path, source })?;
    Ok(text)
}

fn cases(which: &str, out: &Path, overrides: Overrides) -> Result<String, CliError> {
    let selected: Vec<usize> = if which == "all" {
        CASES.to_vec()
    } else {
        let k = which.parse().map_err(|_| {
            CliError::validation("case", format!("expected 1-5 or all, got {which:?}"))
        })?;
        vec![k]
    };
    let results: Vec<Result<CaseReport, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&k| s.spawn(move || run_case(k, out, &overrides)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("case thread panicked"))
            .collect()
    });
    let mut text = String::new();
    for r in results {
        text.push_str(&r?.render());
    }
    Ok(text)
}

fn stability(file: &Path, sweep: &[String]) -> Result<String, CliError> {
    let scenario = parse_scenario(&read(file)?)?;
    let sweep = if sweep.is_empty() {
        None
    } else {
        Some(Sweep::parse(sweep)?)
    };
    Ok(report_stability(&scenario.config, sweep.as_ref())?.render())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            file,
            out,
            overrides,
        } => simulate(file, out, (*overrides).into()),
        Command::Case {
            which,
            out,
            overrides,
        } => cases(which, out, (*overrides).into()),
        Command::Stability { file, sweep } => stability(file, sweep),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
