//! Experiment harness around `poswise-core`: flag parsing, the two-optimizer
//! comparison run and its CSV, JSON and SVG outputs.

pub mod args;
pub mod error;
pub mod experiment;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use error::{exit, CliError};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, RunReport};

fn summary_line(kind: poswise_core::OptimizerKind, r: &RunReport) -> String {
    let reached = match r.epochs_to_threshold {
        Some(e) => format!("reached threshold at epoch {e}"),
        None if r.diverged => format!("diverged after {} epochs", r.epochs_run),
        None => format!("did not reach threshold in {} epochs", r.epochs_run),
    };
    format!(
        "{:<8} {reached}, final loss {:.6}, {:.3}s",
        kind.name(),
        r.final_loss,
        r.wall_seconds
    )
}

/// Runs the tool on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match args::Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let result = args
        .resolve()
        .and_then(|cfg| run_experiment(&cfg))
        .and_then(|report| output::write_outputs(&report, &args.out).map(|_| report));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    for (kind, r) in report.requested() {
        let _ = writeln!(stdout, "{}", summary_line(kind, r));
    }
    if report.any_diverged() {
        exit::DIVERGED
    } else if report.all_reached_threshold() {
        exit::OK
    } else {
        exit::THRESHOLD_NOT_REACHED
    }
}
