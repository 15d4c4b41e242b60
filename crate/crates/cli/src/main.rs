mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use fkm_core::FkmError;

use args::{Cli, Command};

const THREADS_ENV: &str = "FKM_THREADS";

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| FkmError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

/// Stable short tag and exit status for an error chain. Inconsistent
/// flags are usage errors (2); everything else is a data or numeric
/// failure (1).
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<FkmError>() {
            let code = match e {
                FkmError::InvalidConfig(_) | FkmError::InvalidBasis(_) | FkmError::Unsupported(_) => 2,
                _ => 1,
            };
            return (e.kind(), code);
        }
        if cause.downcast_ref::<csv::Error>().is_some() {
            return ("csv", 1);
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return ("json", 1);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("error", 1)
}

/// The error chain joined with `: `, skipping causes already quoted by
/// the message above them.
fn one_line(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !parts.last().is_some_and(|p| p.contains(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ").replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_threads().and_then(|()| match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::CenterDistance(a) => commands::center_distance(a),
        Command::SelectLambda(a) => commands::select_lambda(a),
        Command::PopulationCenters(a) => commands::population_centers(a),
        Command::Benchmark(a) => commands::benchmark(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = classify(&err);
            let msg = one_line(&err);
            eprintln!("error[{kind}]: {msg}");
            ExitCode::from(code)
        }
    }
}
