mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigError, ProblemArgs};
use hullscope::Error;

/// Exit status for a failed command.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_)) => 2,
        Some(
            Error::InvalidData(_)
            | Error::ZeroColumns { .. }
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Empty(_)
            | Error::DimensionMismatch { .. },
        ) => 3,
        Some(Error::NonConvergence { .. }) => 4,
        Some(
            Error::BracketFailure { .. }
            | Error::NonMonotone { .. }
            | Error::BisectionExhausted(_)
            | Error::TooManyFailures { .. },
        ) => 5,
        _ if err.downcast_ref::<std::io::Error>().is_some() => 3,
        _ => 6,
    }
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> anyhow::Result<T> + Send) -> anyhow::Result<T>
where
    T: Send,
{
    match workers {
        None => f(),
        Some(0) => Err(ConfigError("--workers must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?
            .install(f),
    }
}

fn problem(p: ProblemArgs, config: Option<std::path::PathBuf>) -> anyhow::Result<ProblemArgs> {
    p.with_config(config.as_deref())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(a) => {
            let p = problem(a.problem, a.config)?;
            with_workers(p.workers, || commands::run(&p))
        }
        Command::Curve(a) => {
            let p = problem(a.problem, a.config)?;
            with_workers(p.workers, || commands::curve(&p))
        }
        Command::Fit(a) => {
            let p = problem(a.problem, a.config)?;
            with_workers(p.workers, || commands::fit(&p))
        }
        Command::Project(a) => commands::project(&a),
        Command::Gen(a) => commands::gen(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
