//! `windtube`: runs one pipeline command from a TOML configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 validation failure.

mod config;
mod output;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use windtube::Error;

use config::{Command, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "windtube", version, about = "Field-line winding and helicity on tubular domains")]
struct Args {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `command` in the configuration.
    #[arg(long, value_enum)]
    command: Option<Command>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "WINDTUBE_THREADS")]
    threads: Option<usize>,
    /// Overrides `tolerances.trace`.
    #[arg(long)]
    tol_trace: Option<f64>,
    /// Overrides `grid.n_r`.
    #[arg(long)]
    grid_nr: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: &'static str,
    pub exit_code: u8,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const VALIDATION: u8 = 4;

    pub fn config(message: impl Into<String>) -> Self {
        Failure { stage: "config", exit_code: Self::CONFIG, message: message.into() }
    }

    pub fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        Failure { stage, exit_code: Self::VALIDATION, message: message.into() }
    }

    /// Classifies a library error raised while running `stage`.
    pub fn at(stage: &'static str) -> impl Fn(Error) -> Failure {
        move |e| {
            let exit_code = match root(&e) {
                Error::InvalidDomain(_) | Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_) => Self::CONFIG,
                Error::InvalidMesh(_)
                | Error::MissingBoundaryTag(_)
                | Error::FlippedSurfaceMap(_)
                | Error::NotSolenoidal { .. }
                | Error::InvalidField(_) => Self::VALIDATION,
                _ => Self::NUMERICAL,
            };
            Failure { stage, exit_code, message: e.to_string() }
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::NodeTrace { source, .. } => root(source),
        e => e,
    }
}

fn effective_config(args: &Args) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = args.command {
        cfg.command = c;
    }
    if let Some(o) = &args.out {
        cfg.out.clone_from(o);
    }
    if let Some(t) = args.tol_trace {
        cfg.tolerances.trace = t;
    }
    if let Some(n) = args.grid_nr {
        cfg.grid.n_r = n;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let threads = args.threads.unwrap_or(0);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("windtube: thread pool: {e}");
    }
    let cfg = match effective_config(&args) {
        Ok(c) => c,
        Err(f) => return report(&f, None, args.out.as_deref()),
    };
    if let Err(f) = cfg.validate() {
        return report(&f, Some(&cfg), Some(&cfg.out));
    }
    match run::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f, Some(&cfg), Some(&cfg.out)),
    }
}

/// Prints the error JSON and, when the output directory exists, saves it there.
fn report(f: &Failure, cfg: Option<&RunConfig>, out: Option<&std::path::Path>) -> ExitCode {
    let json = serde_json::json!({
        "error": f,
        "config": cfg.map(RunConfig::to_json),
    });
    let text = serde_json::to_string_pretty(&json).expect("error serializes");
    eprintln!("{text}");
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join("error.json"), text + "\n");
    }
    ExitCode::from(f.exit_code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        let code = |e| Failure::at("x")(e).exit_code;
        assert_eq!(code(Error::InvalidDomain("r".into())), Failure::CONFIG);
        assert_eq!(code(Error::SingularPair(0.0)), Failure::NUMERICAL);
        assert_eq!(code(Error::NotSolenoidal { rms: 1.0, tol: 0.1 }), Failure::VALIDATION);
        let nested = Error::NodeTrace { node: 3, source: Box::new(Error::InvalidField("f".into())) };
        assert_eq!(code(nested), Failure::VALIDATION);
    }
}
