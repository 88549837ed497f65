//! Argument parsing and the run lifecycle: resolve, execute, persist.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::execute;
use crate::config::{Command, Params, RunConfig};
use crate::error::{CliResult, ExitCode};
use crate::executor::PoolExecutor;
use crate::output::{unix_ms, ErrorRecord, OutputDir, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "locword", version, about = "Random word Schrödinger operators: Monte Carlo experiments and oracle checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Lyapunov exponent on an energy grid
    Lyapunov(RunArgs),
    /// Critical energies where the Lyapunov exponent vanishes
    Critical(RunArgs),
    /// Eigenvalues of one finite restriction
    Spectrum(RunArgs),
    /// Green's function: Cramer route against direct solve and dense inverse
    GreenCheck(RunArgs),
    /// Probability that a box is regular
    Regularity(RunArgs),
    /// Large-deviation probabilities of the transfer-matrix growth
    Ldp(RunArgs),
    /// Eigenfunction correlator decay
    Correlator(RunArgs),
    /// Decay of the band-projected eigenfunction kernel
    Edl(RunArgs),
    /// Time-averaged transport moments
    Transport(RunArgs),
    /// Polynomial sup bound from values on shifted Chebyshev nodes
    ChebCheck(RunArgs),
    /// All brute-force oracle suites
    Verify(RunArgs),
    /// Subcommand taken from the config file's "subcommand" field
    Run(RunArgs),
}

impl Sub {
    fn split(self) -> (Option<Command>, RunArgs) {
        match self {
            Sub::Lyapunov(a) => (Some(Command::Lyapunov), a),
            Sub::Critical(a) => (Some(Command::Critical), a),
            Sub::Spectrum(a) => (Some(Command::Spectrum), a),
            Sub::GreenCheck(a) => (Some(Command::GreenCheck), a),
            Sub::Regularity(a) => (Some(Command::Regularity), a),
            Sub::Ldp(a) => (Some(Command::Ldp), a),
            Sub::Correlator(a) => (Some(Command::Correlator), a),
            Sub::Edl(a) => (Some(Command::Edl), a),
            Sub::Transport(a) => (Some(Command::Transport), a),
            Sub::ChebCheck(a) => (Some(Command::ChebCheck), a),
            Sub::Verify(a) => (Some(Command::Verify), a),
            Sub::Run(a) => (None, a),
        }
    }
}

/// Parses `args`, runs, and returns the process exit code.
/// `seed_env` is the value of `LOCWORD_SEED`, if set.
pub fn main_with<I, T>(args: I, seed_env: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Usage.code() } else { ExitCode::Success.code() };
        }
    };
    let (command, args) = cli.command.split();
    match run(command, args, seed_env) {
        Ok(report) => {
            println!("{report}");
            ExitCode::Success.code()
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.code.kind(), e.message);
            e.code.code()
        }
    }
}

/// Resolves the configuration, executes, and writes the manifest.
pub fn run(command: Option<Command>, args: RunArgs, seed_env: Option<String>) -> CliResult<String> {
    let cfg = RunConfig::resolve(command, args.config.as_ref(), args.params, seed_env)?;
    let exec = PoolExecutor::new(cfg.workers)?;
    let config_hash = cfg.hash()?;
    let started = unix_ms();
    let mut out = OutputDir::prepare(&cfg.out)?;
    let result = out.write_bytes("config.json", cfg.canonical()?.as_bytes()).and_then(|()| execute(&cfg, &exec, &mut out));
    let manifest = RunManifest {
        subcommand: cfg.command.name().into(),
        config_hash,
        seed: cfg.seed(),
        version: env!("CARGO_PKG_VERSION").into(),
        workers: exec.workers(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        files: Vec::new(),
        status: if result.is_ok() { "ok" } else { "error" }.into(),
        error: result.as_ref().err().map(|e| ErrorRecord {
            code: e.code.code(),
            kind: e.code.kind().into(),
            message: e.message.clone(),
        }),
    };
    let root = out.root().display().to_string();
    out.finish(manifest)?;
    let report = result?;
    let _ = std::io::stdout().flush();
    Ok(format!("{report}\noutputs in {root}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_bad_flags() {
        assert_eq!(main_with(["locword", "--help"], None), 0);
        assert_eq!(main_with(["locword", "lyapunov", "--no-such-flag"], None), 2);
        assert_eq!(main_with(["locword", "frobnicate"], None), 2);
    }

    #[test]
    fn run_without_subcommand_is_usage_error() {
        let e = run(None, RunArgs { config: None, params: Params::default() }, None).unwrap_err();
        assert_eq!(e.code, ExitCode::Usage);
    }

    #[test]
    fn unreadable_config_is_usage_error() {
        let args = RunArgs { config: Some(PathBuf::from("/nonexistent/cfg.json")), params: Params::default() };
        let e = run(Some(Command::Verify), args, None).unwrap_err();
        assert!(matches!(e.code, ExitCode::Usage | ExitCode::Io), "{e:?}");
    }

    #[test]
    fn zero_workers_rejected() {
        let params = Params { workers: Some(0), ..Params::default() };
        let e = run(Some(Command::ChebCheck), RunArgs { config: None, params }, None).unwrap_err();
        assert_eq!(e.code, ExitCode::Usage);
    }
}
