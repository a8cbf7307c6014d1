//! Library side of the `nfcrb` command: config parsing, `eval`, `sweep` and
//! `verify`. The binary is a thin clap wrapper over these functions.

pub mod config;
pub mod eval;
pub mod evaluate;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, ConfigError, ParsedConfig};
pub use eval::run_eval;
pub use sweep::{run_sweep, SweepSpec, SweepVar};
pub use verify::{run_verify, VerifyOptions};

use std::io::Write;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0} verification check(s) failed")]
    VerificationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => EXIT_VERIFY_FAILED,
            _ => EXIT_INVALID,
        }
    }
}

/// Tool version, command, and the config echo as `#` lines.
pub(crate) fn header(out: &mut dyn Write, command: &str, config: &ParsedConfig) -> std::io::Result<()> {
    writeln!(out, "# nfcrb {} {command}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# seed: none (deterministic evaluation)")?;
    if config.entries.is_empty() {
        writeln!(out, "# config: reference scene")?;
    }
    for line in config.echo() {
        writeln!(out, "# config: {line}")?;
    }
    Ok(())
}
