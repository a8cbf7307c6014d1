use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nfcrb::crb::Bound;
use nfcrb::fim::DerivativeFault;
use nfcrb::ParamKind;
use nfcrb_cli::evaluate::Variant;
use nfcrb_cli::sweep::parse_grid;
use nfcrb_cli::verify::{DEFAULT_BATTERY, DEFAULT_SEED};
use nfcrb_cli::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nfcrb", version, about = "Exact and approximate Cramér-Rao bounds for near-field array sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate all bounds of every target in a scene.
    Eval {
        config: PathBuf,
        /// Also write the CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one scene variable and write one CSV row per grid value.
    Sweep {
        config: PathBuf,
        /// range | angle | antennas | snapshots | power
        #[arg(long)]
        var: String,
        /// Comma-separated, strictly monotone values (m, deg, count, count, W).
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value = "rcs,vx,vy,x,y")]
        bounds: String,
        /// Any of exact, full, ff, nf.
        #[arg(long, default_value = "exact,ff,nf")]
        variants: String,
        /// 1-based target whose bounds are reported and, for range/angle, moved.
        #[arg(long, default_value_t = 1)]
        target: usize,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for grid evaluation.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the oracle batteries; exits with status 2 when any check fails.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BATTERY)]
        battery: usize,
        /// Scale the analytic x-derivative of target 1 by (1 + value).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        inject_fault: Option<f64>,
    },
}

fn read_config(path: &Path) -> Result<ParsedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn list<T>(text: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| parse(s.trim()).ok_or_else(|| CliError::Invalid(format!("unknown {what} `{}`", s.trim()))))
        .collect()
}

fn emit(buf: &[u8], out: Option<&Path>, echo: bool) -> Result<(), CliError> {
    if let Some(path) = out {
        std::fs::write(path, buf).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    if echo || out.is_none() {
        std::io::stdout().write_all(buf)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval { config, out } => {
            let parsed = read_config(&config)?;
            let mut buf = Vec::new();
            run_eval(&parsed, &mut buf)?;
            emit(&buf, out.as_deref(), true)
        }
        Command::Sweep { config, var, grid, bounds, variants, target, out, threads } => {
            let parsed = read_config(&config)?;
            let var = SweepVar::parse(&var).ok_or_else(|| CliError::Invalid(format!("unknown sweep variable `{var}`")))?;
            if target == 0 {
                return Err(CliError::Invalid("--target is 1-based".into()));
            }
            if threads == Some(0) {
                return Err(CliError::Invalid("--threads must be at least 1".into()));
            }
            let spec = SweepSpec {
                var,
                grid: parse_grid(&grid)?,
                bounds: list(&bounds, "bound", Bound::parse)?,
                variants: list(&variants, "variant", Variant::parse)?,
                target: target - 1,
            };
            let mut buf = Vec::new();
            run_sweep(&parsed, &spec, threads, &mut buf)?;
            emit(&buf, out.as_deref(), false)
        }
        Command::Verify { seed, battery, inject_fault } => {
            let opts = VerifyOptions {
                seed,
                battery,
                fault: inject_fault.map(|relative| DerivativeFault { kind: ParamKind::X, target: 0, relative }),
            };
            let mut buf = Vec::new();
            let result = run_verify(&opts, &mut buf);
            std::io::stdout().write_all(&buf)?;
            result
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::from(EXIT_OK as u8)
                }
                _ => ExitCode::from(EXIT_INVALID as u8),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
