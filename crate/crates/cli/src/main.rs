use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ovals_cli::{execute, CliError, RawConfig, Registry, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "ovals", version, about = "Run a registered experiment")]
struct Args {
    /// radial-asymptotics | spectral-trace | soliton-atlas | foliation-check | width-ratio | ratio-solve
    experiment: String,
    /// Flat `key = value` config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Run the built-in checks only.
    #[arg(long)]
    verify: bool,
}

fn load(args: &Args) -> Result<(RawConfig, PathBuf), CliError> {
    let raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    let out = match (&args.out, raw.meta("out")?) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => PathBuf::from("out").join(&args.experiment),
    };
    Ok((raw, out))
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.threads == Some(0) {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(2);
    }
    let (raw, out) = match load(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { threads: args.threads, verify_only: args.verify };
    let (code, _) = execute(&Registry::builtin(), &args.experiment, &raw, &out, &opts);
    ExitCode::from(code as u8)
}
