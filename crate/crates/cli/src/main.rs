mod args;
mod output;
mod run;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use stochpsi::config::{parse_key_values, parse_manifest_header, ConfigError, KeyValues};

use crate::args::{Cli, Command};
use crate::output::{IoOptions, META_KEYS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<stochpsi::Error> for CliError {
    fn from(e: stochpsi::Error) -> Self {
        use stochpsi::Error as E;
        match e {
            E::InvalidParameter { .. } | E::ProbabilityOutOfRange(_) | E::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn read_config(path: &Path) -> Result<KeyValues, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    // CSV outputs carry their configuration as `# key=value` header lines
    match parse_key_values(&text) {
        Err(_) if text.starts_with('#') => Ok(parse_manifest_header(&text)?),
        other => Ok(other?),
    }
}

fn strip_meta(kv: &mut KeyValues) -> Option<String> {
    let subcommand = kv.get("subcommand").map(str::to_string);
    for k in META_KEYS {
        kv.remove(k);
    }
    subcommand
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (subcommand, source, io) = match &cli.command {
        Command::Rerun(a) => {
            let mut kv = read_config(&a.manifest)?;
            let sub = strip_meta(&mut kv)
                .ok_or_else(|| CliError::Usage(format!("{} has no `subcommand` entry", a.manifest.display())))?;
            let io = IoOptions {
                out: a.out.clone(),
                format: a.format,
                dump_trials: a.dump_trials,
                threads: a.threads,
            };
            (sub, kv, io)
        }
        cmd => {
            let (flags, io) = cmd.overrides().expect("non-rerun command");
            let mut kv = match &io.config {
                Some(p) => read_config(p)?,
                None => KeyValues::new(),
            };
            strip_meta(&mut kv);
            kv.overlay(&flags);
            let io = IoOptions {
                out: io.out.clone(),
                format: io.format,
                dump_trials: io.dump_trials,
                threads: io.threads,
            };
            (cmd.name().to_string(), kv, io)
        }
    };
    if !run::SUBCOMMANDS.contains(&subcommand.as_str()) {
        return Err(CliError::Usage(format!("unknown subcommand `{subcommand}`")));
    }
    if io.dump_trials && io.out.is_none() {
        return Err(CliError::Usage("--dump-trials needs --out".into()));
    }
    if let Some(n) = io.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let started = unix_now();
    let result = run::execute(&subcommand, source, io.dump_trials)?;
    output::write(&subcommand, &result, &io, started, unix_now())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
