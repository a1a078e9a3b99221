mod commands;
mod config;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use crate::commands::Output;
use crate::config::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Build a model and write its sites.
    Model,
    /// Eigenvalues, bulk weights and gaps.
    Spectrum,
    /// Windowed conductance and related experiments.
    Pairing,
    /// Cartesian sweep of the windowed conductance.
    Sweep,
    /// Exact identity and determinant suites.
    Verify,
    /// Block-norm decay profile of a Fermi projection.
    Decay,
    /// Thickening, round-trip and excisiveness checks.
    Geometry,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Model => "model",
            Command::Spectrum => "spectrum",
            Command::Pairing => "pairing",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
            Command::Decay => "decay",
            Command::Geometry => "geometry",
        }
    }
}

/// Partition pairings and windowed Hall conductance on finite samples.
///
/// Artifacts are written as `<command>-<hash>.csv` and `.json`, where the hash
/// covers the command, the effective config and the seed. Exit codes: 0 all
/// checks pass, 1 a check failed, 2 usage error, 3 numerical error.
#[derive(Debug, Parser)]
#[command(name = "coarse-hall", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON config; `verify` and `geometry` fall back to bundled defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override a config value, e.g. `--set model.nx=24` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn effective_config(cli: &Cli) -> Result<Value, Failure> {
    let mut value = match &cli.config {
        Some(path) => config::read_json(path)?,
        None => commands::default_config(cli.command.name()).ok_or_else(|| {
            Failure::Usage(format!("`{}` needs --config", cli.command.name()))
        })?,
    };
    for o in &cli.overrides {
        config::apply_override(&mut value, o)?;
    }
    Ok(value)
}

fn dispatch(cli: &Cli, config: &Value, hash: &str) -> Result<Output, Failure> {
    match cli.command {
        Command::Model => commands::model(config),
        Command::Spectrum => commands::spectrum(config),
        Command::Pairing => commands::pairing(config, cli.seed),
        Command::Sweep => sweep::sweep(config, cli.seed, &cli.out, hash),
        Command::Verify => commands::verify(config, cli.seed),
        Command::Decay => commands::decay(config),
        Command::Geometry => commands::geometry(config, cli.seed),
    }
}

fn metadata(cli: &Cli, config: &Value, hash: &str) -> Value {
    json!({
        "command": cli.command.name(),
        "config_hash": hash,
        "seed": cli.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("values serialize");
    b.push(b'\n');
    b
}

fn ensure_out(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let config = effective_config(cli)?;
    let name = cli.command.name();
    let hash = commands::run_hash(name, &config, cli.seed);
    if cli.command == Command::Sweep {
        sweep::validate(&config)?;
    }
    let stem = cli.out.join(format!("{name}-{hash}"));
    let mut meta = metadata(cli, &config, &hash);
    match dispatch(cli, &config, &hash) {
        Ok(output) => {
            for s in &output.summaries {
                println!(
                    "{}: {} passed, {} failed, worst defect {:e}",
                    s.suite, s.pass_count, s.fail_count, s.worst_defect
                );
            }
            let pass = output.all_pass();
            meta["pass"] = pass.into();
            meta["result"] = output.json;
            ensure_out(&cli.out)?;
            write_atomic(&stem.with_extension("csv"), &output.csv)?;
            write_atomic(&stem.with_extension("json"), &json_bytes(&meta))?;
            Ok(pass)
        }
        Err(Failure::Numerical(msg)) => {
            meta["pass"] = false.into();
            meta["error"] = json!({ "kind": "numerical", "message": msg });
            ensure_out(&cli.out)?;
            write_atomic(&stem.with_extension("json"), &json_bytes(&meta))?;
            Err(Failure::Numerical(msg))
        }
        Err(usage) => Err(usage),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("usage error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Failure::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ Failure::Numerical(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
