//! Command-line front end for the cluster-forests library.
//!
//! Five subcommands cover the surface: `run` scores a labeled dataset over
//! repeated pipeline runs, `bench` compares the forest against baseline
//! ensembles, `synth` studies grown ensembles on synthetic Gaussian
//! mixtures, `profile` scores every feature on its own, and `perturb`
//! sweeps noise levels on a planted two-block affinity matrix.
//!
//! Every artifact is CSV with `#`-prefixed metadata lines recording the
//! tool version, the master seed, and the configuration. Nothing
//! time-dependent or machine-dependent is written, so a rerun with the
//! same flags produces byte-identical files at any worker-pool size.

mod cmd_bench;
mod cmd_perturb;
mod cmd_profile;
mod cmd_run;
mod cmd_synth;
mod dataset;
mod output;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "cf",
    version,
    about = "Ensemble clustering from quality-guided feature subsets",
    args_override_self = true
)]
struct Cli {
    /// key=value file applied before the command-line flags; explicit
    /// flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: the CF_THREADS variable, then all cores).
    /// Thread count never changes results, only wall time.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster a labeled dataset repeatedly and score the agreement.
    Run(cmd_run::RunArgs),
    /// Compare the forest with baseline ensembles on one dataset.
    Bench(cmd_bench::BenchArgs),
    /// Sample a synthetic Gaussian mixture and study the grown ensemble.
    Synth(cmd_synth::SynthArgs),
    /// Score every feature of a dataset on its own.
    Profile(cmd_profile::ProfileArgs),
    /// Sweep noise levels on a planted two-block affinity matrix.
    Perturb(cmd_perturb::PerturbArgs),
}

const SUBCOMMANDS: [&str; 5] = ["run", "bench", "synth", "profile", "perturb"];

/// Finds `--config FILE` (or `--config=FILE`) without a full parse, so the
/// file can supply arguments that would otherwise be rejected as missing.
fn config_path(raw: &[String]) -> Option<PathBuf> {
    let mut it = raw.iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Index of the subcommand token. Skips the values of the only global
/// flags that take one; everything else before the subcommand is a flag.
fn subcommand_index(raw: &[String]) -> Option<usize> {
    let mut skip = false;
    for (i, arg) in raw.iter().enumerate().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if arg == "--config" || arg == "--threads" {
            skip = true;
            continue;
        }
        if arg.starts_with('-') {
            continue;
        }
        if SUBCOMMANDS.contains(&arg.as_str()) {
            return Some(i);
        }
    }
    None
}

/// Splices the config file's `key=value` pairs in as flags right after the
/// subcommand. Explicit command-line flags come later in the argument list
/// and therefore override the file (the last occurrence wins). Keys use
/// the flag's long name; `_` is accepted for `-`. A boolean `true` becomes
/// a bare flag, `false` is dropped.
fn overlay_config(raw: &[String]) -> Result<Vec<String>> {
    let Some(path) = config_path(raw) else {
        return Ok(raw.to_vec());
    };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').with_context(|| {
            format!(
                "{}:{}: expected key=value, got {:?}",
                path.display(),
                lineno + 1,
                line
            )
        })?;
        let key = key.trim().replace('_', "-");
        match value.trim() {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            value => {
                flags.push(format!("--{key}"));
                flags.push(value.to_string());
            }
        }
    }
    let Some(at) = subcommand_index(raw) else {
        return Ok(raw.to_vec());
    };
    let mut argv = raw[..=at].to_vec();
    argv.extend(flags);
    argv.extend(raw[at + 1..].iter().cloned());
    Ok(argv)
}

/// Sizes the global worker pool. Results do not depend on the size, so it
/// is deliberately left out of artifact headers.
fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = flag.or_else(|| {
        std::env::var("CF_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("sizing the worker pool")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let raw: Vec<String> = std::env::args().collect();
    let argv = overlay_config(&raw)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Run(args) => cmd_run::run(args),
        Command::Bench(args) => cmd_bench::run(args),
        Command::Synth(args) => cmd_synth::run(args),
        Command::Profile(args) => cmd_profile::run(args),
        Command::Perturb(args) => cmd_perturb::run(args),
    }
}
