//! `starspec`: computes star-graph spectra from a JSON configuration and
//! writes CSV, JSON and SVG results with a manifest.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod commands;
mod config;
mod error;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::commands::Output;
use crate::config::{Overrides, Run, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "starspec", version, about = "Robin and Kirchhoff spectra of metric star graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Coupling constant as RE,IM or RE.
    #[arg(long, global = true, value_name = "RE,IM", allow_hyphen_values = true, value_parser = config::parse_alpha)]
    alpha: Option<Complex64>,
    /// Spectral cutoff on the square root of the eigenvalue.
    #[arg(long = "R", global = true, value_name = "X", conflicts_with = "n_max")]
    r: Option<f64>,
    /// Number of eigenvalues instead of a cutoff.
    #[arg(long, global = true, value_name = "K")]
    n_max: Option<usize>,
    #[arg(long, global = true, value_name = "B")]
    bins: Option<usize>,
    /// Monte-Carlo samples for the quadrature measure.
    #[arg(long, global = true, value_name = "M")]
    samples: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "J")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Kirchhoff and Robin eigenvalue tables.
    Spectrum,
    /// Robin eigenvalues with the spectral report.
    Robin,
    /// Empirical shift distribution against the limit measure.
    Measure,
    /// Windowed eigenvalue counts against the Weyl term.
    Weyl,
    /// Eigenvalue subsequences selected by Diophantine approximation.
    Dioph {
        #[command(subcommand)]
        which: Dioph,
    },
    /// Runs the invariant suite; exit status 1 if any check fails.
    Verify,
}

#[derive(Subcommand)]
enum Dioph {
    /// Subsequence with small rho from convergents of an edge-length ratio.
    Smallrho,
    /// Subsequence whose normalized shifts approach a target value.
    Target {
        /// Target value of the normalized shift.
        #[arg(long)]
        s: Option<f64>,
    },
}

impl Command {
    fn label(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Robin => "robin",
            Command::Measure => "measure",
            Command::Weyl => "weyl",
            Command::Dioph { which: Dioph::Smallrho } => "dioph smallrho",
            Command::Dioph { which: Dioph::Target { .. } } => "dioph target",
            Command::Verify => "verify",
        }
    }
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

fn manifest(run: &Run, command: &str, canonical: &Value, key: &str, out: &Output) -> Vec<u8> {
    let files: serde_json::Map<String, Value> =
        out.files.iter().map(|(n, b)| (n.clone(), json!(cache::sha256_hex(b)))).collect();
    pretty(&json!({
        "command": command,
        "config": canonical,
        "config_hash": key,
        "graph_hash": cache::sha256_hex(run.graph.canonical().as_bytes()),
        "versions": {
            "starspec-cli": env!("CARGO_PKG_VERSION"),
            "starspec-core": starspec_core::VERSION,
        },
        "tolerances": run.tolerances,
        "files": files,
        "summary": out.summary,
    }))
}

fn timings(stages: &[(String, f64)], total: f64, cache_hit: bool) -> Vec<u8> {
    let st: serde_json::Map<String, Value> = stages.iter().map(|(n, t)| (n.clone(), json!(t))).collect();
    pretty(&json!({ "cache_hit": cache_hit, "total_seconds": total, "stages": st }))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let f = cli.flags;
    if let Some(j) = f.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::usage("ConfigInvalid", format!("--jobs {j}: {e}")))?;
    }
    let path = f.config.ok_or_else(|| CliError::usage("ConfigNotFound", "--config PATH is required".into()))?;
    let cfg = RunConfig::load(&path)?;
    let target = match &cli.command {
        Command::Dioph { which: Dioph::Target { s } } => *s,
        _ => None,
    };
    let overrides = Overrides {
        alpha: f.alpha,
        r: f.r,
        n_max: f.n_max,
        bins: f.bins,
        samples: f.samples,
        seed: f.seed,
        out: f.out,
        target,
    };
    let run = Run::resolve(cfg, overrides)?;
    let command = cli.command.label();
    let canonical = run.canonical(command);
    let key = cache::sha256_hex(&pretty(&canonical));

    if let Command::Verify = cli.command {
        let (mut out, failed) = verify::verify(&run)?;
        for line in verify::lines(&out.summary) {
            println!("{line}");
        }
        let m = manifest(&run, command, &canonical, &key, &out);
        out.files.push(("manifest.json".into(), m));
        write_all(&run.out, &out.files)?;
        return if failed.is_empty() {
            println!("all invariants hold");
            Ok(())
        } else {
            Err(CliError::Invariant { failed })
        };
    }

    let root = cache::cache_root(&run.out);
    if let Some(files) = cache::load(&root, &key) {
        write_all(&run.out, &files)?;
        write_all(&run.out, &[("timings.json".into(), timings(&[], start.elapsed().as_secs_f64(), true))])?;
        println!("cache hit {key}");
        return Ok(());
    }
    let mut out = match cli.command {
        Command::Spectrum => commands::spectrum(&run),
        Command::Robin => commands::robin(&run),
        Command::Measure => commands::measure(&run),
        Command::Weyl => commands::weyl(&run),
        Command::Dioph { which: Dioph::Smallrho } => commands::small_rho(&run),
        Command::Dioph { which: Dioph::Target { .. } } => commands::targeted(&run),
        Command::Verify => unreachable!("handled above"),
    }?;
    let m = manifest(&run, command, &canonical, &key, &out);
    out.files.push(("manifest.json".into(), m));
    write_all(&run.out, &out.files)?;
    cache::store(&root, &key, &out.files)?;
    write_all(&run.out, &[("timings.json".into(), timings(&out.stages, start.elapsed().as_secs_f64(), false))])?;
    println!("wrote {} files to {}", out.files.len(), run.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}
