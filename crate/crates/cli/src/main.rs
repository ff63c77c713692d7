use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwmspin::Complex64;
use fwmspin_cli::oracle_cmd::{self, PropagateArgs};
use fwmspin_cli::scenario::Diagnostics;
use fwmspin_cli::{diagnose, load, run, RunOptions};
use serde::Serialize;

/// Exit status for configuration errors.
const EXIT_CONFIG: u8 = 2;
/// Exit status for failures while running.
const EXIT_RUN: u8 = 1;

#[derive(Parser)]
#[command(
    name = "fwmspin",
    version,
    about = "Conditional spin squeezing by four-wave-mixing photon counting"
)]
struct Cli {
    /// Master seed; overrides `run.seed` in the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and the CSV tables (default `out`); oracle
    /// output goes to stdout unless this is given.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Run { config: PathBuf },
    /// Check a scenario file and print derived quantities without running.
    Validate { config: PathBuf },
    /// Brute-force reference computations at small sizes.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Subcommand)]
enum Oracle {
    /// Joint atoms ⊗ photons state after the coupled evolution, by matrix
    /// exponential in a truncated Fock space.
    FockEvolve {
        #[arg(long)]
        spin: f64,
        #[arg(long = "c")]
        c: f64,
        #[arg(long, default_value_t = 64)]
        cutoff: usize,
    },
    /// Coherent-spin-state coefficients from exact factorials.
    Css {
        #[arg(long)]
        n_atoms: usize,
    },
    /// Exit field of a uniform medium: closed form and characteristic lines.
    Propagate {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 1e-30)]
        k_re: f64,
        #[arg(long, default_value_t = 0.0)]
        k_im: f64,
        #[arg(long, default_value_t = 1e-8)]
        area: f64,
        #[arg(long, default_value_t = 0.01)]
        length: f64,
        #[arg(long, default_value_t = 1e17)]
        density: f64,
        #[arg(long, default_value_t = 100.0)]
        ct_over_l: f64,
        #[arg(long, default_value_t = 11)]
        samples: usize,
    },
}

fn print_diagnostics(d: &Diagnostics) {
    println!("scenario = {:?}", d.scenario);
    if let Some(r) = &d.derived.ratios {
        println!("|chi1/Delta| = {:.6e}", r.chi1_over_delta);
        println!("|chi2/Delta| = {:.6e}", r.chi2_over_delta);
        println!("|chip/Delta_p| = {:.6e}", r.chip_over_delta_p);
        println!("|delta/Delta| = {:.6e}", r.raman_over_delta);
        println!("|delta/Delta_p| = {:.6e}", r.raman_over_delta_p);
    }
    if let Some(c) = &d.derived.coupling {
        println!("coupling = {}", c.source);
        if let Some(v) = c.c {
            println!("C = {v:.6e}");
        }
        if let Some(n) = c.n_atoms_from_geometry {
            println!("N_a (geometry) = {n}");
        }
        if let Some(v) = c.phase_mismatch_residual {
            println!("phase_mismatch_residual = {v:.6e} rad");
        }
        if let Some(v) = c.ct_over_l {
            println!("cT/L = {v:.6e}");
        }
    }
    if let Some(v) = d.balance_residual {
        println!("balance_residual = {v:.6e}");
    }
    if let Some(v) = d.steady_coherence {
        println!("steady_coherence = {v:.6}");
    }
    println!("points = {}", d.derived.points);
    for w in &d.warnings {
        println!("warning: {w}");
    }
}

fn emit<T: Serialize>(value: &T, out_dir: Option<&Path>, name: &str) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    if let Some(out_dir) = out_dir {
        std::fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
        let path = out_dir.join(format!("oracle_{name}.json"));
        std::fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
        println!("{}", path.display());
    } else {
        let mut out = std::io::stdout().lock();
        writeln!(out, "{text}").map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
            Ok(cfg) => match diagnose(&cfg) {
                Ok(d) => {
                    print_diagnostics(&d);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", cfg.path);
                    ExitCode::from(EXIT_CONFIG)
                }
            },
        },
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let out_dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("out"));
            let options = RunOptions {
                out_dir: out_dir.clone(),
                seed: cli.seed,
                threads: cli.threads,
            };
            match run(&cfg, &options) {
                Ok(report) => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("{}", out_dir.join("report.json").display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUN)
                }
            }
        }
        Command::Oracle(sub) => {
            let out_dir = cli.out_dir.as_deref();
            let result = match sub {
                Oracle::FockEvolve { spin, c, cutoff } => oracle_cmd::fock(spin, c, cutoff)
                    .map_err(|e| e.to_string())
                    .and_then(|o| emit(&o, out_dir, "fock_evolve")),
                Oracle::Css { n_atoms } => oracle_cmd::css(n_atoms)
                    .map_err(|e| e.to_string())
                    .and_then(|o| emit(&o, out_dir, "css")),
                Oracle::Propagate {
                    d,
                    k_re,
                    k_im,
                    area,
                    length,
                    density,
                    ct_over_l,
                    samples,
                } => oracle_cmd::propagate(&PropagateArgs {
                    d,
                    k: Complex64::new(k_re, k_im),
                    area,
                    length,
                    density,
                    ct_over_l,
                    samples,
                })
                .map_err(|e| e.to_string())
                .and_then(|o| emit(&o, out_dir, "propagate")),
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUN)
                }
            }
        }
    }
}
