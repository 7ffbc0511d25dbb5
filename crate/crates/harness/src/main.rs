use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rbl_core::approx::QuadApproxParams;
use rbl_core::harness::{approx_sweep, estimate, sample_trial};
use rbl_harness::config::{ExperimentConfig, FULL_TRIALS};
use rbl_harness::experiment::{run_rmse_experiment, trial_rng};
use rbl_harness::output::{write_approx_csv, write_rmse_csv};

#[derive(Parser)]
#[command(name = "rbl", version, about = "Rigid-body localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo RMSE over the configured σ and φ_θ sweep.
    Rmse {
        #[arg(long)]
        config: PathBuf,
        /// Run 10⁴ trials per point instead of the configured count.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; defaults to the config's output, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sine/cosine approximation errors over [−π/4, π/4].
    ApproxSweep {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One trial: true pose against both estimates.
    Single {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn fmt3(v: [f64; 3]) -> String {
    format!("[{:+.4}, {:+.4}, {:+.4}]", v[0], v[1], v[2])
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Rmse { config, full, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if full {
                cfg.trials = FULL_TRIALS;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let rows = run_rmse_experiment(&cfg)?;
            let path = out.or(cfg.output.clone());
            write_rmse_csv(&rows, sink(path.as_deref())?)?;
        }
        Command::ApproxSweep { points, out } => {
            let rows = approx_sweep(points, &QuadApproxParams::TABLE)?;
            write_approx_csv(&rows, sink(out.as_deref())?)?;
        }
        Command::Single { config, sigma, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            anyhow::ensure!(sigma >= 0.0 && sigma.is_finite(), "sigma must be non-negative");
            let phi = cfg.phi_theta_deg2[0];
            let scenario = cfg.scenario_at(phi);
            let settings = cfg.trial_settings(phi, sigma);
            let data = sample_trial(&scenario, sigma, &mut trial_rng(seed, 0, 0))?;
            let mut out = io::stdout().lock();
            writeln!(out, "sigma {sigma} m, phi_theta {phi} deg^2, seed {seed}")?;
            writeln!(out, "{:<12} angles_deg {}", "truth", fmt3(data.truth.angles.to_degrees()))?;
            writeln!(out, "{:<12} t_m        {}", "", fmt3(data.truth.translation.0))?;
            for &method in &settings.methods {
                match estimate(&scenario, &data, method, &settings) {
                    Ok(est) => {
                        writeln!(out, "{:<12} angles_deg {}", method.name(), fmt3(est.angles.to_degrees()))?;
                        writeln!(
                            out,
                            "{:<12} t_m        {}  iterations {}",
                            "",
                            fmt3(est.translation.0),
                            est.iterations_used()
                        )?;
                    }
                    Err(e) => writeln!(out, "{:<12} failed: {e}", method.name())?,
                }
            }
        }
    }
    Ok(())
}
