//! Parallel Monte-Carlo runs.
//!
//! Each (φ_θ, σ) combination gets its own base seed and every trial its own
//! ChaCha stream, so results do not depend on how trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rbl_core::harness::{run_trial, summarize, RmseRow, Scenario, TrialRecord, TrialSettings};

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// Random source for trial `trial` of combination `combo`.
pub fn trial_rng(seed: u64, combo: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(combo));
    rng.set_stream(trial);
    rng
}

/// Runs trials `range` of one combination. Records come back in trial order.
pub fn run_trials(
    scenario: &Scenario,
    settings: &TrialSettings,
    seed: u64,
    combo: u64,
    range: std::ops::Range<usize>,
) -> Result<Vec<TrialRecord>, HarnessError> {
    range
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, combo, i as u64);
            run_trial(scenario, settings, i, &mut rng).map_err(HarnessError::from)
        })
        .collect()
}

/// One row per (φ_θ, σ, method), φ_θ outermost.
pub fn run_rmse_experiment(cfg: &ExperimentConfig) -> Result<Vec<RmseRow>, HarnessError> {
    let mut rows = Vec::new();
    for (p, &phi) in cfg.phi_theta_deg2.iter().enumerate() {
        let scenario = cfg.scenario_at(phi);
        for (s, &sigma) in cfg.sigmas.iter().enumerate() {
            let combo = (p * cfg.sigmas.len() + s) as u64;
            let settings = cfg.trial_settings(phi, sigma);
            let records = run_trials(&scenario, &settings, cfg.seed, combo, 0..cfg.trials)?;
            rows.extend(summarize(&records, &cfg.methods, sigma, phi));
        }
    }
    Ok(rows)
}
