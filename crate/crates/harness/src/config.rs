//! TOML experiment configuration.
//!
//! Every key is optional; omitted values fall back to the default scenario
//! and sweep. Example:
//!
//! ```toml
//! [scenario]
//! phi-theta-deg2 = [10.0, 100.0]
//! phi-t = 5.0
//!
//! [experiment]
//! sigmas = [0.01, 0.1, 1.0]
//! trials = 200
//! seed = 7
//! noise-power = "scalar:0.5"
//!
//! [gabp]
//! rho = 0.5
//! j-max = 30
//! ```

use std::path::{Path, PathBuf};

use rbl_core::approx::{BaselineSign, Method};
use rbl_core::gabp::GabpConfig;
use rbl_core::geometry::{AnchorSet, Conformation};
use rbl_core::harness::{default_scenario, Scenario, TrialSettings};
use rbl_core::measurement::{NoisePower, NormMode};
use rbl_core::Vec3;
use serde::Deserialize;

use crate::HarnessError;

pub const DEFAULT_SIGMAS: [f64; 5] = [0.01, 0.0316, 0.1, 0.316, 1.0];
pub const DEFAULT_PHI_THETA_DEG2: [f64; 3] = [10.0, 100.0, 400.0];
pub const DEFAULT_TRIALS: usize = 1000;
pub const FULL_TRIALS: usize = 10_000;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    gabp: RawGabp,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawScenario {
    anchors: Option<Vec<Vec3>>,
    conformation: Option<Vec<Vec3>>,
    phi_theta_deg2: Option<Vec<f64>>,
    phi_t: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawExperiment {
    sigmas: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    methods: Option<Vec<String>>,
    norm_mode: Option<String>,
    noise_power: Option<String>,
    baseline_sign: Option<String>,
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawGabp {
    rho: Option<f64>,
    j_max: Option<usize>,
    convergence_tol: Option<f64>,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `phi_theta_deg2` here is the first entry of the sweep list.
    pub scenario: Scenario,
    pub phi_theta_deg2: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub norm_mode: NormMode,
    pub noise_power: NoisePower,
    pub baseline_sign: BaselineSign,
    pub rho: f64,
    pub j_max: usize,
    pub convergence_tol: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub fn parse_norm_mode(s: &str) -> Result<NormMode, HarnessError> {
    match s {
        "oracle" => Ok(NormMode::Oracle),
        "estimated" => Ok(NormMode::Estimated),
        _ => Err(invalid(format!("unknown norm-mode `{s}` (expected oracle or estimated)"))),
    }
}

pub fn parse_noise_power(s: &str) -> Result<NoisePower, HarnessError> {
    if s == "per-row" {
        return Ok(NoisePower::PerRow);
    }
    let v = s
        .strip_prefix("scalar:")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| invalid(format!("bad noise-power `{s}` (expected per-row or scalar:<value>)")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid("scalar noise power must be positive"));
    }
    Ok(NoisePower::Scalar(v))
}

pub fn parse_baseline_sign(s: &str) -> Result<BaselineSign, HarnessError> {
    match s {
        "first-order" => Ok(BaselineSign::FirstOrder),
        "transposed" => Ok(BaselineSign::Transposed),
        _ => Err(invalid(format!("unknown baseline-sign `{s}` (expected first-order or transposed)"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(s)?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, HarnessError> {
        let base = default_scenario();
        let anchors = match raw.scenario.anchors {
            Some(a) => AnchorSet::new(a)?,
            None => base.anchors,
        };
        let conformation = match raw.scenario.conformation {
            Some(c) => Conformation::new(c)?,
            None => base.conformation,
        };
        let phi_theta_deg2 = raw
            .scenario
            .phi_theta_deg2
            .unwrap_or_else(|| DEFAULT_PHI_THETA_DEG2.to_vec());
        if phi_theta_deg2.is_empty() || phi_theta_deg2.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("phi-theta-deg2 must be a non-empty list of positive values"));
        }
        let phi_t = raw.scenario.phi_t.unwrap_or(base.phi_t);

        let e = raw.experiment;
        let sigmas = e.sigmas.unwrap_or_else(|| DEFAULT_SIGMAS.to_vec());
        if sigmas.is_empty() || sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(invalid("sigmas must be a non-empty list of non-negative values"));
        }
        let trials = e.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let methods = match e.methods {
            Some(names) => names
                .iter()
                .map(|n| Method::from_name(n).ok_or_else(|| invalid(format!("unknown method `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => Method::ALL.to_vec(),
        };
        if methods.is_empty() {
            return Err(invalid("methods must not be empty"));
        }

        let cfg = Self {
            scenario: Scenario {
                anchors,
                conformation,
                phi_theta_deg2: phi_theta_deg2[0],
                phi_t,
            },
            phi_theta_deg2,
            sigmas,
            trials,
            seed: e.seed.unwrap_or(0),
            methods,
            norm_mode: e.norm_mode.as_deref().map(parse_norm_mode).transpose()?.unwrap_or_default(),
            noise_power: e
                .noise_power
                .as_deref()
                .map(parse_noise_power)
                .transpose()?
                .unwrap_or_default(),
            baseline_sign: e
                .baseline_sign
                .as_deref()
                .map(parse_baseline_sign)
                .transpose()?
                .unwrap_or_default(),
            rho: raw.gabp.rho.unwrap_or(GabpConfig::DEFAULT_RHO),
            j_max: raw.gabp.j_max.unwrap_or(GabpConfig::DEFAULT_J_MAX),
            convergence_tol: raw.gabp.convergence_tol.unwrap_or(GabpConfig::DEFAULT_TOL),
            output: e.output,
        };
        for &phi in &cfg.phi_theta_deg2 {
            cfg.gabp(phi).validate()?;
        }
        Ok(cfg)
    }

    /// The scenario with the given angle prior.
    pub fn scenario_at(&self, phi_theta_deg2: f64) -> Scenario {
        Scenario {
            phi_theta_deg2,
            ..self.scenario.clone()
        }
    }

    pub fn gabp(&self, phi_theta_deg2: f64) -> GabpConfig {
        GabpConfig {
            rho: self.rho,
            j_max: self.j_max,
            convergence_tol: self.convergence_tol,
            ..GabpConfig::from_degrees(phi_theta_deg2, self.scenario.phi_t)
        }
    }

    pub fn trial_settings(&self, phi_theta_deg2: f64, sigma_w: f64) -> TrialSettings {
        TrialSettings {
            methods: self.methods.clone(),
            norm_mode: self.norm_mode,
            noise_power: self.noise_power,
            baseline_sign: self.baseline_sign,
            gabp: self.gabp(phi_theta_deg2),
            ..TrialSettings::new(&self.scenario_at(phi_theta_deg2), sigma_w)
        }
    }
}
