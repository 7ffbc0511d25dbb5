//! Scenario construction, single Monte-Carlo trials and RMSE summaries.
//!
//! Everything here is deterministic given the random source; scheduling
//! trials across threads and writing files is left to the caller.

use alloc::vec::Vec;

use rand::Rng;

use crate::approx::{ApproxSample, BaselineSign, Method, QuadApproxParams, RotationModel, DESIGN_INTERVAL};
use crate::gabp::{run_algorithm1, EstimatorOptions, GabpConfig, Norms, PoseEstimate};
use crate::geometry::{
    rotation_from_angles, sample_pose, transform_body, AnchorSet, Conformation, PoseParameters,
};
use crate::measurement::{generate_ranges, landmark_norms, NoisePower, NormMode, RangeObservations};
use crate::{Error, Result, Vec3};

/// Anchors, body conformation and pose priors (`φ_θ` in deg², `φ_t` in m²).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub anchors: AnchorSet,
    pub conformation: Conformation,
    pub phi_theta_deg2: f64,
    pub phi_t: f64,
}

const CUBE: [Vec3; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0],
];

fn scaled_cube(half: f64) -> Vec<Vec3> {
    CUBE.iter().map(|p| [p[0] * half, p[1] * half, p[2] * half]).collect()
}

/// Unit cube body (±0.5 m) inside a ±10 m anchor cube, `φ_θ = 10 deg²`, `φ_t = 5 m²`.
pub fn default_scenario() -> Scenario {
    Scenario {
        anchors: AnchorSet::new(scaled_cube(10.0)).expect("static anchors are valid"),
        conformation: Conformation::new(scaled_cube(0.5)).expect("static conformation is valid"),
        phi_theta_deg2: 10.0,
        phi_t: 5.0,
    }
}

/// `√(1/E · Σ‖x̂ᵢ − xᵢ‖²)` with a separate truth per trial.
pub fn rmse(estimates: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Empty);
    }
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "estimates vs truth",
            expected: truth.len(),
            actual: estimates.len(),
        });
    }
    let sum: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| (0..3).map(|k| (e[k] - t[k]) * (e[k] - t[k])).sum::<f64>())
        .sum();
    Ok(libm::sqrt(sum / estimates.len() as f64))
}

/// Everything a trial needs besides the scenario and the random source.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub sigma_w: f64,
    pub methods: Vec<Method>,
    pub norm_mode: NormMode,
    pub noise_power: NoisePower,
    pub baseline_sign: BaselineSign,
    pub params: QuadApproxParams,
    pub gabp: GabpConfig,
}

impl TrialSettings {
    /// Both methods, estimated norms, per-row noise power and the default
    /// GaBP settings for the scenario priors.
    pub fn new(scenario: &Scenario, sigma_w: f64) -> Self {
        Self {
            sigma_w,
            methods: Method::ALL.to_vec(),
            norm_mode: NormMode::default(),
            noise_power: NoisePower::default(),
            baseline_sign: BaselineSign::default(),
            params: QuadApproxParams::default(),
            gabp: GabpConfig::from_degrees(scenario.phi_theta_deg2, scenario.phi_t),
        }
    }

    pub fn model(&self, method: Method) -> RotationModel {
        RotationModel {
            method,
            params: self.params,
            baseline_sign: self.baseline_sign,
        }
    }
}

/// One realization: a sampled pose and the ranges it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    pub truth: PoseParameters,
    pub landmarks: Vec<Vec3>,
    pub ranges: RangeObservations,
}

/// Draws the pose first, then all ranges, from the same source.
pub fn sample_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    sigma_w: f64,
    rng: &mut R,
) -> Result<TrialData> {
    let truth = sample_pose(scenario.phi_theta_deg2, scenario.phi_t, rng)?;
    let q = rotation_from_angles(&truth.angles);
    let landmarks = transform_body(&scenario.conformation, &q, &truth.translation);
    let ranges = generate_ranges(&scenario.anchors, &landmarks, sigma_w, rng)?;
    Ok(TrialData {
        truth,
        landmarks,
        ranges,
    })
}

/// Runs the estimator for one method on already sampled data.
pub fn estimate(
    scenario: &Scenario,
    data: &TrialData,
    method: Method,
    settings: &TrialSettings,
) -> Result<PoseEstimate> {
    let oracle;
    let norms = match settings.norm_mode {
        NormMode::Oracle => {
            oracle = landmark_norms(&data.landmarks);
            Norms::Known(&oracle)
        }
        NormMode::Estimated => Norms::Estimate,
    };
    let opts = EstimatorOptions {
        model: settings.model(method),
        noise_power: settings.noise_power,
    };
    run_algorithm1(
        &scenario.anchors,
        &scenario.conformation,
        &data.ranges,
        norms,
        &opts,
        &settings.gabp,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodEstimate {
    pub angles: Vec3,
    pub translation: Vec3,
    pub iterations_used: usize,
    pub out_of_interval: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    /// `None` when the run diverged.
    pub estimate: Option<MethodEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub truth: PoseParameters,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    pub fn diverged(&self) -> bool {
        self.outcomes.iter().any(|o| o.estimate.is_none())
    }

    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

/// Samples one trial and runs every configured method on it. Divergence is
/// recorded; any other error aborts.
pub fn run_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    settings: &TrialSettings,
    index: usize,
    rng: &mut R,
) -> Result<TrialRecord> {
    let data = sample_trial(scenario, settings.sigma_w, rng)?;
    let outcomes = settings
        .methods
        .iter()
        .map(|&method| match estimate(scenario, &data, method, settings) {
            Ok(est) => Ok(MethodOutcome {
                method,
                estimate: Some(MethodEstimate {
                    angles: est.angles.to_array(),
                    translation: est.translation.0,
                    iterations_used: est.iterations_used(),
                    out_of_interval: est.out_of_interval(),
                }),
            }),
            Err(Error::Diverged { .. }) => Ok(MethodOutcome { method, estimate: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialRecord {
        index,
        truth: data.truth,
        outcomes,
    })
}

/// One summary line per (σ, method).
#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub phi_theta_deg2: f64,
    pub sigma: f64,
    pub method: Method,
    /// NaN when every trial diverged.
    pub rmse_rotation_deg: f64,
    pub rmse_translation_m: f64,
    pub diverged: usize,
    pub included: usize,
    pub mean_iterations: f64,
}

fn to_degrees(v: &Vec3) -> Vec3 {
    [v[0].to_degrees(), v[1].to_degrees(), v[2].to_degrees()]
}

/// Collapses trial records into RMSE rows, one per method, excluding diverged runs.
pub fn summarize(
    records: &[TrialRecord],
    methods: &[Method],
    sigma: f64,
    phi_theta_deg2: f64,
) -> Vec<RmseRow> {
    methods
        .iter()
        .map(|&method| {
            let mut est_theta = Vec::new();
            let mut true_theta = Vec::new();
            let mut est_t = Vec::new();
            let mut true_t = Vec::new();
            let mut iterations = 0usize;
            let mut diverged = 0;
            for r in records {
                match r.outcome(method).and_then(|o| o.estimate) {
                    Some(e) => {
                        est_theta.push(to_degrees(&e.angles));
                        true_theta.push(to_degrees(&r.truth.angles.to_array()));
                        est_t.push(e.translation);
                        true_t.push(r.truth.translation.0);
                        iterations += e.iterations_used;
                    }
                    None => diverged += 1,
                }
            }
            let included = est_theta.len();
            RmseRow {
                phi_theta_deg2,
                sigma,
                method,
                rmse_rotation_deg: rmse(&est_theta, &true_theta).unwrap_or(f64::NAN),
                rmse_translation_m: rmse(&est_t, &true_t).unwrap_or(f64::NAN),
                diverged,
                included,
                mean_iterations: if included == 0 {
                    f64::NAN
                } else {
                    iterations as f64 / included as f64
                },
            }
        })
        .collect()
}

/// Evaluates both approximations on `points` evenly spaced angles over the
/// design interval, with `θ_prev = θ`.
pub fn approx_sweep(points: usize, params: &QuadApproxParams) -> Result<Vec<ApproxSample>> {
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "the sweep needs at least two grid points",
        });
    }
    let step = 2.0 * DESIGN_INTERVAL / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let theta = if i == points - 1 {
                DESIGN_INTERVAL
            } else {
                -DESIGN_INTERVAL + step * i as f64
            };
            ApproxSample::at(theta, params)
        })
        .collect())
}
