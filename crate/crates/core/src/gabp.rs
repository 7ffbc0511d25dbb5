//! Gaussian belief propagation over the stacked linearized range systems.
//!
//! Every anchor-landmark pair is a factor node ("edge" below) connected to
//! all unknowns. Each edge keeps a soft replica and an MSE per unknown. One
//! iteration:
//!
//! 1. soft interference cancellation: subtract every other unknown's replica
//!    from the edge observation;
//! 2. conditional variance: residual interference power plus `N₀`;
//! 3. extrinsic statistics: Gaussian combination of all *other* edges;
//! 4. denoising against the zero-mean Gaussian prior;
//! 5. damped replica update.
//!
//! The consensus estimate combines all edges (no leave-one-out).
//!
//! [`run_algorithm1`] chains a joint rotation/translation loop, a translation
//! cancellation and a rotation-only refinement loop. With the quadratic model
//! the rotation channel is rebuilt after every iteration around the current
//! consensus angles.

use alloc::vec;
use alloc::vec::Vec;

use crate::approx::{outside_design_interval, ChannelBuilder, ChannelMatrices, RotationModel};
use crate::geometry::{AnchorSet, Conformation, RotationAngles, Translation};
use crate::linalg::{max_abs_diff, norm_sq};
use crate::measurement::{
    build_parameter_observation, build_sensor_system, composite_noise_power, stack_observations,
    NoisePower, RangeObservations, SensorEstimate, SensorLinearSystem,
};
use crate::{Error, Result, Vec3};

/// Message-passing settings. `phi_theta` is in rad², `phi_t` in m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GabpConfig {
    pub rho: f64,
    pub j_max: usize,
    pub phi_theta: f64,
    pub phi_t: f64,
    /// Stop once the consensus moves less than this (max-abs) between
    /// iterations. Zero disables early stopping.
    pub convergence_tol: f64,
}

impl GabpConfig {
    pub const DEFAULT_RHO: f64 = 0.5;
    pub const DEFAULT_J_MAX: usize = 30;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn new(phi_theta: f64, phi_t: f64) -> Self {
        Self {
            rho: Self::DEFAULT_RHO,
            j_max: Self::DEFAULT_J_MAX,
            phi_theta,
            phi_t,
            convergence_tol: Self::DEFAULT_TOL,
        }
    }

    /// Same as [`GabpConfig::new`] with the angle variance given in deg².
    pub fn from_degrees(phi_theta_deg2: f64, phi_t: f64) -> Self {
        let s = 1f64.to_radians();
        Self::new(phi_theta_deg2 * s * s, phi_t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho", "damping factor must lie in [0, 1)");
        }
        if self.j_max == 0 {
            return bad("j_max", "at least one iteration is required");
        }
        if !(self.phi_theta > 0.0 && self.phi_theta.is_finite()) {
            return bad("phi_theta", "prior variance must be positive");
        }
        if !(self.phi_t > 0.0 && self.phi_t.is_finite()) {
            return bad("phi_t", "prior variance must be positive");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return bad("convergence_tol", "tolerance must be non-negative");
        }
        Ok(())
    }
}

/// Per-edge soft replicas and their MSEs, one row per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    pub theta_hat: Vec<Vec3>,
    pub t_hat: Vec<Vec3>,
    pub psi_theta: Vec<Vec3>,
    pub psi_t: Vec<Vec3>,
}

impl EdgeState {
    /// Replicas at the prior mean (zero) with the prior variances as MSEs.
    pub fn from_prior(edges: usize, cfg: &GabpConfig) -> Self {
        Self {
            theta_hat: vec![[0.0; 3]; edges],
            t_hat: vec![[0.0; 3]; edges],
            psi_theta: vec![[cfg.phi_theta; 3]; edges],
            psi_t: vec![[cfg.phi_t; 3]; edges],
        }
    }

    pub fn edges(&self) -> usize {
        self.theta_hat.len()
    }
}

/// Floor on every conditional variance (m⁴, the unit of `z`). Without it a
/// noiseless run drives the variances towards zero and the estimator becomes
/// overconfident about the linearization error, which makes the adaptive
/// rotation loop oscillate. Real noise powers are many orders larger.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[inline]
fn dot_k<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn power_k<const K: usize>(h: &[f64; K], psi: &[f64; K]) -> f64 {
    h.iter().zip(psi).map(|(x, p)| x * x * p).sum()
}

/// `Σ_{i≠k} h_i·x_i` for every `k`.
#[inline]
fn leave_one_out_dot<const K: usize>(h: &[f64; K], x: &[f64; K]) -> [f64; K] {
    core::array::from_fn(|k| (0..K).filter(|&i| i != k).map(|i| h[i] * x[i]).sum())
}

#[inline]
fn leave_one_out_power<const K: usize>(h: &[f64; K], psi: &[f64; K]) -> [f64; K] {
    core::array::from_fn(|k| (0..K).filter(|&i| i != k).map(|i| h[i] * h[i] * psi[i]).sum())
}

/// Soft interference cancellation for both unknown families.
///
/// Returns `(z̃_θ, z̃_t)` where `z̃_θ[e][k] = z_e − Σ_{i≠k} h_θ[e][i]·θ̂[e][i] − Σ_i h_t[e][i]·t̂[e][i]`
/// and symmetrically for the translation.
pub fn soft_ic(z: &[f64], h: &ChannelMatrices, state: &EdgeState) -> (Vec<Vec3>, Vec<Vec3>) {
    let mut z_theta = Vec::with_capacity(z.len());
    let mut z_t = Vec::with_capacity(z.len());
    for e in 0..z.len() {
        let (hth, ht) = (&h.h_theta[e], &h.h_t[e]);
        let (th, t) = (&state.theta_hat[e], &state.t_hat[e]);
        let full_theta = dot_k(hth, th);
        let full_t = dot_k(ht, t);
        let oth = leave_one_out_dot(hth, th);
        let ot = leave_one_out_dot(ht, t);
        z_theta.push(core::array::from_fn(|k| z[e] - oth[k] - full_t));
        z_t.push(core::array::from_fn(|k| z[e] - full_theta - ot[k]));
    }
    (z_theta, z_t)
}

/// Soft interference cancellation for a single unknown family.
pub fn soft_ic_single<const K: usize>(z: &[f64], h: &[[f64; K]], x_hat: &[[f64; K]]) -> Vec<[f64; K]> {
    z.iter()
        .zip(h)
        .zip(x_hat)
        .map(|((ze, he), xe)| {
            let o = leave_one_out_dot(he, xe);
            core::array::from_fn(|k| ze - o[k])
        })
        .collect()
}

/// Conditional variances of the cancelled observations for both families:
/// residual interference power of every other unknown plus `N₀`.
pub fn conditional_variances(
    h: &ChannelMatrices,
    state: &EdgeState,
    n0: &[f64],
) -> (Vec<Vec3>, Vec<Vec3>) {
    let mut s_theta = Vec::with_capacity(n0.len());
    let mut s_t = Vec::with_capacity(n0.len());
    for (e, noise) in n0.iter().enumerate() {
        let (hth, ht) = (&h.h_theta[e], &h.h_t[e]);
        let full_theta = power_k(hth, &state.psi_theta[e]);
        let full_t = power_k(ht, &state.psi_t[e]);
        let oth = leave_one_out_power(hth, &state.psi_theta[e]);
        let ot = leave_one_out_power(ht, &state.psi_t[e]);
        s_theta.push(core::array::from_fn(|k| (oth[k] + full_t + noise).max(VARIANCE_FLOOR)));
        s_t.push(core::array::from_fn(|k| (full_theta + ot[k] + noise).max(VARIANCE_FLOOR)));
    }
    (s_theta, s_t)
}

pub fn conditional_variances_single<const K: usize>(
    h: &[[f64; K]],
    psi: &[[f64; K]],
    n0: &[f64],
) -> Vec<[f64; K]> {
    h.iter()
        .zip(psi)
        .zip(n0)
        .map(|((he, pe), noise)| {
            let o = leave_one_out_power(he, pe);
            core::array::from_fn(|k| (o[k] + noise).max(VARIANCE_FLOOR))
        })
        .collect()
}

/// Leave-one-out Gaussian combination: for each edge and unknown, the mean
/// and variance from all other edges' observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrinsic<const K: usize> {
    pub mean: Vec<[f64; K]>,
    /// Infinite when no other edge carries information on that unknown.
    pub var: Vec<[f64; K]>,
}

/// Per-edge precision `h²/σ²` and information `h·z̃/σ²`.
fn edge_terms<const K: usize>(
    z_tilde: &[[f64; K]],
    sigma2: &[[f64; K]],
    h: &[[f64; K]],
) -> (Vec<[f64; K]>, Vec<[f64; K]>) {
    h.iter()
        .zip(z_tilde)
        .zip(sigma2)
        .map(|((he, ze), se)| {
            let w = core::array::from_fn(|k| he[k] * he[k] / se[k]);
            let b = core::array::from_fn(|k| he[k] * ze[k] / se[k]);
            (w, b)
        })
        .unzip()
}

fn combine(precision: f64, info: f64) -> (f64, f64) {
    if precision > 0.0 {
        let var = 1.0 / precision;
        (var * info, var)
    } else {
        (0.0, f64::INFINITY)
    }
}

pub fn extrinsic_stats<const K: usize>(
    z_tilde: &[[f64; K]],
    sigma2: &[[f64; K]],
    h: &[[f64; K]],
) -> Extrinsic<K> {
    let (w, b) = edge_terms(z_tilde, sigma2, h);
    let edges = w.len();
    // Exclusive prefix sums; the suffix is accumulated on the way back so
    // no edge's own term is ever subtracted out of a total.
    let mut pre_w = vec![[0.0; K]; edges];
    let mut pre_b = vec![[0.0; K]; edges];
    let (mut acc_w, mut acc_b) = ([0.0; K], [0.0; K]);
    for e in 0..edges {
        pre_w[e] = acc_w;
        pre_b[e] = acc_b;
        for k in 0..K {
            acc_w[k] += w[e][k];
            acc_b[k] += b[e][k];
        }
    }
    let mut mean = vec![[0.0; K]; edges];
    let mut var = vec![[0.0; K]; edges];
    let (mut suf_w, mut suf_b) = ([0.0; K], [0.0; K]);
    for e in (0..edges).rev() {
        for k in 0..K {
            let (m, v) = combine(pre_w[e][k] + suf_w[k], pre_b[e][k] + suf_b[k]);
            mean[e][k] = m;
            var[e][k] = v;
            suf_w[k] += w[e][k];
            suf_b[k] += b[e][k];
        }
    }
    Extrinsic { mean, var }
}

/// Full-sum Gaussian combination over all edges. Unknowns no edge observes
/// fall back to the prior mean, zero.
pub fn consensus<const K: usize>(z_tilde: &[[f64; K]], sigma2: &[[f64; K]], h: &[[f64; K]]) -> [f64; K] {
    let (w, b) = edge_terms(z_tilde, sigma2, h);
    let mut tw = [0.0; K];
    let mut tb = [0.0; K];
    for (we, be) in w.iter().zip(&b) {
        for k in 0..K {
            tw[k] += we[k];
            tb[k] += be[k];
        }
    }
    core::array::from_fn(|k| combine(tw[k], tb[k]).0)
}

/// Posterior means and MSEs after combining the extrinsic statistics with
/// the zero-mean Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised<const K: usize> {
    pub mean: Vec<[f64; K]>,
    pub mse: Vec<[f64; K]>,
}

pub fn denoise<const K: usize>(ext: &Extrinsic<K>, prior_var: &[f64; K]) -> Denoised<K> {
    let (mean, mse) = ext
        .mean
        .iter()
        .zip(&ext.var)
        .map(|(m, v)| {
            let mut dm = [0.0; K];
            let mut dv = [0.0; K];
            for k in 0..K {
                let phi = prior_var[k];
                if v[k].is_infinite() {
                    dm[k] = 0.0;
                    dv[k] = phi;
                } else {
                    dm[k] = phi * m[k] / (phi + v[k]);
                    dv[k] = phi * v[k] / (phi + v[k]);
                }
            }
            (dm, dv)
        })
        .unzip();
    Denoised { mean, mse }
}

/// `x ← ρ·x + (1 − ρ)·x̌`, applied to replicas and MSEs alike.
pub fn damped_update<const K: usize>(
    x_hat: &mut [[f64; K]],
    psi: &mut [[f64; K]],
    denoised: &Denoised<K>,
    rho: f64,
) {
    for (x, d) in x_hat.iter_mut().zip(&denoised.mean) {
        for k in 0..K {
            x[k] = rho * x[k] + (1.0 - rho) * d[k];
        }
    }
    for (p, d) in psi.iter_mut().zip(&denoised.mse) {
        for k in 0..K {
            p[k] = rho * p[k] + (1.0 - rho) * d[k];
        }
    }
}

/// `z′ = z − H_t·t̃`.
pub fn cancel_translation(z: &[f64], h_t: &[Vec3], t_tilde: &Vec3) -> Vec<f64> {
    z.iter().zip(h_t).map(|(ze, h)| ze - dot_k(h, t_tilde)).collect()
}

fn all_finite<const K: usize>(v: &[[f64; K]]) -> bool {
    v.iter().all(|r| r.iter().all(|x| x.is_finite()))
}

/// Consensus values at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusPoint {
    pub theta: Vec3,
    pub t: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEstimate {
    pub theta: Vec3,
    /// For a rotation-only run, the translation that was cancelled.
    pub t: Vec3,
    pub iterations_used: usize,
    pub trajectory: Vec<ConsensusPoint>,
    /// Rotation-channel rebuilds whose previous iterate fell outside the
    /// quadratic model's design interval.
    pub out_of_interval: usize,
}

/// Source of rebuilt rotation channels between iterations.
pub trait RotationChannel {
    /// Rotation rows for a new previous iterate, or `None` if the channel is fixed.
    fn refresh(&self, theta_prev: &Vec3) -> Option<Vec<Vec3>>;
}

/// A rotation channel that never changes.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedChannel;

impl RotationChannel for FixedChannel {
    fn refresh(&self, _: &Vec3) -> Option<Vec<Vec3>> {
        None
    }
}

/// Rebuilds the rotation rows from a [`RotationModel`] when it is adaptive.
#[derive(Debug, Clone, Copy)]
pub struct ModelChannel<'a> {
    pub builder: &'a ChannelBuilder,
    pub model: RotationModel,
}

impl RotationChannel for ModelChannel<'_> {
    fn refresh(&self, theta_prev: &Vec3) -> Option<Vec<Vec3>> {
        self.model
            .is_adaptive()
            .then(|| self.builder.h_theta(&self.model.vectorize(theta_prev)))
    }
}

fn check_lengths(z: &[f64], n0: &[f64], rows: usize) -> Result<()> {
    for (what, len) in [("observation", z.len()), ("noise power", n0.len())] {
        if len != rows {
            return Err(Error::DimensionMismatch {
                what,
                expected: rows,
                actual: len,
            });
        }
    }
    Ok(())
}

/// Joint rotation/translation loop followed by the final consensus.
///
/// `channels.h_theta` is updated in place as the model is re-linearized, and
/// the final edge state is returned so the refinement loop can warm-start.
pub fn joint_gabp(
    z: &[f64],
    n0: &[f64],
    channels: &mut ChannelMatrices,
    update: &impl RotationChannel,
    cfg: &GabpConfig,
) -> Result<(ConsensusEstimate, EdgeState)> {
    cfg.validate()?;
    check_lengths(z, n0, channels.h_t.len())?;
    let mut state = EdgeState::from_prior(z.len(), cfg);
    let mut trajectory: Vec<ConsensusPoint> = Vec::with_capacity(cfg.j_max);
    let mut out_of_interval = 0;
    let mut iterations = 0;
    for j in 1..=cfg.j_max {
        iterations = j;
        let (zt_theta, zt_t) = soft_ic(z, channels, &state);
        let (s_theta, s_t) = conditional_variances(channels, &state, n0);
        let ext_theta = extrinsic_stats(&zt_theta, &s_theta, &channels.h_theta);
        let ext_t = extrinsic_stats(&zt_t, &s_t, &channels.h_t);
        let point = ConsensusPoint {
            theta: consensus(&zt_theta, &s_theta, &channels.h_theta),
            t: consensus(&zt_t, &s_t, &channels.h_t),
        };
        let den_theta = denoise(&ext_theta, &[cfg.phi_theta; 3]);
        let den_t = denoise(&ext_t, &[cfg.phi_t; 3]);
        if !(all_finite(&[point.theta, point.t])
            && all_finite(&den_theta.mean)
            && all_finite(&den_theta.mse)
            && all_finite(&den_t.mean)
            && all_finite(&den_t.mse))
        {
            return Err(Error::Diverged { iteration: j });
        }
        damped_update(&mut state.theta_hat, &mut state.psi_theta, &den_theta, cfg.rho);
        damped_update(&mut state.t_hat, &mut state.psi_t, &den_t, cfg.rho);
        if let Some(rows) = update.refresh(&point.theta) {
            out_of_interval += usize::from(outside_design_interval(&point.theta));
            channels.h_theta = rows;
        }
        let settled = trajectory.last().is_some_and(|prev: &ConsensusPoint| {
            max_abs_diff(&prev.theta, &point.theta).max(max_abs_diff(&prev.t, &point.t))
                < cfg.convergence_tol
        });
        trajectory.push(point);
        if settled {
            break;
        }
    }
    let (zt_theta, zt_t) = soft_ic(z, channels, &state);
    let (s_theta, s_t) = conditional_variances(channels, &state, n0);
    let theta = consensus(&zt_theta, &s_theta, &channels.h_theta);
    let t = consensus(&zt_t, &s_t, &channels.h_t);
    if !all_finite(&[theta, t]) {
        return Err(Error::Diverged { iteration: iterations });
    }
    Ok((
        ConsensusEstimate {
            theta,
            t,
            iterations_used: iterations,
            trajectory,
            out_of_interval,
        },
        state,
    ))
}

/// Rotation replicas and MSEs that seed [`rotation_refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct RotationState {
    pub theta_hat: Vec<Vec3>,
    pub psi_theta: Vec<Vec3>,
}

impl RotationState {
    pub fn from_prior(edges: usize, cfg: &GabpConfig) -> Self {
        Self {
            theta_hat: vec![[0.0; 3]; edges],
            psi_theta: vec![[cfg.phi_theta; 3]; edges],
        }
    }

    /// Every edge starting at the same replica and MSE.
    pub fn uniform(edges: usize, theta: Vec3, psi: Vec3) -> Self {
        Self {
            theta_hat: vec![theta; edges],
            psi_theta: vec![psi; edges],
        }
    }
}

impl From<EdgeState> for RotationState {
    fn from(s: EdgeState) -> Self {
        Self {
            theta_hat: s.theta_hat,
            psi_theta: s.psi_theta,
        }
    }
}

/// Rotation-only loop on the translation-cancelled observation `z′`.
///
/// `t_cancelled` is only carried through to the returned estimate.
pub fn rotation_refine(
    z_prime: &[f64],
    h_theta: &mut Vec<Vec3>,
    n0: &[f64],
    cfg: &GabpConfig,
    init: RotationState,
    update: &impl RotationChannel,
    t_cancelled: Vec3,
) -> Result<ConsensusEstimate> {
    cfg.validate()?;
    check_lengths(z_prime, n0, h_theta.len())?;
    if init.theta_hat.len() != h_theta.len() || init.psi_theta.len() != h_theta.len() {
        return Err(Error::DimensionMismatch {
            what: "rotation state",
            expected: h_theta.len(),
            actual: init.theta_hat.len(),
        });
    }
    let RotationState {
        mut theta_hat,
        mut psi_theta,
    } = init;
    let prior = [cfg.phi_theta; 3];
    let mut trajectory: Vec<ConsensusPoint> = Vec::with_capacity(cfg.j_max);
    let mut out_of_interval = 0;
    let mut iterations = 0;
    for j in 1..=cfg.j_max {
        iterations = j;
        let zt = soft_ic_single(z_prime, h_theta, &theta_hat);
        let s2 = conditional_variances_single(h_theta, &psi_theta, n0);
        let ext = extrinsic_stats(&zt, &s2, h_theta);
        let theta = consensus(&zt, &s2, h_theta);
        let den = denoise(&ext, &prior);
        if !(all_finite(&[theta]) && all_finite(&den.mean) && all_finite(&den.mse)) {
            return Err(Error::Diverged { iteration: j });
        }
        damped_update(&mut theta_hat, &mut psi_theta, &den, cfg.rho);
        if let Some(rows) = update.refresh(&theta) {
            out_of_interval += usize::from(outside_design_interval(&theta));
            *h_theta = rows;
        }
        let settled = trajectory
            .last()
            .is_some_and(|prev: &ConsensusPoint| max_abs_diff(&prev.theta, &theta) < cfg.convergence_tol);
        trajectory.push(ConsensusPoint {
            theta,
            t: t_cancelled,
        });
        if settled {
            break;
        }
    }
    let zt = soft_ic_single(z_prime, h_theta, &theta_hat);
    let s2 = conditional_variances_single(h_theta, &psi_theta, n0);
    let theta = consensus(&zt, &s2, h_theta);
    if !all_finite(&[theta]) {
        return Err(Error::Diverged { iteration: iterations });
    }
    Ok(ConsensusEstimate {
        theta,
        t: t_cancelled,
        iterations_used: iterations,
        trajectory,
        out_of_interval,
    })
}

/// Single-family GaBP on one landmark's `y = G·x + ξ`, `x = [s; ‖s‖²]`.
pub fn linear_gabp_sensor(
    sys: &SensorLinearSystem,
    n0: &[f64],
    cfg: &GabpConfig,
    prior_var: [f64; 4],
) -> Result<SensorEstimate> {
    cfg.validate()?;
    let rows = sys.y.len();
    if rows < 4 {
        return Err(Error::Underdetermined { rows, unknowns: 4 });
    }
    check_lengths(&sys.y, n0, sys.g.len())?;
    let mut x_hat = vec![[0.0; 4]; rows];
    let mut psi = vec![prior_var; rows];
    let mut last: Option<[f64; 4]> = None;
    let mut iterations = 0;
    for j in 1..=cfg.j_max {
        iterations = j;
        let zt = soft_ic_single(&sys.y, &sys.g, &x_hat);
        let s2 = conditional_variances_single(&sys.g, &psi, n0);
        let ext = extrinsic_stats(&zt, &s2, &sys.g);
        let x = consensus(&zt, &s2, &sys.g);
        let den = denoise(&ext, &prior_var);
        if !(x.iter().all(|v| v.is_finite()) && all_finite(&den.mean) && all_finite(&den.mse)) {
            return Err(Error::Diverged { iteration: j });
        }
        damped_update(&mut x_hat, &mut psi, &den, cfg.rho);
        let settled = last.is_some_and(|p| max_abs_diff(&p, &x) < cfg.convergence_tol);
        last = Some(x);
        if settled {
            break;
        }
    }
    let zt = soft_ic_single(&sys.y, &sys.g, &x_hat);
    let s2 = conditional_variances_single(&sys.g, &psi, n0);
    let x = consensus(&zt, &s2, &sys.g);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged { iteration: iterations });
    }
    Ok(SensorEstimate {
        position: [x[0], x[1], x[2]],
        norm_sq: x[3].max(0.0),
    })
}

/// Zero-mean prior second moments of `[s; ‖s‖²]` for a landmark at body
/// coordinate `c` under `t ~ N(0, φ_t·I)`: `φ_t + ‖c‖²` per axis and
/// `E[‖s‖⁴] ≈ (3φ_t + ‖c‖²)² + 6φ_t²` for the norm.
pub fn sensor_prior_variance(phi_t: f64, c: &Vec3) -> [f64; 4] {
    let c2 = norm_sq(c);
    let axis = phi_t + c2;
    let mean_norm = 3.0 * phi_t + c2;
    [axis, axis, axis, mean_norm * mean_norm + 6.0 * phi_t * phi_t]
}

/// Estimates `‖s_n‖²` for every landmark from its own ranges.
pub fn estimate_norms(
    anchors: &AnchorSet,
    conf: &Conformation,
    ranges: &RangeObservations,
    noise_power: NoisePower,
    cfg: &GabpConfig,
) -> Result<Vec<f64>> {
    let power = composite_noise_power(ranges, ranges.sigma_w())?;
    let landmarks = ranges.landmarks();
    conf.points()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let sys = build_sensor_system(anchors, ranges, n)?;
            let n0: Vec<f64> = match noise_power {
                NoisePower::PerRow => (0..anchors.len()).map(|m| power[m * landmarks + n]).collect(),
                NoisePower::Scalar(v) => vec![v; anchors.len()],
            };
            let est = linear_gabp_sensor(&sys, &n0, cfg, sensor_prior_variance(cfg.phi_t, c))?;
            Ok(est.norm_sq)
        })
        .collect()
}

/// Source of the landmark norms used to form the parameter observation.
#[derive(Debug, Clone, Copy)]
pub enum Norms<'a> {
    Known(&'a [f64]),
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorOptions {
    pub model: RotationModel,
    pub noise_power: NoisePower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub angles: RotationAngles,
    pub translation: Translation,
    pub joint: ConsensusEstimate,
    pub refined: ConsensusEstimate,
    pub norms: Vec<f64>,
}

impl PoseEstimate {
    pub fn iterations_used(&self) -> usize {
        self.joint.iterations_used + self.refined.iterations_used
    }

    pub fn out_of_interval(&self) -> usize {
        self.joint.out_of_interval + self.refined.out_of_interval
    }
}

/// The full double-GaBP estimator: norm acquisition, joint loop, translation
/// cancellation and rotation refinement.
pub fn run_algorithm1(
    anchors: &AnchorSet,
    conf: &Conformation,
    ranges: &RangeObservations,
    norms: Norms<'_>,
    opts: &EstimatorOptions,
    cfg: &GabpConfig,
) -> Result<PoseEstimate> {
    cfg.validate()?;
    let norms = match norms {
        Norms::Known(v) => v.to_vec(),
        Norms::Estimate => estimate_norms(anchors, conf, ranges, opts.noise_power, cfg)?,
    };
    let initial = opts.model.vectorize(&[0.0; 3]);
    let obs = build_parameter_observation(anchors, conf, ranges, &norms, &initial.gamma_vec)?;
    let stacked = stack_observations(&obs, opts.noise_power);
    let builder = ChannelBuilder::new(anchors, conf);
    let mut channels = ChannelMatrices {
        h_theta: builder.h_theta(&initial),
        h_t: builder.h_t().to_vec(),
    };
    let update = ModelChannel {
        builder: &builder,
        model: opts.model,
    };
    let (joint, state) = joint_gabp(&stacked.z, &stacked.n0, &mut channels, &update, cfg)?;
    let z_prime = cancel_translation(&stacked.z, &channels.h_t, &joint.t);
    let mut h_theta = channels.h_theta;
    let refined = rotation_refine(
        &z_prime,
        &mut h_theta,
        &stacked.n0,
        cfg,
        state.into(),
        &update,
        joint.t,
    )?;
    Ok(PoseEstimate {
        angles: RotationAngles::from_array(refined.theta),
        translation: Translation(joint.t),
        joint,
        refined,
        norms,
    })
}
