//! Linearizations of the rotation matrix and the effective channel matrices.
//!
//! Both models write `vec(Q) ≈ γ + S·θ` with a constant 9-vector `γ` and a
//! 9×3 slope `S`, vectorized column-major. The small-angle model uses
//! `sin θ ≈ θ`, `cos θ ≈ 1`, so `S` is constant. The quadratic model uses
//!
//! ```text
//! sin θ ≈ α·θ_prev·θ + β·θ
//! cos θ ≈ γ − δ·θ_prev·θ
//! ```
//!
//! which is linear in the current angle once the previous iterate `θ_prev`
//! is fixed, so `S` must be rebuilt whenever `θ_prev` changes. `α` takes the
//! value `α⁺` or `α⁻` per component depending on the sign of `θ_prev`.
//!
//! Substituting into `aᵀ·Q·c = (cᵀ ⊗ aᵀ)·vec(Q)` gives the rotation channel
//! row `−2(cᵀ ⊗ aᵀ)·S` of each anchor-landmark pair; the translation row is
//! `−2aᵀ` for either model.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::geometry::{AnchorSet, Conformation, RotationMatrix};
use crate::measurement::kron_row;
use crate::Vec3;

/// Coefficients of the quadratic sine/cosine approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadApproxParams {
    /// Product-term coefficient of the sine for positive `θ_prev`.
    pub alpha_plus: f64,
    /// Product-term coefficient of the sine for negative `θ_prev`.
    pub alpha_minus: f64,
    /// Linear coefficient of the sine.
    pub beta: f64,
    /// Constant term of the cosine.
    pub gamma: f64,
    /// Product-term coefficient of the cosine.
    pub delta: f64,
}

impl QuadApproxParams {
    /// Values tuned for `θ ∈ [−π/4, π/4]`.
    pub const TABLE: Self = Self {
        alpha_plus: -0.16884,
        alpha_minus: 0.16884,
        beta: 1.03912,
        gamma: 577.0 / 579.0,
        delta: 274.0 / 589.0,
    };

    /// `α⁺` for positive `theta_prev`, `α⁻` for negative, 0 at the origin
    /// where the product term vanishes anyway.
    pub fn alpha(&self, theta_prev: f64) -> f64 {
        if theta_prev > 0.0 {
            self.alpha_plus
        } else if theta_prev < 0.0 {
            self.alpha_minus
        } else {
            0.0
        }
    }
}

impl Default for QuadApproxParams {
    fn default() -> Self {
        Self::TABLE
    }
}

/// Half-width of the interval the quadratic coefficients were fitted on.
pub const DESIGN_INTERVAL: f64 = FRAC_PI_4;

/// True when any component of `theta_prev` lies outside `[−π/4, π/4]`.
pub fn outside_design_interval(theta_prev: &Vec3) -> bool {
    theta_prev.iter().any(|t| t.abs() > DESIGN_INTERVAL)
}

pub fn quad_sin(theta: f64, theta_prev: f64, p: &QuadApproxParams) -> f64 {
    p.alpha(theta_prev) * theta_prev * theta + p.beta * theta
}

pub fn quad_cos(theta: f64, theta_prev: f64, p: &QuadApproxParams) -> f64 {
    p.gamma - p.delta * theta_prev * theta
}

/// `vec(Q) ≈ gamma_vec + slope·θ`, column-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorizedRotationModel {
    pub gamma_vec: [f64; 9],
    /// 9×3, one row per vectorized matrix entry.
    pub slope: [[f64; 3]; 9],
}

impl VectorizedRotationModel {
    pub fn reconstruct(&self, theta: &Vec3) -> RotationMatrix {
        let v: [f64; 9] = core::array::from_fn(|r| {
            self.gamma_vec[r]
                + self.slope[r][0] * theta[0]
                + self.slope[r][1] * theta[1]
                + self.slope[r][2] * theta[2]
        });
        RotationMatrix::from_vec(&v)
    }
}

const VEC_IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

/// Sign-carrying selector of the skew part, scaled by `g` on the entries that
/// pick up a cosine factor in the quadratic model.
///
/// Column x: `+g` at (3,2), `−g` at (2,3). Column y: `−1` at (3,1), `+1` at
/// (1,3). Column z: `+g` at (2,1), `−g` at (1,2).
pub fn skew_selector(g: f64) -> [[f64; 3]; 9] {
    let mut l = [[0.0; 3]; 9];
    l[5][0] = g;
    l[7][0] = -g;
    l[2][1] = -1.0;
    l[6][1] = 1.0;
    l[1][2] = g;
    l[3][2] = -g;
    l
}

/// Selector of the diagonal entries each angle's cosine product touches.
pub fn diagonal_selector() -> [[f64; 3]; 9] {
    let mut d = [[0.0; 3]; 9];
    d[4][0] = 1.0;
    d[8][0] = 1.0;
    d[0][1] = 1.0;
    d[8][1] = 1.0;
    d[0][2] = 1.0;
    d[4][2] = 1.0;
    d
}

/// Sign convention of the small-angle baseline's skew part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineSign {
    /// First-order expansion of `Qz·Qy·Qx`: `q₁₂ ≈ −θz`, `q₂₃ ≈ −θx`, `q₃₁ ≈ −θy`.
    #[default]
    FirstOrder,
    /// The transposed pattern `q₁₂ ≈ θz`, `q₂₃ ≈ θx`, `q₃₁ ≈ θy`, i.e. the
    /// expansion of `Qᵀ`. Only useful to study a mismatched baseline.
    Transposed,
}

/// The small-angle model: `γ = vec(I)`, constant slope.
pub fn small_angle_vec(sign: BaselineSign) -> VectorizedRotationModel {
    let s = match sign {
        BaselineSign::FirstOrder => 1.0,
        BaselineSign::Transposed => -1.0,
    };
    VectorizedRotationModel {
        gamma_vec: VEC_IDENTITY,
        slope: skew_selector(s),
    }
}

/// The quadratic model around `theta_prev`:
/// `γ²·vec(I) + (β·L + L·A·Θ − γδ·D·Θ)·θ`, with `Θ = diag(θ_prev)` and `A`
/// the per-component sign-selected `α`.
pub fn quad_vec(theta_prev: &Vec3, p: &QuadApproxParams) -> VectorizedRotationModel {
    let l = skew_selector(p.gamma);
    let d = diagonal_selector();
    let slope = core::array::from_fn(|r| {
        core::array::from_fn(|k| {
            let tp = theta_prev[k];
            p.beta * l[r][k] + p.alpha(tp) * tp * l[r][k] - p.gamma * p.delta * tp * d[r][k]
        })
    });
    VectorizedRotationModel {
        gamma_vec: VEC_IDENTITY.map(|v| v * p.gamma * p.gamma),
        slope,
    }
}

/// Entry-by-entry quadratic approximation of `Qz·Qy·Qx`: every sine and
/// cosine replaced by its quadratic form, products of two sines dropped and
/// a cosine multiplying a sine replaced by `γ`.
pub fn quad_matrix(theta: &Vec3, theta_prev: &Vec3, p: &QuadApproxParams) -> RotationMatrix {
    let [x, y, z] = *theta;
    let [xp, yp, zp] = *theta_prev;
    let (g, b, d) = (p.gamma, p.beta, p.delta);
    let sx = b * x + p.alpha(xp) * xp * x;
    let sy = b * y + p.alpha(yp) * yp * y;
    let sz = b * z + p.alpha(zp) * zp * z;
    RotationMatrix([
        [g * g - g * d * (yp * y + zp * z), -g * sz, sy],
        [g * sz, g * g - g * d * (xp * x + zp * z), -g * sx],
        [-sy, g * sx, g * g - g * d * (xp * x + yp * y)],
    ])
}

/// Which linearization builds the rotation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub enum Method {
    SmallAngle,
    #[default]
    Quadratic,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::SmallAngle, Method::Quadratic];

    pub fn name(self) -> &'static str {
        match self {
            Method::SmallAngle => "small-angle",
            Method::Quadratic => "quadratic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "small-angle" => Some(Method::SmallAngle),
            "quadratic" => Some(Method::Quadratic),
            _ => None,
        }
    }
}

/// A linearization together with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationModel {
    pub method: Method,
    pub params: QuadApproxParams,
    pub baseline_sign: BaselineSign,
}

impl RotationModel {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn vectorize(&self, theta_prev: &Vec3) -> VectorizedRotationModel {
        match self.method {
            Method::SmallAngle => small_angle_vec(self.baseline_sign),
            Method::Quadratic => quad_vec(theta_prev, &self.params),
        }
    }

    /// Whether the slope depends on the previous iterate.
    pub fn is_adaptive(&self) -> bool {
        self.method == Method::Quadratic
    }
}

/// Stacked effective channels, landmark-major: row `n·M + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrices {
    pub h_theta: Vec<Vec3>,
    pub h_t: Vec<Vec3>,
}

/// Precomputed `cᵀ ⊗ aᵀ` rows, so the rotation channel can be rebuilt for a
/// new slope in `O(N·M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBuilder {
    kron: Vec<[f64; 9]>,
    h_t: Vec<Vec3>,
}

impl ChannelBuilder {
    pub fn new(anchors: &AnchorSet, conf: &Conformation) -> Self {
        let mut kron = Vec::with_capacity(anchors.len() * conf.len());
        let mut h_t = Vec::with_capacity(anchors.len() * conf.len());
        for c in conf.points() {
            for a in anchors.positions() {
                kron.push(kron_row(c, a));
                h_t.push([-2.0 * a[0], -2.0 * a[1], -2.0 * a[2]]);
            }
        }
        Self { kron, h_t }
    }

    pub fn edges(&self) -> usize {
        self.kron.len()
    }

    pub fn h_t(&self) -> &[Vec3] {
        &self.h_t
    }

    pub fn h_theta(&self, model: &VectorizedRotationModel) -> Vec<Vec3> {
        self.kron
            .iter()
            .map(|k| {
                core::array::from_fn(|col| {
                    -2.0 * k
                        .iter()
                        .zip(&model.slope)
                        .map(|(kv, row)| kv * row[col])
                        .sum::<f64>()
                })
            })
            .collect()
    }
}

pub fn build_channels(
    anchors: &AnchorSet,
    conf: &Conformation,
    model: &VectorizedRotationModel,
) -> ChannelMatrices {
    let b = ChannelBuilder::new(anchors, conf);
    ChannelMatrices {
        h_theta: b.h_theta(model),
        h_t: b.h_t,
    }
}

/// One row of the approximation-error sweep, evaluated with `θ_prev = θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxSample {
    pub theta: f64,
    pub sin: f64,
    pub small_sin: f64,
    pub quad_sin: f64,
    pub cos: f64,
    pub small_cos: f64,
    pub quad_cos: f64,
}

impl ApproxSample {
    pub fn at(theta: f64, p: &QuadApproxParams) -> Self {
        let (s, c) = libm::sincos(theta);
        Self {
            theta,
            sin: s,
            small_sin: theta,
            quad_sin: quad_sin(theta, theta, p),
            cos: c,
            small_cos: 1.0,
            quad_cos: quad_cos(theta, theta, p),
        }
    }

    pub fn sin_err_small(&self) -> f64 {
        (self.small_sin - self.sin).abs()
    }

    pub fn sin_err_quad(&self) -> f64 {
        (self.quad_sin - self.sin).abs()
    }

    pub fn cos_err_small(&self) -> f64 {
        (self.small_cos - self.cos).abs()
    }

    pub fn cos_err_quad(&self) -> f64 {
        (self.quad_cos - self.cos).abs()
    }
}
