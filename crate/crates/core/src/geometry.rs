//! Euler-angle rotations, rigid-body transforms and random pose sampling.
//!
//! Rotations follow the roll-pitch-yaw composition `Q = Qz(θz)·Qy(θy)·Qx(θx)`.
//! Angles are radians internally; the only degree-valued inputs are the prior
//! variances handed to [`sample_pose`].

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Mul;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::is_finite3;
use crate::{Error, Result, Vec3};

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationAngles {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RotationAngles {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_degrees(x: f64, y: f64, z: f64) -> Self {
        Self::new(x.to_radians(), y.to_radians(), z.to_radians())
    }

    pub const fn from_array(a: Vec3) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub const fn to_array(self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn to_degrees(self) -> Vec3 {
        [self.x.to_degrees(), self.y.to_degrees(), self.z.to_degrees()]
    }

    /// Each component wrapped into `[-π, π]`.
    pub fn normalized(self) -> Self {
        Self::new(wrap_angle(self.x), wrap_angle(self.y), wrap_angle(self.z))
    }
}

/// Wraps an angle into `[-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    libm::remainder(a, 2.0 * PI)
}

/// A 3×3 matrix stored row by row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rotation about the x-axis.
    pub fn roll(theta: f64) -> Self {
        let (s, c) = libm::sincos(theta);
        Self([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    /// Rotation about the y-axis.
    pub fn pitch(theta: f64) -> Self {
        let (s, c) = libm::sincos(theta);
        Self([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    /// Rotation about the z-axis.
    pub fn yaw(theta: f64) -> Self {
        let (s, c) = libm::sincos(theta);
        Self([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self(core::array::from_fn(|i| core::array::from_fn(|j| m[j][i])))
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        core::array::from_fn(|i| self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2])
    }

    /// Column-major vectorization: `vec(Q)[3j + i] = Q[i][j]`.
    pub fn to_vec(&self) -> [f64; 9] {
        core::array::from_fn(|r| self.0[r % 3][r / 3])
    }

    pub fn from_vec(v: &[f64; 9]) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| v[3 * j + i])))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        crate::linalg::max_abs_diff(&self.to_vec(), &other.to_vec())
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self(core::array::from_fn(|i| {
            core::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        }))
    }
}

/// Closed-form entries of `Qz(θz)·Qy(θy)·Qx(θx)`.
pub fn rotation_from_angles(angles: &RotationAngles) -> RotationMatrix {
    let (sx, cx) = libm::sincos(angles.x);
    let (sy, cy) = libm::sincos(angles.y);
    let (sz, cz) = libm::sincos(angles.z);
    RotationMatrix([
        [cy * cz, sx * sy * cz - cx * sz, cx * sy * cz + sx * sz],
        [cy * sz, sx * sy * sz + cx * cz, cx * sy * sz - sx * cz],
        [-sy, sx * cy, cx * cy],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Translation(pub Vec3);

/// Body-frame landmark coordinates, one point per column of the conformation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    points: Vec<Vec3>,
}

impl Conformation {
    /// Minimum landmark count for the pose to be observable by the pipeline.
    pub const MIN_LANDMARKS: usize = 4;

    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        validate_points(&points, Self::MIN_LANDMARKS, "conformation")?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Known global anchor positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Vec3>,
}

impl AnchorSet {
    /// The per-landmark linear system has four unknowns.
    pub const MIN_ANCHORS: usize = 4;

    pub fn new(anchors: Vec<Vec3>) -> Result<Self> {
        validate_points(&anchors, Self::MIN_ANCHORS, "anchors")?;
        Ok(Self { anchors })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

fn validate_points(points: &[Vec3], min: usize, name: &'static str) -> Result<()> {
    if points.len() < min {
        return Err(Error::Underdetermined {
            rows: points.len(),
            unknowns: min,
        });
    }
    if !points.iter().all(is_finite3) {
        return Err(Error::InvalidParameter {
            name,
            reason: "coordinates must be finite",
        });
    }
    Ok(())
}

/// Rotation angles and translation of the rigid body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseParameters {
    pub angles: RotationAngles,
    pub translation: Translation,
}

/// Global landmark positions `s_n = Q·c_n + t`.
pub fn transform_body(conf: &Conformation, q: &RotationMatrix, t: &Translation) -> Vec<Vec3> {
    conf.points()
        .iter()
        .map(|c| {
            let r = q.apply(c);
            [r[0] + t.0[0], r[1] + t.0[1], r[2] + t.0[2]]
        })
        .collect()
}

/// Draws a zero-mean Gaussian pose.
///
/// `phi_theta_deg2` is the per-angle variance in squared degrees and `phi_t`
/// the per-axis translation variance in m². Draw order is θx, θy, θz, tx, ty, tz.
pub fn sample_pose<R: Rng + ?Sized>(
    phi_theta_deg2: f64,
    phi_t: f64,
    rng: &mut R,
) -> Result<PoseParameters> {
    if !(phi_theta_deg2 > 0.0 && phi_theta_deg2.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "phi_theta",
            reason: "variance must be positive",
        });
    }
    if !(phi_t > 0.0 && phi_t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "phi_t",
            reason: "variance must be positive",
        });
    }
    let angle_std = libm::sqrt(phi_theta_deg2).to_radians();
    let t_std = libm::sqrt(phi_t);
    let mut draw = |std: f64| -> f64 {
        let u: f64 = StandardNormal.sample(rng);
        std * u
    };
    let angles = RotationAngles::new(draw(angle_std), draw(angle_std), draw(angle_std));
    let translation = Translation([draw(t_std), draw(t_std), draw(t_std)]);
    Ok(PoseParameters {
        angles,
        translation,
    })
}
