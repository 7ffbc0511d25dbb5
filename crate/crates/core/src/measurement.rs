//! Range simulation and the squared-range linear systems built from it.
//!
//! Squaring a noisy range `d̃ = d + w` gives `d̃² = d² + 2dw + w²`. Dropping
//! `w²` leaves a composite noise `ξ ≈ 2dw` that is linear in the unknowns once
//! the landmark norm `‖s_n‖²` is treated as known (or as an extra unknown, in
//! the per-landmark system of [`build_sensor_system`]).

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{AnchorSet, Conformation};
use crate::linalg::{norm_sq, sub};
use crate::{Error, Result, Vec3};

/// Noisy anchor-to-landmark ranges `d̃[m][n]` in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeObservations {
    ranges: Vec<f64>,
    anchors: usize,
    landmarks: usize,
    sigma_w: f64,
}

impl RangeObservations {
    /// Wraps an existing row-major `M×N` range matrix.
    pub fn from_rows(rows: &[Vec<f64>], sigma_w: f64) -> Result<Self> {
        check_sigma(sigma_w)?;
        let anchors = rows.len();
        let landmarks = rows.first().map_or(0, Vec::len);
        if anchors == 0 || landmarks == 0 {
            return Err(Error::Empty);
        }
        let mut ranges = Vec::with_capacity(anchors * landmarks);
        for row in rows {
            if row.len() != landmarks {
                return Err(Error::DimensionMismatch {
                    what: "range matrix row",
                    expected: landmarks,
                    actual: row.len(),
                });
            }
            ranges.extend_from_slice(row);
        }
        if !ranges.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "ranges",
                reason: "ranges must be finite",
            });
        }
        Ok(Self {
            ranges,
            anchors,
            landmarks,
            sigma_w,
        })
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.ranges[m * self.landmarks + n]
    }

    pub fn anchors(&self) -> usize {
        self.anchors
    }

    pub fn landmarks(&self) -> usize {
        self.landmarks
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }
}

fn check_sigma(sigma_w: f64) -> Result<()> {
    if sigma_w >= 0.0 && sigma_w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "sigma_w",
            reason: "noise standard deviation must be finite and non-negative",
        })
    }
}

/// Simulates `d̃[m][n] = ‖a_m − s_n‖ + w`, `w ~ N(0, σ_w²)`, drawing noise
/// anchor-major (all landmarks of anchor 0 first).
pub fn generate_ranges<R: Rng + ?Sized>(
    anchors: &AnchorSet,
    landmarks: &[Vec3],
    sigma_w: f64,
    rng: &mut R,
) -> Result<RangeObservations> {
    check_sigma(sigma_w)?;
    if landmarks.is_empty() {
        return Err(Error::Empty);
    }
    let mut ranges = Vec::with_capacity(anchors.len() * landmarks.len());
    for a in anchors.positions() {
        for s in landmarks {
            let d = libm::sqrt(norm_sq(&sub(a, s)));
            let w: f64 = StandardNormal.sample(rng);
            ranges.push(d + sigma_w * w);
        }
    }
    Ok(RangeObservations {
        ranges,
        anchors: anchors.len(),
        landmarks: landmarks.len(),
        sigma_w,
    })
}

/// `y = G·[s_n; ‖s_n‖²] + ξ` for one landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLinearSystem {
    pub y: Vec<f64>,
    /// Rows `[−2a_mᵀ, 1]`.
    pub g: Vec<[f64; 4]>,
    pub landmark: usize,
}

/// Landmark position and squared norm recovered from its own ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorEstimate {
    pub position: Vec3,
    pub norm_sq: f64,
}

fn check_shapes(anchors: &AnchorSet, ranges: &RangeObservations) -> Result<()> {
    if anchors.len() != ranges.anchors() {
        return Err(Error::DimensionMismatch {
            what: "anchor count vs range rows",
            expected: anchors.len(),
            actual: ranges.anchors(),
        });
    }
    Ok(())
}

pub fn build_sensor_system(
    anchors: &AnchorSet,
    ranges: &RangeObservations,
    n: usize,
) -> Result<SensorLinearSystem> {
    check_shapes(anchors, ranges)?;
    if n >= ranges.landmarks() {
        return Err(Error::IndexOutOfBounds {
            index: n,
            count: ranges.landmarks(),
        });
    }
    let (y, g) = anchors
        .positions()
        .iter()
        .enumerate()
        .map(|(m, a)| {
            let d = ranges.get(m, n);
            (d * d - norm_sq(a), [-2.0 * a[0], -2.0 * a[1], -2.0 * a[2], 1.0])
        })
        .unzip();
    Ok(SensorLinearSystem { y, g, landmark: n })
}

/// Variance of the linearized composite noise, `4·d̃²·σ_w²`, in the same
/// row-major `M×N` layout as the ranges. The measured range stands in for
/// the unknown true distance.
pub fn composite_noise_power(ranges: &RangeObservations, sigma_w: f64) -> Result<Vec<f64>> {
    check_sigma(sigma_w)?;
    let s2 = sigma_w * sigma_w;
    Ok(ranges.ranges.iter().map(|d| 4.0 * d * d * s2).collect())
}

/// How the per-row noise power `N₀` fed to the estimator is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoisePower {
    /// `4·d̃²·σ_w²` per anchor-landmark pair.
    #[default]
    PerRow,
    /// One value for every row.
    Scalar(f64),
}

/// Where the landmark norms `‖s_n‖²` in the parameter observation come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    /// True norms, available only in simulation.
    Oracle,
    /// Estimated per landmark from its own linear system.
    #[default]
    Estimated,
}

/// Effective observation `z_n` for one landmark, with the per-row noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterObservation {
    pub z: Vec<f64>,
    pub n0: Vec<f64>,
}

/// Row vector `c_nᵀ ⊗ a_mᵀ`, so that `(c ⊗ a)·vec(Q) = aᵀ·Q·c`.
pub fn kron_row(c: &Vec3, a: &Vec3) -> [f64; 9] {
    core::array::from_fn(|r| c[r / 3] * a[r % 3])
}

/// `z_{m,n} = d̃²_{m,n} − ‖a_m‖² − ‖s_n‖² + 2(c_nᵀ ⊗ a_mᵀ)·γ`, one entry per
/// anchor, one observation per landmark. `gamma_vec` is the constant part of
/// the active vectorized rotation model.
pub fn build_parameter_observation(
    anchors: &AnchorSet,
    conf: &Conformation,
    ranges: &RangeObservations,
    norm_sq_n: &[f64],
    gamma_vec: &[f64; 9],
) -> Result<Vec<ParameterObservation>> {
    check_shapes(anchors, ranges)?;
    if conf.len() != ranges.landmarks() {
        return Err(Error::DimensionMismatch {
            what: "landmark count vs range columns",
            expected: conf.len(),
            actual: ranges.landmarks(),
        });
    }
    if norm_sq_n.len() != conf.len() {
        return Err(Error::DimensionMismatch {
            what: "landmark norms",
            expected: conf.len(),
            actual: norm_sq_n.len(),
        });
    }
    let n0_all = composite_noise_power(ranges, ranges.sigma_w())?;
    let out = conf
        .points()
        .iter()
        .zip(norm_sq_n)
        .enumerate()
        .map(|(n, (c, s2))| {
            let mut z = Vec::with_capacity(anchors.len());
            let mut n0 = Vec::with_capacity(anchors.len());
            for (m, a) in anchors.positions().iter().enumerate() {
                let d = ranges.get(m, n);
                let k = kron_row(c, a);
                let kg: f64 = k.iter().zip(gamma_vec).map(|(x, g)| x * g).sum();
                z.push(d * d - norm_sq(a) - s2 + 2.0 * kg);
                n0.push(n0_all[m * ranges.landmarks() + n]);
            }
            ParameterObservation { z, n0 }
        })
        .collect();
    Ok(out)
}

/// All landmark observations stacked into one `N·M`-row system, landmark-major
/// (edge `n·M + m`), with the noise power chosen by `mode`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObservation {
    pub z: Vec<f64>,
    pub n0: Vec<f64>,
}

pub fn stack_observations(obs: &[ParameterObservation], mode: NoisePower) -> StackedObservation {
    let z = obs.iter().flat_map(|o| o.z.iter().copied()).collect();
    let n0 = match mode {
        NoisePower::PerRow => obs.iter().flat_map(|o| o.n0.iter().copied()).collect(),
        NoisePower::Scalar(v) => alloc::vec![v; obs.iter().map(|o| o.z.len()).sum()],
    };
    StackedObservation { z, n0 }
}

/// Squared norm of every landmark position, for [`NormMode::Oracle`].
pub fn landmark_norms(landmarks: &[Vec3]) -> Vec<f64> {
    landmarks.iter().map(norm_sq).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::default_scenario;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_anchor_set() -> AnchorSet {
        AnchorSet::new(vec![
            [10.0, 10.0, 10.0],
            [-10.0, 10.0, 10.0],
            [10.0, -10.0, 10.0],
            [10.0, 10.0, -10.0],
        ])
        .unwrap()
    }

    #[test]
    fn noiseless_ranges_are_exact_distances() {
        let anchors = single_anchor_set();
        let s = vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let r = generate_ranges(&anchors, &s, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((r.get(0, 0) - 300f64.sqrt()).abs() < 1e-12);
        assert!((r.get(0, 0) - 17.3205).abs() < 1e-4);
        let want = ((9.0f64).powi(2) + 8.0f64.powi(2) + 7.0f64.powi(2)).sqrt();
        assert!((r.get(0, 1) - want).abs() < 1e-12);
    }

    #[test]
    fn negative_sigma_rejected() {
        let anchors = single_anchor_set();
        let err = generate_ranges(&anchors, &[[0.0; 3]], -0.1, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(err, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn range_noise_has_requested_std() {
        let anchors = single_anchor_set();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 300f64.sqrt();
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let r = generate_ranges(&anchors, &[[0.0; 3]], 0.1, &mut rng).unwrap();
            acc += (r.get(0, 0) - d).powi(2);
        }
        let std = (acc / draws as f64).sqrt();
        assert!((std - 0.1).abs() / 0.1 < 0.02, "std {std}");
    }

    #[test]
    fn sensor_system_rows() {
        let sc = default_scenario();
        let s = vec![[0.0; 3]];
        let r = generate_ranges(&sc.anchors, &s, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let sys = build_sensor_system(&sc.anchors, &r, 0).unwrap();
        for (m, a) in sc.anchors.positions().iter().enumerate() {
            let d = r.get(m, 0);
            assert!((sys.y[m] - (d * d - 300.0)).abs() < 1e-12);
            assert_eq!(sys.g[m], [-2.0 * a[0], -2.0 * a[1], -2.0 * a[2], 1.0]);
        }
        assert!(matches!(
            build_sensor_system(&sc.anchors, &r, 1),
            Err(Error::IndexOutOfBounds { index: 1, count: 1 })
        ));
    }

    #[test]
    fn noiseless_sensor_system_is_consistent() {
        let sc = default_scenario();
        let s = vec![[1.5, -2.0, 0.7], [-3.0, 0.2, 4.1]];
        let r = generate_ranges(&sc.anchors, &s, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (n, sn) in s.iter().enumerate() {
            let sys = build_sensor_system(&sc.anchors, &r, n).unwrap();
            let x = [sn[0], sn[1], sn[2], norm_sq(sn)];
            for (y, g) in sys.y.iter().zip(&sys.g) {
                let gx: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
                assert!((y - gx).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn composite_noise_power_values() {
        let r = RangeObservations::from_rows(&[vec![10.0, 5.0]], 0.1).unwrap();
        let p = composite_noise_power(&r, 0.1).unwrap();
        assert!((p[0] - 4.0).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert!(composite_noise_power(&r, 0.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn composite_noise_variance_matches_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (d, sigma) = (10.0f64, 0.1f64);
        let draws = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let w: f64 = StandardNormal.sample(&mut rng);
            let dt = d + sigma * w;
            let e = dt * dt - d * d;
            s1 += e;
            s2 += e * e;
        }
        let mean = s1 / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        assert!((var - 4.0).abs() / 4.0 < 0.03, "var {var}");
    }

    #[test]
    fn dropped_square_term_is_small() {
        // E[w²] relative to the std of 2dw at the nominal body-to-anchor distance.
        let d = 300f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        for sigma in [0.01, 0.1, 0.3] {
            let mut w2 = 0.0;
            for _ in 0..draws {
                let w: f64 = StandardNormal.sample(&mut rng);
                w2 += (sigma * w).powi(2);
            }
            let ratio = w2 / draws as f64 / (2.0 * d * sigma);
            assert!(ratio < 0.01, "sigma {sigma}: {ratio}");
        }
    }

    #[test]
    fn kron_row_matches_bilinear_form() {
        let c = [0.3, -1.2, 2.0];
        let a = [4.0, 0.5, -7.0];
        let q = crate::geometry::rotation_from_angles(&crate::geometry::RotationAngles::new(0.2, -0.4, 1.1));
        let k = kron_row(&c, &a);
        let lhs: f64 = k.iter().zip(q.to_vec()).map(|(x, v)| x * v).sum();
        assert!((lhs - crate::linalg::dot(&a, &q.apply(&c))).abs() < 1e-12);
    }

    #[test]
    fn origin_landmark_drops_kronecker_term() {
        let sc = default_scenario();
        let mut pts = sc.conformation.points().to_vec();
        pts[0] = [0.0; 3];
        let conf = Conformation::new(pts.clone()).unwrap();
        let r = generate_ranges(&sc.anchors, &pts, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let norms = landmark_norms(&pts);
        let gamma = crate::geometry::RotationMatrix::IDENTITY.to_vec();
        let obs = build_parameter_observation(&sc.anchors, &conf, &r, &norms, &gamma).unwrap();
        for (m, a) in sc.anchors.positions().iter().enumerate() {
            let d = r.get(m, 0);
            assert!((obs[0].z[m] - (d * d - norm_sq(a))).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_observation_shape_errors() {
        let sc = default_scenario();
        let pts = sc.conformation.points().to_vec();
        let r = generate_ranges(&sc.anchors, &pts, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let gamma = [0.0; 9];
        assert!(matches!(
            build_parameter_observation(&sc.anchors, &sc.conformation, &r, &[0.0; 3], &gamma),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stacking_orders_landmark_major() {
        let obs = vec![
            ParameterObservation { z: vec![1.0, 2.0], n0: vec![0.1, 0.2] },
            ParameterObservation { z: vec![3.0, 4.0], n0: vec![0.3, 0.4] },
        ];
        let s = stack_observations(&obs, NoisePower::PerRow);
        assert_eq!(s.z, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.n0, vec![0.1, 0.2, 0.3, 0.4]);
        let s = stack_observations(&obs, NoisePower::Scalar(2.5));
        assert_eq!(s.n0, vec![2.5; 4]);
    }
}
