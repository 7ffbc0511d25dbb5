//! CSV writers. Every file starts with a header row.

use std::io::Write;

use rbl_core::approx::ApproxSample;
use rbl_core::harness::RmseRow;
use serde::Serialize;

use crate::HarnessError;

#[derive(Serialize)]
struct RmseRecord<'a> {
    phi_theta_deg2: f64,
    sigma: f64,
    method: &'a str,
    rmse_rotation_deg: f64,
    rmse_translation_m: f64,
    diverged: usize,
    mean_iterations: f64,
}

#[derive(Serialize)]
struct ApproxRecord {
    theta: f64,
    sin: f64,
    small_sin: f64,
    quad_sin: f64,
    cos: f64,
    small_cos: f64,
    quad_cos: f64,
    sin_err_small: f64,
    sin_err_quad: f64,
    cos_err_small: f64,
    cos_err_quad: f64,
}

pub fn write_rmse_csv<W: Write>(rows: &[RmseRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(RmseRecord {
            phi_theta_deg2: r.phi_theta_deg2,
            sigma: r.sigma,
            method: r.method.name(),
            rmse_rotation_deg: r.rmse_rotation_deg,
            rmse_translation_m: r.rmse_translation_m,
            diverged: r.diverged,
            mean_iterations: r.mean_iterations,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_approx_csv<W: Write>(samples: &[ApproxSample], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(ApproxRecord {
            theta: s.theta,
            sin: s.sin,
            small_sin: s.small_sin,
            quad_sin: s.quad_sin,
            cos: s.cos,
            small_cos: s.small_cos,
            quad_cos: s.quad_cos,
            sin_err_small: s.sin_err_small(),
            sin_err_quad: s.sin_err_quad(),
            cos_err_small: s.cos_err_small(),
            cos_err_quad: s.cos_err_quad(),
        })?;
    }
    w.flush()?;
    Ok(())
}
