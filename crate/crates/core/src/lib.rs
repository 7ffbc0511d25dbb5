#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]
//! Rigid-body localization from anchor-to-landmark range measurements.
//!
//! The crate estimates the Euler angles and translation of a rigid body whose
//! landmark points have known body-frame coordinates, given noisy ranges to a
//! set of anchors at known global positions. Two linearizations of the
//! rotation matrix are provided: the first-order small-angle model and a
//! quadratic sine/cosine model that is re-centred on the previous iterate.
//! Both feed a two-stage Gaussian belief propagation (GaBP) estimator that
//! first solves jointly for rotation and translation, then cancels the
//! translation and refines the rotation alone.
//!
//! Everything here is pure computation over `alloc` collections; file formats,
//! the command line and the parallel Monte-Carlo driver live in the
//! `rbl-harness` crate.

extern crate alloc;

pub mod approx;
pub mod error;
pub mod gabp;
pub mod geometry;
pub mod harness;
pub mod measurement;

mod linalg;

pub use error::{Error, Result};

/// A 3-vector in meters or radians depending on context.
pub type Vec3 = [f64; 3];
