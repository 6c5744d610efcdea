//! Converts grid-structured 3D point clouds (contactless fingerprint scans)
//! into flat grayscale ridge/valley images: per-row B-spline fits remove the
//! global finger curvature, residuals keep the ridge texture, and arc-length
//! accumulation reassigns planar coordinates so spacing matches the fitted
//! surface. A separate evaluation engine computes EER/ROC/DET/CMC from
//! externally produced matcher scores under the standard pairing protocols.
//!
//! The crate is `no_std` (with `alloc`); all transcendental math goes through
//! `libm` so results are bit-identical across platforms. File formats, CLI,
//! and threading live in the companion `fpunwrap` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod math;

pub mod bspline;
pub mod cloud;
pub mod eval;
pub mod raster;
pub mod synth;
pub mod unwrap;
