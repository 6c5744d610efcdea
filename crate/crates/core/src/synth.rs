//! Synthetic scan surfaces with known geometry. Each generator produces a
//! lattice-monotone grid whose true arc lengths have closed forms, so the
//! unwrapping pipeline can be checked against exact answers.
//!
//! The profile runs along one lattice axis (the bend axis); the other axis is
//! straight. Optional sinusoidal ridges are added to z as a function of the
//! arc-length coordinate, which keeps x monotone regardless of amplitude and
//! makes the ridge period on the surface exactly `wavelength`.

use crate::cloud::{GridError, GridParts, Point3, PointCloudGrid};
use crate::math;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    /// z = 0 everywhere (before ridges).
    Plane,
    /// z = coeff * u, a constant slope along the bend axis.
    TiltedPlane,
    /// z = coeff * u^2 along the bend axis.
    ParabolicCylinder,
    /// Circular arc of radius `radius_or_coeff`, sampled uniformly in angle
    /// so adjacent samples are exactly `spacing` apart along the surface.
    CircularHalfCylinder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Parameters for one synthetic grid.
#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub kind: SurfaceKind,
    /// Radius of the circular cylinder, or the polynomial coefficient of the
    /// tilted plane / parabolic profile. Unused for `Plane`.
    pub radius_or_coeff: f64,
    /// Ridge amplitude; 0 disables ridges.
    pub amplitude: f64,
    /// Ridge period measured along the surface.
    pub wavelength: f64,
    pub width: usize,
    pub height: usize,
    /// Sample spacing along both axes (arc spacing on the bend axis of a
    /// circular cylinder, planar spacing otherwise).
    pub spacing: f64,
    /// Lattice axis that follows the curved profile.
    pub bend_axis: Axis,
    /// Axis the ridge crests run along; intensity varies perpendicular to it.
    pub ridge_axis: Axis,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    EmptyGrid,
    NonFiniteParameter,
    NonPositiveSpacing,
    NonPositiveRadius,
    NegativeAmplitude,
    NonPositiveWavelength,
    /// Ridges need at least two samples per period: wavelength > 2 * spacing.
    WavelengthBelowNyquist { wavelength: f64, spacing: f64 },
    /// Ridge amplitude must stay below a quarter wavelength.
    AmplitudeTooLarge { amplitude: f64, wavelength: f64 },
    /// (extent - 1) * spacing / radius exceeds a half turn, which would fold
    /// the arc back over itself.
    SpanExceedsHalfTurn { span: f64 },
    Grid(GridError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::EmptyGrid => write!(f, "grid dimensions must be at least 2x2"),
            SynthError::NonFiniteParameter => write!(f, "parameters must be finite"),
            SynthError::NonPositiveSpacing => write!(f, "spacing must be positive"),
            SynthError::NonPositiveRadius => write!(f, "radius must be positive"),
            SynthError::NegativeAmplitude => write!(f, "ridge amplitude must be non-negative"),
            SynthError::NonPositiveWavelength => write!(f, "ridge wavelength must be positive"),
            SynthError::WavelengthBelowNyquist { wavelength, spacing } => write!(
                f,
                "wavelength {wavelength} must exceed twice the spacing {spacing}"
            ),
            SynthError::AmplitudeTooLarge { amplitude, wavelength } => write!(
                f,
                "amplitude {amplitude} must be below a quarter of the wavelength {wavelength}"
            ),
            SynthError::SpanExceedsHalfTurn { span } => {
                write!(f, "arc span {span} rad exceeds pi")
            }
            SynthError::Grid(e) => write!(f, "generated grid is invalid: {e}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width < 2 || self.height < 2 {
            return Err(SynthError::EmptyGrid);
        }
        if !(self.radius_or_coeff.is_finite()
            && self.amplitude.is_finite()
            && self.wavelength.is_finite()
            && self.spacing.is_finite())
        {
            return Err(SynthError::NonFiniteParameter);
        }
        if self.spacing <= 0.0 {
            return Err(SynthError::NonPositiveSpacing);
        }
        if self.amplitude < 0.0 {
            return Err(SynthError::NegativeAmplitude);
        }
        if self.wavelength <= 0.0 {
            return Err(SynthError::NonPositiveWavelength);
        }
        if self.amplitude > 0.0 {
            if self.wavelength <= 2.0 * self.spacing {
                return Err(SynthError::WavelengthBelowNyquist {
                    wavelength: self.wavelength,
                    spacing: self.spacing,
                });
            }
            if self.amplitude >= self.wavelength / 4.0 {
                return Err(SynthError::AmplitudeTooLarge {
                    amplitude: self.amplitude,
                    wavelength: self.wavelength,
                });
            }
        }
        if self.kind == SurfaceKind::CircularHalfCylinder {
            if self.radius_or_coeff <= 0.0 {
                return Err(SynthError::NonPositiveRadius);
            }
            let bend_extent = match self.bend_axis {
                Axis::X => self.width,
                Axis::Y => self.height,
            };
            let span = (bend_extent - 1) as f64 * self.spacing / self.radius_or_coeff;
            if span > PI {
                return Err(SynthError::SpanExceedsHalfTurn { span });
            }
        }
        Ok(())
    }

    /// Profile height and arc-length coordinate at signed planar/arc offset
    /// `t = (index - center) * spacing` along the bend axis. For the circular
    /// kind `t` is the arc offset itself; otherwise it is planar.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        match self.kind {
            SurfaceKind::Plane => (t, 0.0, t),
            SurfaceKind::TiltedPlane => {
                let c = self.radius_or_coeff;
                (t, c * t, t * math::sqrt(1.0 + c * c))
            }
            SurfaceKind::ParabolicCylinder => {
                (t, self.radius_or_coeff * t * t, parabola_arc(self.radius_or_coeff, t))
            }
            SurfaceKind::CircularHalfCylinder => {
                let r = self.radius_or_coeff;
                let phi = t / r;
                (r * math::sin(phi), r * math::cos(phi), t)
            }
        }
    }
}

fn parabola_arc(c: f64, u: f64) -> f64 {
    if c == 0.0 {
        return u;
    }
    let g = 2.0 * c * u;
    u / 2.0 * math::sqrt(1.0 + g * g) + math::asinh(g) / (4.0 * c)
}

/// Arc length of the generating profile between planar abscissae u0 and u1.
///
/// Plane: u1 - u0. Tilted plane: (u1 - u0) * sqrt(1 + c^2). Parabola
/// z = c u^2: F(u1) - F(u0) with F(u) = u/2 * sqrt(1 + 4c^2u^2)
/// + asinh(2cu) / 4c. Circle of radius R: R * (asin(u1/R) - asin(u0/R)).
pub fn analytic_arc_length(
    kind: SurfaceKind,
    radius_or_coeff: f64,
    u0: f64,
    u1: f64,
) -> Result<f64, SynthError> {
    if !(radius_or_coeff.is_finite() && u0.is_finite() && u1.is_finite()) {
        return Err(SynthError::NonFiniteParameter);
    }
    match kind {
        SurfaceKind::Plane => Ok(u1 - u0),
        SurfaceKind::TiltedPlane => {
            let c = radius_or_coeff;
            Ok((u1 - u0) * math::sqrt(1.0 + c * c))
        }
        SurfaceKind::ParabolicCylinder => {
            Ok(parabola_arc(radius_or_coeff, u1) - parabola_arc(radius_or_coeff, u0))
        }
        SurfaceKind::CircularHalfCylinder => {
            let r = radius_or_coeff;
            if r <= 0.0 {
                return Err(SynthError::NonPositiveRadius);
            }
            if math::fabs(u0) > r || math::fabs(u1) > r {
                return Err(SynthError::SpanExceedsHalfTurn { span: f64::NAN });
            }
            Ok(r * (math::asin(u1 / r) - math::asin(u0 / r)))
        }
    }
}

/// Builds the grid. Both axes are centered on 0; the straight axis is sampled
/// at planar steps of `spacing`, the bend axis per its kind (see `profile`).
/// Ridges add `amplitude * sin(2 pi * arc / wavelength)` to z, where `arc` is
/// the arc-length coordinate running perpendicular to the crest axis.
pub fn generate(spec: &SynthSpec) -> Result<PointCloudGrid, SynthError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;
    let mut points = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (bend_off, straight_off) = match spec.bend_axis {
                Axis::X => ((c as f64 - cx) * spec.spacing, (r as f64 - cy) * spec.spacing),
                Axis::Y => ((r as f64 - cy) * spec.spacing, (c as f64 - cx) * spec.spacing),
            };
            let (bend_planar, mut z, bend_arc) = spec.profile(bend_off);
            if spec.amplitude > 0.0 {
                // The crest axis is constant; the sinusoid runs along the
                // other axis's arc coordinate.
                let arc = if spec.ridge_axis == spec.bend_axis {
                    straight_off
                } else {
                    bend_arc
                };
                z += spec.amplitude * math::sin(2.0 * PI * arc / spec.wavelength);
            }
            let (x, y) = match spec.bend_axis {
                Axis::X => (bend_planar, straight_off),
                Axis::Y => (straight_off, bend_planar),
            };
            points.push(Point3::new(x, y, z));
        }
    }
    PointCloudGrid::new(GridParts { width: w, height: h, points, mask: vec![true; w * h] })
        .map_err(SynthError::Grid)
}
