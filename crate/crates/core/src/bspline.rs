//! Clamped B-spline basis evaluation and least-squares curve fitting for one
//! slice. Splines are function-form z = f(x): the parameter t is the sample's
//! x coordinate, so downstream stages can query fitted z at arbitrary x.
//!
//! Conventions: n = degree + segments control points; knot count n + degree + 1;
//! end knots repeated degree+1 times; interior knots uniform; 0/0 in the
//! Cox-de Boor recursion is 0; the basis is closed on the right so the last
//! basis function is 1 at the domain's right endpoint.

use crate::math;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum FitError {
    DegenerateDomain,
    InsufficientPoints { needed: usize, got: usize },
    EmptySegment { segment: usize },
    RankDeficient,
    OutOfDomain { x: f64, domain: (f64, f64) },
    IndexOutOfRange { index: usize, count: usize },
    NonFiniteSolution,
    SliceLengthMismatch { xs: usize, zs: usize },
    SliceNotIncreasing { position: usize },
    SliceNonFinite { position: usize },
    MalformedFit,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::DegenerateDomain => write!(f, "slice domain is degenerate (x_min >= x_max)"),
            FitError::InsufficientPoints { needed, got } => {
                write!(f, "slice has {got} points but the fit needs at least {needed}")
            }
            FitError::EmptySegment { segment } => {
                write!(f, "knot segment {segment} contains no data point")
            }
            FitError::RankDeficient => write!(f, "normal equations are rank deficient"),
            FitError::OutOfDomain { x, domain } => {
                write!(f, "x = {x} outside fit domain [{}, {}]", domain.0, domain.1)
            }
            FitError::IndexOutOfRange { index, count } => {
                write!(f, "basis index {index} out of range for {count} basis functions")
            }
            FitError::NonFiniteSolution => write!(f, "fit produced non-finite control points"),
            FitError::SliceLengthMismatch { xs, zs } => {
                write!(f, "slice arrays differ in length ({xs} xs, {zs} zs)")
            }
            FitError::SliceNotIncreasing { position } => {
                write!(f, "slice xs not strictly increasing at position {position}")
            }
            FitError::SliceNonFinite { position } => {
                write!(f, "slice value at position {position} is not finite")
            }
            FitError::MalformedFit => write!(f, "fit parts violate the spline invariants"),
        }
    }
}

impl core::error::Error for FitError {}

/// One slice's data: strictly increasing xs with matching zs.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicePoints {
    xs: Vec<f64>,
    zs: Vec<f64>,
}

impl SlicePoints {
    pub fn new(xs: Vec<f64>, zs: Vec<f64>) -> Result<Self, FitError> {
        if xs.len() != zs.len() {
            return Err(FitError::SliceLengthMismatch { xs: xs.len(), zs: zs.len() });
        }
        for (p, (&x, &z)) in xs.iter().zip(&zs).enumerate() {
            if !x.is_finite() || !z.is_finite() {
                return Err(FitError::SliceNonFinite { position: p });
            }
            if p > 0 && x <= xs[p - 1] {
                return Err(FitError::SliceNotIncreasing { position: p });
            }
        }
        Ok(SlicePoints { xs, zs })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }
}

/// A fitted clamped B-spline curve z = f(x) over one slice's x-extent.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineFit {
    degree: usize,
    segments: usize,
    knots: Vec<f64>,
    control_points: Vec<f64>,
    domain: (f64, f64),
}

impl SplineFit {
    /// Reassembles a fit from stored parts, re-checking the invariants:
    /// control-point count degree+segments, knot count n+degree+1,
    /// non-decreasing knots clamped degree+1 deep at both ends, all values
    /// finite.
    pub fn from_parts(
        degree: usize,
        segments: usize,
        knots: Vec<f64>,
        control_points: Vec<f64>,
    ) -> Result<Self, FitError> {
        let n = degree + segments;
        if segments == 0
            || control_points.len() != n
            || knots.len() != n + degree + 1
            || control_points.iter().any(|p| !p.is_finite())
            || knots.iter().any(|u| !u.is_finite())
        {
            return Err(FitError::MalformedFit);
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(FitError::MalformedFit);
        }
        let lo = knots[0];
        let hi = knots[knots.len() - 1];
        if lo >= hi
            || knots[..degree + 1].iter().any(|&u| u != lo)
            || knots[knots.len() - degree - 1..].iter().any(|&u| u != hi)
        {
            return Err(FitError::MalformedFit);
        }
        Ok(SplineFit { degree, segments, knots, control_points, domain: (lo, hi) })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn control_points(&self) -> &[f64] {
        &self.control_points
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Clamped knot vector: degree+1 copies of each endpoint with segments−1
/// uniformly spaced interior knots.
pub fn build_knot_vector(
    degree: usize,
    segments: usize,
    domain: (f64, f64),
) -> Result<Vec<f64>, FitError> {
    let (lo, hi) = domain;
    if segments == 0 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(FitError::DegenerateDomain);
    }
    let n = degree + segments;
    let mut knots = Vec::with_capacity(n + degree + 1);
    for _ in 0..degree + 1 {
        knots.push(lo);
    }
    for j in 1..segments {
        knots.push(lo + (hi - lo) * (j as f64) / (segments as f64));
    }
    for _ in 0..degree + 1 {
        knots.push(hi);
    }
    Ok(knots)
}

/// Cox-de Boor recursion. 0/0 terms are 0; at the right endpoint the basis
/// over the last non-empty interval evaluates to 1 (closed-right convention).
fn basis_rec(i: usize, k: usize, t: f64, knots: &[f64]) -> f64 {
    if k == 0 {
        let hi = knots[knots.len() - 1];
        let in_interval = knots[i] <= t && t < knots[i + 1];
        let closes_right = t == hi && knots[i] < knots[i + 1] && knots[i + 1] == hi;
        return if in_interval || closes_right { 1.0 } else { 0.0 };
    }
    let mut acc = 0.0;
    let d_left = knots[i + k] - knots[i];
    if d_left > 0.0 {
        acc += (t - knots[i]) / d_left * basis_rec(i, k - 1, t, knots);
    }
    let d_right = knots[i + k + 1] - knots[i + 1];
    if d_right > 0.0 {
        acc += (knots[i + k + 1] - t) / d_right * basis_rec(i + 1, k - 1, t, knots);
    }
    acc
}

/// N_{i,degree}(t) with argument validation.
pub fn basis_value(i: usize, degree: usize, t: f64, knots: &[f64]) -> Result<f64, FitError> {
    let count = knots.len().saturating_sub(degree + 1);
    if i >= count {
        return Err(FitError::IndexOutOfRange { index: i, count });
    }
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    if !(t >= lo && t <= hi) {
        return Err(FitError::OutOfDomain { x: t, domain: (lo, hi) });
    }
    Ok(basis_rec(i, degree, t, knots))
}

/// Index of the knot segment containing t: the largest j with
/// boundary_j <= t, clamped so the right endpoint belongs to the last
/// segment. Boundaries are knots[degree ..= degree+segments].
fn locate_segment(t: f64, degree: usize, segments: usize, knots: &[f64]) -> usize {
    let bounds = &knots[degree..degree + segments + 1];
    let after = bounds.partition_point(|&u| u <= t);
    after.saturating_sub(1).min(segments - 1)
}

/// Least-squares fit of one slice: solves NᵀN P = NᵀC via dense Cholesky,
/// exploiting that each sample touches only degree+1 basis functions.
pub fn fit_slice(slice: &SlicePoints, degree: usize, segments: usize) -> Result<SplineFit, FitError> {
    let n = degree + segments;
    if slice.len() < n {
        return Err(FitError::InsufficientPoints { needed: n, got: slice.len() });
    }
    let lo = slice.xs[0];
    let hi = slice.xs[slice.len() - 1];
    let knots = build_knot_vector(degree, segments, (lo, hi))?;

    let mut seen = vec![false; segments];
    for &x in &slice.xs {
        seen[locate_segment(x, degree, segments, &knots)] = true;
    }
    if let Some(segment) = seen.iter().position(|&s| !s) {
        return Err(FitError::EmptySegment { segment });
    }

    let mut a = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    let mut vals = vec![0.0f64; degree + 1];
    for (&x, &z) in slice.xs.iter().zip(&slice.zs) {
        let j = locate_segment(x, degree, segments, &knots);
        for (off, v) in vals.iter_mut().enumerate() {
            *v = basis_rec(j + off, degree, x, &knots);
        }
        for (ra, &va) in vals.iter().enumerate() {
            rhs[j + ra] += va * z;
            for (rb, &vb) in vals.iter().enumerate() {
                a[(j + ra) * n + (j + rb)] += va * vb;
            }
        }
    }

    let control_points = cholesky_solve(a, rhs, n)?;
    if control_points.iter().any(|p| !p.is_finite()) {
        return Err(FitError::NonFiniteSolution);
    }
    Ok(SplineFit { degree, segments, knots, control_points, domain: (lo, hi) })
}

/// In-place dense SPD Cholesky solve; pivots below 1e-12 of the largest
/// diagonal entry are treated as rank deficiency.
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>, FitError> {
    let mut max_diag = 0.0f64;
    for j in 0..n {
        max_diag = max_diag.max(a[j * n + j]);
    }
    let tol = 1e-12 * max_diag;

    for j in 0..n {
        let mut d = a[j * n + j];
        for m in 0..j {
            d -= a[j * n + m] * a[j * n + m];
        }
        if !(d >= tol) {
            return Err(FitError::RankDeficient);
        }
        let l_jj = math::sqrt(d);
        a[j * n + j] = l_jj;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for m in 0..j {
                v -= a[i * n + m] * a[j * n + m];
            }
            a[i * n + j] = v / l_jj;
        }
    }
    // Ly = b
    for i in 0..n {
        let mut v = b[i];
        for m in 0..i {
            v -= a[i * n + m] * b[m];
        }
        b[i] = v / a[i * n + i];
    }
    // Lᵀp = y
    for i in (0..n).rev() {
        let mut v = b[i];
        for m in i + 1..n {
            v -= a[m * n + i] * b[m];
        }
        b[i] = v / a[i * n + i];
    }
    Ok(b)
}

/// Σ P_i · N_{i,k}(x) over the degree+1 basis functions alive at x.
pub fn evaluate_curve(fit: &SplineFit, x: f64) -> Result<f64, FitError> {
    let (lo, hi) = fit.domain;
    if !(x >= lo && x <= hi) {
        return Err(FitError::OutOfDomain { x, domain: fit.domain });
    }
    let j = locate_segment(x, fit.degree, fit.segments, &fit.knots);
    let mut acc = 0.0;
    for off in 0..fit.degree + 1 {
        acc += fit.control_points[j + off] * basis_rec(j + off, fit.degree, x, &fit.knots);
    }
    Ok(acc)
}

/// Sum of squared residuals of a fit over a slice; the optimality property
/// tests perturb control points and check this never decreases.
pub fn sum_squared_residuals(fit: &SplineFit, slice: &SlicePoints) -> Result<f64, FitError> {
    let mut acc = 0.0;
    for (&x, &z) in slice.xs.iter().zip(&slice.zs) {
        let r = z - evaluate_curve(fit, x)?;
        acc += r * r;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_vector_example_is_exact() {
        let knots = build_knot_vector(2, 8, (0.0, 900.0)).unwrap();
        let expected = [
            0.0, 0.0, 0.0, 112.5, 225.0, 337.5, 450.0, 562.5, 675.0, 787.5, 900.0, 900.0, 900.0,
        ];
        assert_eq!(knots, expected);
    }

    #[test]
    fn knot_vector_trivial_cases() {
        assert_eq!(build_knot_vector(0, 1, (0.0, 1.0)).unwrap(), [0.0, 1.0]);
        assert_eq!(
            build_knot_vector(2, 1, (0.0, 1.0)).unwrap(),
            [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(build_knot_vector(2, 1, (1.0, 1.0)), Err(FitError::DegenerateDomain));
    }

    #[test]
    fn degree_zero_basis_is_indicator() {
        let knots = [0.0, 1.0];
        assert_eq!(basis_value(0, 0, 0.5, &knots).unwrap(), 1.0);
        assert_eq!(basis_value(0, 0, 0.0, &knots).unwrap(), 1.0);
        // closed right: the single interval also owns its right endpoint
        assert_eq!(basis_value(0, 0, 1.0, &knots).unwrap(), 1.0);
    }

    #[test]
    fn bezier_basis_hand_value() {
        // Pure Bézier knots: N_{0,2}(t) = (1-t)², so N_{0,2}(0.5) = 0.25.
        let knots = build_knot_vector(2, 1, (0.0, 1.0)).unwrap();
        assert_eq!(basis_value(0, 2, 0.5, &knots).unwrap(), 0.25);
        assert_eq!(basis_value(2, 2, 1.0, &knots).unwrap(), 1.0);
        assert_eq!(basis_value(0, 2, 1.0, &knots).unwrap(), 0.0);
    }

    #[test]
    fn basis_rejects_bad_arguments() {
        let knots = build_knot_vector(2, 2, (0.0, 1.0)).unwrap();
        assert!(matches!(
            basis_value(0, 2, 1.5, &knots),
            Err(FitError::OutOfDomain { .. })
        ));
        assert!(matches!(
            basis_value(4, 2, 0.5, &knots),
            Err(FitError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn partition_of_unity_spot_check() {
        let knots = build_knot_vector(2, 8, (0.0, 900.0)).unwrap();
        let t = 0.37 * 900.0;
        let total: f64 = (0..10).map(|i| basis_value(i, 2, t, &knots).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    fn slice_of(f: impl Fn(f64) -> f64, xs: &[f64]) -> SlicePoints {
        SlicePoints::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect()).unwrap()
    }

    #[test]
    fn constant_data_reproduced() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        for k in 0..4 {
            let fit = fit_slice(&slice_of(|_| 3.0, &xs), k, 4).unwrap();
            for &x in &xs {
                assert!((evaluate_curve(&fit, x).unwrap() - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_reproduction() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        let fit = fit_slice(&slice_of(|x| x * x, &xs), 2, 4).unwrap();
        let mut ss = 0.0;
        for &x in &xs {
            let r = evaluate_curve(&fit, x).unwrap() - x * x;
            ss += r * r;
        }
        let rms = math::sqrt(ss / xs.len() as f64);
        assert!(rms < 1e-8, "rms = {rms}");
        assert!((evaluate_curve(&fit, 0.5).unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn empty_segment_is_named() {
        // All samples in the left half: segment 1 of 2 has no support.
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 20.0).collect();
        let mut xs = xs;
        xs.push(1.0); // domain reaches 1 but (0.55..1) stays empty
        let err = fit_slice(&slice_of(|x| x, &xs), 1, 4).unwrap_err();
        assert_eq!(err, FitError::EmptySegment { segment: 2 });
    }

    #[test]
    fn insufficient_points_reported() {
        let xs = [0.0, 1.0, 2.0];
        let err = fit_slice(&slice_of(|x| x, &xs), 2, 8).unwrap_err();
        assert_eq!(err, FitError::InsufficientPoints { needed: 10, got: 3 });
    }

    #[test]
    fn evaluation_at_right_endpoint_succeeds() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let fit = fit_slice(&slice_of(|x| 2.0 * x + 1.0, &xs), 2, 3).unwrap();
        let z = evaluate_curve(&fit, 19.0).unwrap();
        assert!((z - 39.0).abs() < 1e-9);
        assert!(matches!(
            evaluate_curve(&fit, 19.0001),
            Err(FitError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn from_parts_validates_invariants() {
        let knots = build_knot_vector(2, 2, (0.0, 1.0)).unwrap();
        assert!(SplineFit::from_parts(2, 2, knots.clone(), vec![0.0; 4]).is_ok());
        assert_eq!(
            SplineFit::from_parts(2, 2, knots.clone(), vec![0.0; 3]),
            Err(FitError::MalformedFit)
        );
        let mut bad = knots;
        bad[3] = -0.5;
        assert_eq!(SplineFit::from_parts(2, 2, bad, vec![0.0; 4]), Err(FitError::MalformedFit));
    }
}
