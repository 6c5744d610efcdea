//! Property tests for the spline basis and least-squares fitting, plus an
//! agreement check against a dense QR solve of the same design matrix.

use fpunwrap_core::bspline::{
    basis_value, build_knot_vector, evaluate_curve, fit_slice, sum_squared_residuals, SlicePoints,
    SplineFit,
};
use proptest::prelude::*;

fn count(knots: &[f64], degree: usize) -> usize {
    knots.len() - degree - 1
}

fn knot_scheme() -> impl Strategy<Value = (usize, usize, f64, f64)> {
    (0usize..=4, 1usize..=10, -5.0f64..5.0, 0.1f64..20.0)
        .prop_map(|(k, s, lo, span)| (k, s, lo, lo + span))
}

proptest! {
    /// Basis functions are a partition of unity over the whole domain.
    #[test]
    fn partition_of_unity((degree, segments, lo, hi) in knot_scheme(), frac in 0.0f64..=1.0) {
        let knots = build_knot_vector(degree, segments, (lo, hi)).unwrap();
        let t = lo + frac * (hi - lo);
        let sum: f64 = (0..count(&knots, degree))
            .map(|i| basis_value(i, degree, t, &knots).unwrap())
            .sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "sum = {sum}");
    }

    /// Each basis function is non-negative and supported on at most
    /// degree + 1 knot spans.
    #[test]
    fn nonnegative_with_local_support(
        (degree, segments, lo, hi) in knot_scheme(),
        frac in 0.0f64..=1.0,
    ) {
        let knots = build_knot_vector(degree, segments, (lo, hi)).unwrap();
        let t = lo + frac * (hi - lo);
        for i in 0..count(&knots, degree) {
            let v = basis_value(i, degree, t, &knots).unwrap();
            prop_assert!(v >= 0.0);
            // Support of basis i is [knots[i], knots[i + degree + 1]].
            if t < knots[i] || t > knots[i + degree + 1] {
                prop_assert_eq!(v, 0.0);
            }
        }
    }

    /// Fitting data drawn from a polynomial of degree <= the spline degree
    /// reproduces it: splines contain polynomials of their own degree.
    #[test]
    fn polynomial_reproduction(
        degree in 1usize..=3,
        segments in 1usize..=6,
        coeffs in prop::array::uniform4(-2.0f64..2.0),
        probe in 0.0f64..=1.0,
    ) {
        let n = 4 * (degree + segments);
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let poly = |x: f64| {
            coeffs
                .iter()
                .take(degree + 1)
                .enumerate()
                .map(|(p, c)| c * x.powi(p as i32))
                .sum::<f64>()
        };
        let zs: Vec<f64> = xs.iter().map(|&x| poly(x)).collect();
        let slice = SlicePoints::new(xs, zs).unwrap();
        let fit = fit_slice(&slice, degree, segments).unwrap();
        let rss = sum_squared_residuals(&fit, &slice).unwrap();
        prop_assert!(rss.sqrt() < 1e-8, "rms residual {}", rss.sqrt());
        let v = evaluate_curve(&fit, probe).unwrap();
        prop_assert!((v - poly(probe)).abs() < 1e-8);
    }

    /// The fit is the least-squares optimum: perturbing any control point
    /// never lowers the sum of squared residuals.
    #[test]
    fn fit_minimizes_squared_residuals(
        degree in 1usize..=3,
        segments in 1usize..=4,
        seed in any::<u64>(),
        which in 0usize..16,
        delta in prop::sample::select(vec![-0.37, -1e-3, 1e-3, 0.37]),
    ) {
        let n = 3 * (degree + segments);
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut state = seed | 1;
        let mut noise = || {
            // xorshift is plenty for test data
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let zs: Vec<f64> = xs.iter().map(|&x| (x * 0.3).sin() + 0.2 * noise()).collect();
        let slice = SlicePoints::new(xs, zs).unwrap();
        let fit = fit_slice(&slice, degree, segments).unwrap();
        let best = sum_squared_residuals(&fit, &slice).unwrap();

        let mut control = fit.control_points().to_vec();
        let i = which % control.len();
        control[i] += delta;
        let perturbed = SplineFit::from_parts(
            degree,
            fit.segments(),
            fit.knots().to_vec(),
            control,
        )
        .unwrap();
        let worse = sum_squared_residuals(&perturbed, &slice).unwrap();
        prop_assert!(worse >= best - 1e-9 * (1.0 + best), "{worse} < {best}");
    }
}

/// The banded normal-equations solve agrees with a dense QR least-squares
/// solve of the same design matrix.
#[test]
fn matches_dense_qr_solution() {
    use nalgebra::{DMatrix, DVector};

    for trial in 0..100u32 {
        let degree = (trial as usize % 4) + 1;
        let segments = (trial as usize % 7) + 1;
        let n = degree + segments;
        let samples = n + 5 + (trial as usize % 40);
        let lo = -1.0 + trial as f64 * 0.01;
        let hi = lo + 2.0 + (trial % 3) as f64;
        let xs: Vec<f64> = (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
            .collect();
        let zs: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x * (1.0 + trial as f64 * 0.07)).sin() + ((i * 2654435761) % 97) as f64 / 97.0)
            .collect();

        let slice = SlicePoints::new(xs.clone(), zs.clone()).unwrap();
        let fit = fit_slice(&slice, degree, segments).unwrap();

        let design = DMatrix::from_fn(samples, n, |r, c| {
            basis_value(c, degree, xs[r], fit.knots()).unwrap()
        });
        let rhs = DVector::from_vec(zs);
        let dense = design.svd(true, true).solve(&rhs, 1e-12).unwrap();

        for (a, b) in fit.control_points().iter().zip(dense.iter()) {
            assert!(
                (a - b).abs() < 1e-8 * (1.0 + b.abs()),
                "trial {trial}: {a} vs {b}"
            );
        }
    }
}
