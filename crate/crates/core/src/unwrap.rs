//! Surface flattening: per-row B-spline fits remove global curvature
//! (detrending), then planar coordinates are reassigned so adjacent spacing
//! equals the chordal arc length along the fitted curves, first within rows
//! (x), then within columns (y).
//!
//! Distances use the fitted curve's z, not the raw samples, so ridge texture
//! never inflates the unwrapped extent. Each slice anchors its accumulated
//! coordinate at the grid's central column/row to keep the output centered.

use crate::bspline::{self, FitError, SplineFit};
use crate::cloud::{GridParts, Point3, PointCloudGrid};
use crate::math;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum UnwrapError {
    RowFit { row: usize, source: FitError },
    FitsLengthMismatch { expected: usize, got: usize },
    MissingRowFit { row: usize },
    DimensionMismatch,
    InvalidCoords { position: usize },
    NotMonotone { row: usize, col: usize },
}

impl fmt::Display for UnwrapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnwrapError::RowFit { row, source } => write!(f, "row {row}: {source}"),
            UnwrapError::FitsLengthMismatch { expected, got } => {
                write!(f, "{got} fits supplied for {expected} grid rows")
            }
            UnwrapError::MissingRowFit { row } => {
                write!(f, "row {row} has valid points but no fit")
            }
            UnwrapError::DimensionMismatch => {
                write!(f, "unwrapped cloud does not match the detrended grid")
            }
            UnwrapError::InvalidCoords { position } => {
                write!(f, "coordinate {position} is not finite")
            }
            UnwrapError::NotMonotone { row, col } => {
                write!(f, "coordinates not strictly increasing at ({row}, {col})")
            }
        }
    }
}

impl core::error::Error for UnwrapError {}

/// Fits every grid row with enough valid points; rows with fewer than
/// degree+partitions valid cells are flagged as `None` rather than fitted.
/// Rank errors on rows that do have enough points abort with the row index.
pub fn fit_all_rows(
    grid: &PointCloudGrid,
    degree: usize,
    partitions: usize,
) -> Result<Vec<Option<SplineFit>>, UnwrapError> {
    let n = degree + partitions;
    let mut fits = Vec::with_capacity(grid.height());
    for r in 0..grid.height() {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for c in 0..grid.width() {
            if grid.is_valid(r, c) {
                let p = grid.point(r, c);
                xs.push(p.x);
                zs.push(p.z);
            }
        }
        if xs.len() < n {
            fits.push(None);
            continue;
        }
        let slice = bspline::SlicePoints::new(xs, zs)
            .map_err(|source| UnwrapError::RowFit { row: r, source })?;
        let fit = bspline::fit_slice(&slice, degree, partitions)
            .map_err(|source| UnwrapError::RowFit { row: r, source })?;
        fits.push(Some(fit));
    }
    Ok(fits)
}

/// Residual grid plus the per-row fitted curves the y stage needs. Cells in
/// flagged (unfitted) rows are masked out; everything else keeps its mask.
#[derive(Clone, Debug)]
pub struct DetrendedCloud {
    base: PointCloudGrid,
    row_fits: Vec<Option<SplineFit>>,
    // Fitted z cached per cell (NaN where masked); equals
    // evaluate_curve(row_fit, x) bit-for-bit and serves both unwrap stages.
    fitted: Vec<f64>,
}

impl DetrendedCloud {
    pub fn grid(&self) -> &PointCloudGrid {
        &self.base
    }

    pub fn row_fits(&self) -> &[Option<SplineFit>] {
        &self.row_fits
    }

    pub fn fitted_z(&self, row: usize, col: usize) -> Option<f64> {
        if self.base.is_valid(row, col) {
            Some(self.fitted[row * self.base.width() + col])
        } else {
            None
        }
    }
}

/// Subtracts each row's fitted curve from its z values. The residual of a
/// valid cell is exactly `z - evaluate_curve(row_fit, x)`.
pub fn detrend(
    grid: &PointCloudGrid,
    fits: Vec<Option<SplineFit>>,
) -> Result<DetrendedCloud, UnwrapError> {
    if fits.len() != grid.height() {
        return Err(UnwrapError::FitsLengthMismatch {
            expected: grid.height(),
            got: fits.len(),
        });
    }
    let (w, h) = (grid.width(), grid.height());
    let mut points = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut fitted = vec![f64::NAN; w * h];
    for r in 0..h {
        for c in 0..w {
            let p = grid.point(r, c);
            let valid = grid.is_valid(r, c);
            match (&fits[r], valid) {
                (Some(fit), true) => {
                    let fz = bspline::evaluate_curve(fit, p.x)
                        .map_err(|source| UnwrapError::RowFit { row: r, source })?;
                    fitted[r * w + c] = fz;
                    points.push(Point3::new(p.x, p.y, p.z - fz));
                    mask.push(true);
                }
                _ => {
                    points.push(p);
                    mask.push(false);
                }
            }
        }
    }
    let base = PointCloudGrid::new(GridParts { width: w, height: h, points, mask })
        .map_err(|_| UnwrapError::DimensionMismatch)?;
    Ok(DetrendedCloud { base, row_fits: fits, fitted })
}

/// Chordal step between two adjacent samples: sqrt(dx² + dz²).
/// `hypot` keeps the flat case exact: adjacent_distance(h, 0) == h.
pub fn adjacent_distance(dx: f64, dz: f64) -> f64 {
    math::hypot(dx, dz)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnwrappedPoint {
    pub xp: f64,
    pub yp: f64,
    pub z: f64,
}

/// Grid of (x′, y′, residual) coordinates after unwrapping. Valid runs are
/// strictly increasing in x′ along rows and y′ along columns, and each
/// unwrapped step is at least as long as its projection.
#[derive(Clone, Debug, PartialEq)]
pub struct UnwrappedCloud {
    width: usize,
    height: usize,
    coords: Vec<UnwrappedPoint>,
    mask: Vec<bool>,
}

impl UnwrappedCloud {
    /// Validates sizes, finiteness of valid coordinates, and strict
    /// monotonicity of x′ along rows / y′ along columns among valid cells.
    pub fn new(
        width: usize,
        height: usize,
        coords: Vec<UnwrappedPoint>,
        mask: Vec<bool>,
    ) -> Result<Self, UnwrapError> {
        if width == 0 || height == 0 || coords.len() != width * height || mask.len() != coords.len()
        {
            return Err(UnwrapError::DimensionMismatch);
        }
        for (i, p) in coords.iter().enumerate() {
            if mask[i] && !(p.xp.is_finite() && p.yp.is_finite() && p.z.is_finite()) {
                return Err(UnwrapError::InvalidCoords { position: i });
            }
        }
        for r in 0..height {
            let mut prev: Option<f64> = None;
            for c in 0..width {
                if !mask[r * width + c] {
                    continue;
                }
                let xp = coords[r * width + c].xp;
                if prev.is_some_and(|p| xp <= p) {
                    return Err(UnwrapError::NotMonotone { row: r, col: c });
                }
                prev = Some(xp);
            }
        }
        for c in 0..width {
            let mut prev: Option<f64> = None;
            for r in 0..height {
                if !mask[r * width + c] {
                    continue;
                }
                let yp = coords[r * width + c].yp;
                if prev.is_some_and(|p| yp <= p) {
                    return Err(UnwrapError::NotMonotone { row: r, col: c });
                }
                prev = Some(yp);
            }
        }
        Ok(UnwrappedCloud { width, height, coords, mask })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn point(&self, row: usize, col: usize) -> UnwrappedPoint {
        self.coords[row * self.width + col]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn coords(&self) -> &[UnwrappedPoint] {
        &self.coords
    }
}

/// Central cell index used as the accumulation origin.
fn anchor_index(extent: usize) -> usize {
    (extent - 1) / 2
}

/// The valid index closest to the anchor target; ties go to the smaller
/// index. `indices` is non-empty and ascending.
fn nearest_valid(indices: &[usize], target: usize) -> usize {
    let mut best = indices[0];
    let mut best_dist = best.abs_diff(target);
    for &i in &indices[1..] {
        let d = i.abs_diff(target);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

/// Per-row arc-length accumulation: x′ gaps equal the chordal distance along
/// the row's fitted curve; gaps across masked cells accumulate a single step
/// between the gap's endpoints; each row is anchored so the central column
/// (or the nearest valid cell) sits at x′ = 0. y and residual z carry over.
pub fn unwrap_x(dc: &DetrendedCloud) -> Result<UnwrappedCloud, UnwrapError> {
    let grid = dc.grid();
    let (w, h) = (grid.width(), grid.height());
    let mut coords = vec![UnwrappedPoint { xp: 0.0, yp: 0.0, z: 0.0 }; w * h];
    let mut mask = vec![false; w * h];
    let target = anchor_index(w);

    for r in 0..h {
        let valid_cols: Vec<usize> = (0..w).filter(|&c| grid.is_valid(r, c)).collect();
        if valid_cols.is_empty() {
            continue;
        }
        if dc.row_fits()[r].is_none() {
            return Err(UnwrapError::MissingRowFit { row: r });
        }
        let mut acc = vec![0.0f64; valid_cols.len()];
        for i in 1..valid_cols.len() {
            let (ca, cb) = (valid_cols[i - 1], valid_cols[i]);
            let (pa, pb) = (grid.point(r, ca), grid.point(r, cb));
            let fa = dc.fitted[r * w + ca];
            let fb = dc.fitted[r * w + cb];
            acc[i] = acc[i - 1] + adjacent_distance(pb.x - pa.x, fb - fa);
        }
        let anchor_col = nearest_valid(&valid_cols, target);
        let anchor_pos = valid_cols.iter().position(|&c| c == anchor_col).unwrap();
        let offset = acc[anchor_pos];
        for (i, &c) in valid_cols.iter().enumerate() {
            let p = grid.point(r, c);
            coords[r * w + c] = UnwrappedPoint { xp: acc[i] - offset, yp: p.y, z: p.z };
            mask[r * w + c] = true;
        }
    }
    UnwrappedCloud::new(w, h, coords, mask)
}

/// Per-column arc-length accumulation after `unwrap_x`. The z gap between
/// vertically adjacent samples is the difference of the two rows' fitted
/// curves, each evaluated at its own sample's original x (lattice index
/// correspondence), which is exactly the cached fitted lattice. x′ and the
/// residual are unchanged.
pub fn unwrap_y(uc: &UnwrappedCloud, dc: &DetrendedCloud) -> Result<UnwrappedCloud, UnwrapError> {
    let grid = dc.grid();
    let (w, h) = (grid.width(), grid.height());
    if uc.width() != w || uc.height() != h || uc.mask() != grid.mask() {
        return Err(UnwrapError::DimensionMismatch);
    }
    let mut coords = uc.coords().to_vec();
    let mask = uc.mask().to_vec();
    let target = anchor_index(h);

    for c in 0..w {
        let valid_rows: Vec<usize> = (0..h).filter(|&r| grid.is_valid(r, c)).collect();
        if valid_rows.is_empty() {
            continue;
        }
        if let Some(&r) = valid_rows.iter().find(|&&r| dc.row_fits()[r].is_none()) {
            return Err(UnwrapError::MissingRowFit { row: r });
        }
        let mut acc = vec![0.0f64; valid_rows.len()];
        for i in 1..valid_rows.len() {
            let (ra, rb) = (valid_rows[i - 1], valid_rows[i]);
            let (pa, pb) = (grid.point(ra, c), grid.point(rb, c));
            let fa = dc.fitted[ra * w + c];
            let fb = dc.fitted[rb * w + c];
            acc[i] = acc[i - 1] + adjacent_distance(pb.y - pa.y, fb - fa);
        }
        let anchor_row = nearest_valid(&valid_rows, target);
        let anchor_pos = valid_rows.iter().position(|&r| r == anchor_row).unwrap();
        let offset = acc[anchor_pos];
        for (i, &r) in valid_rows.iter().enumerate() {
            coords[r * w + c].yp = acc[i] - offset;
        }
    }
    UnwrappedCloud::new(w, h, coords, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lattice(width: usize, height: usize, z: impl Fn(usize, usize) -> f64) -> PointCloudGrid {
        let mut points = Vec::new();
        for r in 0..height {
            for c in 0..width {
                points.push(Point3::new(c as f64, r as f64, z(r, c)));
            }
        }
        PointCloudGrid::new(GridParts {
            width,
            height,
            points,
            mask: vec![true; width * height],
        })
        .unwrap()
    }

    fn masked_lattice(
        width: usize,
        height: usize,
        z: impl Fn(usize, usize) -> f64,
        masked: &[(usize, usize)],
    ) -> PointCloudGrid {
        let base = lattice(width, height, z);
        let mut parts = base.to_parts();
        for &(r, c) in masked {
            parts.mask[r * width + c] = false;
        }
        PointCloudGrid::new(parts).unwrap()
    }

    fn pipeline(grid: &PointCloudGrid, k: usize, s: usize) -> (DetrendedCloud, UnwrappedCloud) {
        let fits = fit_all_rows(grid, k, s).unwrap();
        let dc = detrend(grid, fits).unwrap();
        let ux = unwrap_x(&dc).unwrap();
        let uy = unwrap_y(&ux, &dc).unwrap();
        (dc, uy)
    }

    #[test]
    fn pythagorean_triple() {
        assert_eq!(adjacent_distance(3.0, 4.0), 5.0);
        assert_eq!(adjacent_distance(1.5, 0.0), 1.5);
        assert!((adjacent_distance(1.0, 1.0) - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn flat_plane_identity_is_exact() {
        // z = 0 rides the exact path: zero rhs gives exactly zero control
        // points, hypot(dx, 0) = dx, and integer sums are exact in f64.
        let grid = lattice(9, 7, |_, _| 0.0);
        let (dc, uc) = pipeline(&grid, 2, 4);
        for r in 0..7 {
            for c in 0..9 {
                let p = uc.point(r, c);
                assert_eq!(p.xp, c as f64 - 4.0);
                assert_eq!(p.yp, r as f64 - 3.0);
                assert_eq!(p.z, 0.0);
                assert_eq!(dc.grid().point(r, c).z, 0.0);
            }
        }
    }

    #[test]
    fn tilted_row_steps_are_sqrt2() {
        let grid = lattice(20, 3, |_, c| c as f64);
        let (_, uc) = pipeline(&grid, 2, 4);
        for r in 0..3 {
            for c in 1..20 {
                let step = uc.point(r, c).xp - uc.point(r, c - 1).xp;
                assert!(
                    (step - core::f64::consts::SQRT_2).abs() < 1e-12,
                    "step = {step}"
                );
            }
        }
    }

    #[test]
    fn residual_matches_definition_bitwise() {
        let grid = lattice(24, 4, |r, c| {
            0.1 * (c as f64) * (c as f64) + r as f64 + if c % 2 == 0 { 0.25 } else { -0.25 }
        });
        let fits = fit_all_rows(&grid, 2, 4).unwrap();
        let dc = detrend(&grid, fits).unwrap();
        for r in 0..4 {
            let fit = dc.row_fits()[r].as_ref().unwrap();
            for c in 0..24 {
                let p = grid.point(r, c);
                let expect = p.z - bspline::evaluate_curve(fit, p.x).unwrap();
                assert_eq!(dc.grid().point(r, c).z, expect);
                assert_eq!(dc.fitted_z(r, c), Some(bspline::evaluate_curve(fit, p.x).unwrap()));
            }
        }
    }

    #[test]
    fn gap_accumulates_single_step() {
        // One masked cell: the step across it spans the gap endpoints.
        let grid = masked_lattice(12, 1, |_, c| 0.5 * c as f64, &[(0, 5)]);
        let (dc, _) = {
            let fits = fit_all_rows(&grid, 1, 2).unwrap();
            let dc = detrend(&grid, fits).unwrap();
            let ux = unwrap_x(&dc).unwrap();
            (dc, ux)
        };
        let ux = unwrap_x(&dc).unwrap();
        let f4 = dc.fitted_z(0, 4).unwrap();
        let f6 = dc.fitted_z(0, 6).unwrap();
        let expect = adjacent_distance(2.0, f6 - f4);
        let step = ux.point(0, 6).xp - ux.point(0, 4).xp;
        assert_eq!(step, expect);
    }

    #[test]
    fn anchor_falls_back_to_nearest_valid() {
        // Width 9 anchors column 4; masking it moves the origin to the
        // nearest valid column, with ties broken to the smaller index.
        let grid = masked_lattice(9, 2, |_, _| 0.0, &[(0, 4)]);
        let fits = fit_all_rows(&grid, 1, 2).unwrap();
        let dc = detrend(&grid, fits).unwrap();
        let ux = unwrap_x(&dc).unwrap();
        assert_eq!(ux.point(0, 3).xp, 0.0);
        assert_eq!(ux.point(1, 4).xp, 0.0);
        assert!(!ux.is_valid(0, 4));
    }

    #[test]
    fn short_rows_are_flagged_and_masked() {
        let mut masked: Vec<(usize, usize)> = (3..12).map(|c| (1usize, c)).collect();
        masked.push((1, 0));
        let grid = masked_lattice(12, 3, |_, c| c as f64, &masked);
        // Row 1 keeps 2 valid cells, below n = 1 + 2 = 3.
        let fits = fit_all_rows(&grid, 1, 2).unwrap();
        assert!(fits[0].is_some());
        assert!(fits[1].is_none());
        let dc = detrend(&grid, fits).unwrap();
        let ux = unwrap_x(&dc).unwrap();
        for c in 0..12 {
            assert!(!ux.is_valid(1, c));
        }
        assert!(ux.is_valid(0, 6));
    }

    #[test]
    fn bend_free_columns_unwrap_to_translated_y() {
        // Every row identical: adjacent fitted curves agree bitwise, so the
        // y stage reduces to y - y_anchor exactly.
        let grid = lattice(16, 9, |_, c| 0.05 * (c as f64) * (c as f64));
        let (_, uc) = pipeline(&grid, 2, 4);
        for r in 0..9 {
            for c in 0..16 {
                assert_eq!(uc.point(r, c).yp, r as f64 - 4.0);
            }
        }
    }

    #[test]
    fn column_steps_match_parabola_chords() {
        // Surface bends along y only: z = 0.02 (y-4)². Row fits are
        // constants, so column steps must equal the analytic chords.
        let grid = lattice(8, 9, |r, _| 0.02 * (r as f64 - 4.0) * (r as f64 - 4.0));
        let (_, uc) = pipeline(&grid, 2, 4);
        for r in 1..9 {
            let dz = 0.02 * ((r as f64 - 4.0) * (r as f64 - 4.0)
                - (r as f64 - 5.0) * (r as f64 - 5.0));
            let expect = adjacent_distance(1.0, dz);
            for c in 0..8 {
                let step = uc.point(r, c).yp - uc.point(r - 1, c).yp;
                assert!((step - expect).abs() < 1e-6, "step {step} vs {expect}");
            }
        }
    }

    #[test]
    fn unwrapped_cloud_rejects_folds() {
        let coords = vec![
            UnwrappedPoint { xp: 0.0, yp: 0.0, z: 0.0 },
            UnwrappedPoint { xp: -1.0, yp: 0.0, z: 0.0 },
        ];
        let err = UnwrappedCloud::new(2, 1, coords, vec![true, true]).unwrap_err();
        assert_eq!(err, UnwrapError::NotMonotone { row: 0, col: 1 });
    }

    #[test]
    fn detrend_requires_aligned_fits() {
        let grid = lattice(8, 3, |_, _| 1.0);
        let fits = fit_all_rows(&grid, 1, 2).unwrap();
        let short = fits[..2].to_vec();
        assert_eq!(
            detrend(&grid, short).unwrap_err(),
            UnwrapError::FitsLengthMismatch { expected: 3, got: 2 }
        );
    }
}
