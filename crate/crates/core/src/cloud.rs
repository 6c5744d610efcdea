//! Point-cloud lattice data model: a W×H grid of 3D samples with a validity
//! mask. Rows share a constant sweep direction (x strictly increasing among
//! valid cells), columns likewise in y; downstream slice processing assumes
//! this ordering and the constructors enforce it.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Raw, unvalidated grid data as it comes off a parser or a test harness.
/// `PointCloudGrid::new` turns it into a checked lattice; `validate_parts`
/// reports every rule it would reject.
#[derive(Clone, Debug)]
pub struct GridParts {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Point3>,
    pub mask: Vec<bool>,
}

/// File-level metadata carried alongside a grid (the lattice itself is
/// unit-agnostic; all downstream math is ratios and distances).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridHeader {
    pub width: usize,
    pub height: usize,
    pub unit: String,
    pub source: String,
}

impl GridHeader {
    /// Headers describe on-disk grids, which must be at least 2×2 for any
    /// slice to have an adjacent pair.
    pub fn is_valid(&self) -> bool {
        self.width >= 2 && self.height >= 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationRule {
    EmptyDimension,
    PointCountMismatch { expected: usize, got: usize },
    MaskLengthMismatch { expected: usize, got: usize },
    NonFiniteCoordinate,
    RowXNotIncreasing,
    ColumnYNotIncreasing,
}

/// One failed lattice rule; `cell` is `(row, col)` for per-cell rules and
/// `None` for structural ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub cell: Option<(usize, usize)>,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((r, c)) = self.cell {
            write!(f, "cell ({r}, {c}): ")?;
        }
        match &self.rule {
            ViolationRule::EmptyDimension => write!(f, "width and height must be positive"),
            ViolationRule::PointCountMismatch { expected, got } => {
                write!(f, "point count {got} does not match width*height = {expected}")
            }
            ViolationRule::MaskLengthMismatch { expected, got } => {
                write!(f, "mask length {got} does not match width*height = {expected}")
            }
            ViolationRule::NonFiniteCoordinate => write!(f, "valid sample has non-finite coordinate"),
            ViolationRule::RowXNotIncreasing => {
                write!(f, "x not strictly increasing along row among valid cells")
            }
            ViolationRule::ColumnYNotIncreasing => {
                write!(f, "y not strictly increasing along column among valid cells")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridError {
    Invalid(Vec<Violation>),
    AllInvalid,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::Invalid(vs) => {
                write!(f, "grid violates {} lattice rule(s)", vs.len())?;
                if let Some(first) = vs.first() {
                    write!(f, "; first: {first}")?;
                }
                Ok(())
            }
            GridError::AllInvalid => write!(f, "grid has no valid points"),
        }
    }
}

impl core::error::Error for GridError {}

/// Checks every lattice rule and reports all failures. Monotonicity and
/// finiteness are only meaningful when the structural sizes line up, so
/// per-cell checks are skipped once a structural rule fails.
pub fn validate_parts(parts: &GridParts) -> Vec<Violation> {
    let mut out = Vec::new();
    if parts.width == 0 || parts.height == 0 {
        out.push(Violation { cell: None, rule: ViolationRule::EmptyDimension });
    }
    let expected = parts.width * parts.height;
    if parts.points.len() != expected {
        out.push(Violation {
            cell: None,
            rule: ViolationRule::PointCountMismatch { expected, got: parts.points.len() },
        });
    }
    if parts.mask.len() != expected {
        out.push(Violation {
            cell: None,
            rule: ViolationRule::MaskLengthMismatch { expected, got: parts.mask.len() },
        });
    }
    if !out.is_empty() {
        return out;
    }

    for r in 0..parts.height {
        for c in 0..parts.width {
            let idx = r * parts.width + c;
            if parts.mask[idx] && !parts.points[idx].is_finite() {
                out.push(Violation {
                    cell: Some((r, c)),
                    rule: ViolationRule::NonFiniteCoordinate,
                });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    // The violation is pinned on the later cell of the offending pair.
    for r in 0..parts.height {
        let mut prev: Option<f64> = None;
        for c in 0..parts.width {
            let idx = r * parts.width + c;
            if !parts.mask[idx] {
                continue;
            }
            let x = parts.points[idx].x;
            if let Some(px) = prev {
                if x <= px {
                    out.push(Violation {
                        cell: Some((r, c)),
                        rule: ViolationRule::RowXNotIncreasing,
                    });
                }
            }
            prev = Some(x);
        }
    }
    for c in 0..parts.width {
        let mut prev: Option<f64> = None;
        for r in 0..parts.height {
            let idx = r * parts.width + c;
            if !parts.mask[idx] {
                continue;
            }
            let y = parts.points[idx].y;
            if let Some(py) = prev {
                if y <= py {
                    out.push(Violation {
                        cell: Some((r, c)),
                        rule: ViolationRule::ColumnYNotIncreasing,
                    });
                }
            }
            prev = Some(y);
        }
    }
    out
}

/// Immutable validated lattice. Values never change after construction, so
/// grids are safe to share read-only across worker threads.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloudGrid {
    width: usize,
    height: usize,
    points: Vec<Point3>,
    mask: Vec<bool>,
}

impl PointCloudGrid {
    pub fn new(parts: GridParts) -> Result<Self, GridError> {
        let violations = validate_parts(&parts);
        if !violations.is_empty() {
            return Err(GridError::Invalid(violations));
        }
        Ok(PointCloudGrid {
            width: parts.width,
            height: parts.height,
            points: parts.points,
            mask: parts.mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    pub fn point(&self, row: usize, col: usize) -> Point3 {
        self.points[self.index(row, col)]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask[self.index(row, col)]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn to_parts(&self) -> GridParts {
        GridParts {
            width: self.width,
            height: self.height,
            points: self.points.clone(),
            mask: self.mask.clone(),
        }
    }

    /// Re-checks the construction-time rules; empty on any constructed grid.
    pub fn validate(&self) -> Vec<Violation> {
        validate_parts(&self.to_parts())
    }

    /// Largest axis-aligned sub-rectangle containing only valid cells.
    /// Candidates are ordered by area, then smaller top row, then smaller
    /// left column, then greater height, so ties resolve deterministically.
    pub fn crop_largest_valid_rect(&self) -> Result<PointCloudGrid, GridError> {
        use core::cmp::Reverse;
        let (w, h) = (self.width, self.height);
        // best = (area, top, left, rect_h, rect_w)
        let mut best: Option<(usize, usize, usize, usize, usize)> = None;
        let rank = |c: &(usize, usize, usize, usize, usize)| {
            (c.0, Reverse(c.1), Reverse(c.2), c.3)
        };
        let mut consider = |cand: (usize, usize, usize, usize, usize)| {
            if best.map_or(true, |b| rank(&cand) > rank(&b)) {
                best = Some(cand);
            }
        };

        // Largest-rectangle-in-histogram per bottom row: heights[c] counts
        // contiguous valid cells ending at this row; lefts/rights bound the
        // maximal span where every bar reaches heights[c].
        let mut heights = alloc::vec![0usize; w];
        let mut lefts = alloc::vec![0usize; w];
        let mut rights = alloc::vec![0usize; w];
        let mut stack: Vec<usize> = Vec::with_capacity(w);
        for r in 0..h {
            for c in 0..w {
                heights[c] = if self.mask[r * w + c] { heights[c] + 1 } else { 0 };
            }
            stack.clear();
            for c in 0..w {
                while let Some(&top) = stack.last() {
                    if heights[top] >= heights[c] {
                        stack.pop();
                    } else {
                        break;
                    }
                }
                lefts[c] = stack.last().map_or(0, |&t| t + 1);
                stack.push(c);
            }
            stack.clear();
            for c in (0..w).rev() {
                while let Some(&top) = stack.last() {
                    if heights[top] >= heights[c] {
                        stack.pop();
                    } else {
                        break;
                    }
                }
                rights[c] = stack.last().map_or(w - 1, |&t| t - 1);
                stack.push(c);
            }
            for c in 0..w {
                if heights[c] == 0 {
                    continue;
                }
                let rect_h = heights[c];
                let rect_w = rights[c] - lefts[c] + 1;
                consider((rect_h * rect_w, r + 1 - rect_h, lefts[c], rect_h, rect_w));
            }
        }

        let (_, top, left, rect_h, rect_w) = best.ok_or(GridError::AllInvalid)?;
        let mut points = Vec::with_capacity(rect_w * rect_h);
        let mut mask = Vec::with_capacity(rect_w * rect_h);
        for r in top..top + rect_h {
            for c in left..left + rect_w {
                points.push(self.points[r * w + c]);
                mask.push(true);
            }
        }
        PointCloudGrid::new(GridParts { width: rect_w, height: rect_h, points, mask })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid_from_z(width: usize, height: usize, z: impl Fn(usize, usize) -> f64) -> GridParts {
        let mut points = Vec::new();
        for r in 0..height {
            for c in 0..width {
                points.push(Point3::new(c as f64, r as f64, z(r, c)));
            }
        }
        GridParts { width, height, points, mask: vec![true; width * height] }
    }

    #[test]
    fn smallest_valid_lattice() {
        let g = PointCloudGrid::new(grid_from_z(2, 2, |_, _| 0.0)).unwrap();
        assert_eq!(g.width(), 2);
        assert_eq!(g.height(), 2);
        assert_eq!(g.valid_count(), 4);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn row_monotonicity_violation_names_cell() {
        let mut parts = grid_from_z(3, 1, |_, _| 0.0);
        parts.points[1].x = 2.0;
        parts.points[2].x = 1.0;
        let vs = validate_parts(&parts);
        assert_eq!(vsent(&vs), vec![(Some((0, 2)), ViolationRule::RowXNotIncreasing)]);
    }

    fn vsent(vs: &[Violation]) -> Vec<(Option<(usize, usize)>, ViolationRule)> {
        vs.iter().map(|v| (v.cell, v.rule.clone())).collect()
    }

    #[test]
    fn mask_length_mismatch_is_structural() {
        let mut parts = grid_from_z(2, 2, |_, _| 0.0);
        parts.mask.pop();
        let vs = validate_parts(&parts);
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].rule, ViolationRule::MaskLengthMismatch { expected: 4, got: 3 });
    }

    #[test]
    fn masked_cells_may_hold_nan() {
        let mut parts = grid_from_z(3, 2, |_, _| 1.0);
        parts.mask[4] = false;
        parts.points[4] = Point3::new(f64::NAN, f64::NAN, f64::NAN);
        assert!(PointCloudGrid::new(parts).is_ok());
    }

    #[test]
    fn crop_identity_on_fully_valid() {
        let g = PointCloudGrid::new(grid_from_z(10, 10, |r, c| (r + c) as f64)).unwrap();
        let cropped = g.crop_largest_valid_rect().unwrap();
        assert_eq!(cropped, g);
    }

    #[test]
    fn crop_drops_invalid_first_row() {
        let mut parts = grid_from_z(10, 10, |_, _| 0.0);
        for c in 0..10 {
            parts.mask[c] = false;
        }
        let g = PointCloudGrid::new(parts).unwrap();
        let cropped = g.crop_largest_valid_rect().unwrap();
        assert_eq!((cropped.width(), cropped.height()), (10, 9));
        assert_eq!(cropped.point(0, 0).y, 1.0);
    }

    #[test]
    fn crop_tie_breaks_to_smaller_row_origin() {
        // Invalid top-left corner: 4w*3h starting at row 1 ties with
        // 3w*4h starting at column 1; the smaller row origin wins.
        let mut parts = grid_from_z(4, 4, |_, _| 0.0);
        parts.mask[0] = false;
        let g = PointCloudGrid::new(parts).unwrap();
        let cropped = g.crop_largest_valid_rect().unwrap();
        assert_eq!((cropped.width(), cropped.height()), (3, 4));
        assert_eq!((cropped.point(0, 0).x, cropped.point(0, 0).y), (1.0, 0.0));
    }

    #[test]
    fn crop_same_origin_tie_prefers_taller() {
        // Invalid bottom-right corner: 4w*3h and 3w*4h both start at (0,0).
        let mut parts = grid_from_z(4, 4, |_, _| 0.0);
        parts.mask[15] = false;
        let g = PointCloudGrid::new(parts).unwrap();
        let cropped = g.crop_largest_valid_rect().unwrap();
        assert_eq!((cropped.width(), cropped.height()), (3, 4));
    }

    #[test]
    fn crop_all_invalid_errors() {
        let mut parts = grid_from_z(2, 2, |_, _| 0.0);
        parts.mask = vec![false; 4];
        let g = PointCloudGrid::new(parts).unwrap();
        assert_eq!(g.crop_largest_valid_rect(), Err(GridError::AllInvalid));
    }
}
