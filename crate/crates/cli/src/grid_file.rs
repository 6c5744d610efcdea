//! Text format for grid point clouds.
//!
//! ```text
//! P3DGRID 1
//! <width> <height>
//! unit <label>
//! x y z          (width * height lines, row-major, row = constant y)
//! ```
//!
//! Coordinates are decimal or scientific notation; masked cells are the
//! literal `nan nan nan`. Plain LF line endings, 7-bit text. Floats are
//! written in shortest round-trip form, so save followed by load reproduces
//! every valid cell bit for bit.

use fpunwrap_core::cloud::{GridError, GridHeader, GridParts, Point3, PointCloudGrid};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header \"P3DGRID 1\"")]
    BadMagic,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: cell mixes nan with finite coordinates")]
    PartialNan { line: usize },
    #[error("expected {expected} data lines, found {got}")]
    WrongCellCount { expected: usize, got: usize },
    #[error("grid is invalid: {0}")]
    Grid(#[from] GridError),
}

/// A parsed grid plus its header metadata.
#[derive(Clone, Debug)]
pub struct LoadedGrid {
    pub header: GridHeader,
    pub grid: PointCloudGrid,
}

fn malformed(line: usize, message: impl Into<String>) -> GridFileError {
    GridFileError::Malformed { line, message: message.into() }
}

/// Parses the text form down to raw parts without lattice validation, so
/// callers can report every violation instead of the first. `source` is
/// recorded in the header verbatim.
pub fn parse_parts(text: &str, source: &str) -> Result<(GridHeader, GridParts), GridFileError> {
    let mut lines = text.lines().enumerate();
    let (_, magic) = lines.next().ok_or(GridFileError::BadMagic)?;
    if magic.trim_end() != "P3DGRID 1" {
        return Err(GridFileError::BadMagic);
    }

    let (_, dims) = lines.next().ok_or_else(|| malformed(2, "missing dimensions"))?;
    let mut it = dims.split_whitespace();
    let width: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(2, "expected \"<width> <height>\""))?;
    let height: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(2, "expected \"<width> <height>\""))?;
    if it.next().is_some() {
        return Err(malformed(2, "trailing tokens after dimensions"));
    }

    let (_, unit_line) = lines.next().ok_or_else(|| malformed(3, "missing unit line"))?;
    let unit = unit_line
        .trim_end()
        .strip_prefix("unit ")
        .ok_or_else(|| malformed(3, "expected \"unit <label>\""))?
        .to_string();

    let expected = width
        .checked_mul(height)
        .ok_or_else(|| malformed(2, "dimensions overflow"))?;
    let mut points = Vec::with_capacity(expected);
    let mut mask = Vec::with_capacity(expected);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if points.len() == expected {
            return Err(malformed(lineno, "data after the last cell"));
        }
        let mut coords = [0.0f64; 3];
        let mut tokens = line.split_whitespace();
        for slot in coords.iter_mut() {
            let token = tokens
                .next()
                .ok_or_else(|| malformed(lineno, "expected three coordinates"))?;
            *slot = token
                .parse()
                .map_err(|_| malformed(lineno, format!("cannot parse \"{token}\" as a number")))?;
        }
        if tokens.next().is_some() {
            return Err(malformed(lineno, "more than three coordinates"));
        }
        let nans = coords.iter().filter(|v| v.is_nan()).count();
        match nans {
            0 => {
                if coords.iter().any(|v| !v.is_finite()) {
                    return Err(malformed(lineno, "infinite coordinate"));
                }
                points.push(Point3::new(coords[0], coords[1], coords[2]));
                mask.push(true);
            }
            3 => {
                points.push(Point3::new(f64::NAN, f64::NAN, f64::NAN));
                mask.push(false);
            }
            _ => return Err(GridFileError::PartialNan { line: lineno }),
        }
    }
    if points.len() != expected {
        return Err(GridFileError::WrongCellCount { expected, got: points.len() });
    }

    let header = GridHeader { width, height, unit, source: source.to_string() };
    Ok((header, GridParts { width, height, points, mask }))
}

/// Parses and validates the text form.
pub fn parse_grid(text: &str, source: &str) -> Result<LoadedGrid, GridFileError> {
    let (header, parts) = parse_parts(text, source)?;
    Ok(LoadedGrid { header, grid: PointCloudGrid::new(parts)? })
}

/// Renders a grid to the text form.
pub fn render_grid(grid: &PointCloudGrid, unit: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "P3DGRID 1");
    let _ = writeln!(out, "{} {}", grid.width(), grid.height());
    let _ = writeln!(out, "unit {unit}");
    for r in 0..grid.height() {
        for c in 0..grid.width() {
            if grid.is_valid(r, c) {
                let p = grid.point(r, c);
                let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
            } else {
                out.push_str("nan nan nan\n");
            }
        }
    }
    out
}

pub fn load_grid(path: &Path) -> Result<LoadedGrid, GridFileError> {
    let text = fs::read_to_string(path)?;
    parse_grid(&text, &path.display().to_string())
}

pub fn save_grid(path: &Path, grid: &PointCloudGrid, unit: &str) -> Result<(), GridFileError> {
    fs::write(path, render_grid(grid, unit))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_text() -> &'static str {
        "P3DGRID 1\n2 2\nunit mm\n0 0 0.5\n1 0 0.25\nnan nan nan\n1 1 -3e-2\n"
    }

    #[test]
    fn parses_the_documented_layout() {
        let loaded = parse_grid(sample_text(), "test").unwrap();
        assert_eq!(loaded.header.width, 2);
        assert_eq!(loaded.header.unit, "mm");
        assert!(loaded.grid.is_valid(0, 1));
        assert!(!loaded.grid.is_valid(1, 0));
        assert_eq!(loaded.grid.point(1, 1).z, -0.03);
    }

    #[test]
    fn round_trip_preserves_every_valid_cell_bitwise() {
        let loaded = parse_grid(sample_text(), "test").unwrap();
        let text = render_grid(&loaded.grid, &loaded.header.unit);
        let again = parse_grid(&text, "test").unwrap();
        assert_eq!(again.grid.width(), loaded.grid.width());
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(again.grid.is_valid(r, c), loaded.grid.is_valid(r, c));
                if loaded.grid.is_valid(r, c) {
                    let (a, b) = (loaded.grid.point(r, c), again.grid.point(r, c));
                    assert_eq!(a.x.to_bits(), b.x.to_bits());
                    assert_eq!(a.y.to_bits(), b.y.to_bits());
                    assert_eq!(a.z.to_bits(), b.z.to_bits());
                }
            }
        }
    }

    #[test]
    fn round_trip_survives_awkward_floats() {
        let values = [
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1e300,
            -2.2250738585072014e-308,
            123456789.123456789,
        ];
        let mut points = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            points.push(Point3::new(i as f64, 0.0, v));
        }
        for (i, &v) in values.iter().enumerate() {
            points.push(Point3::new(i as f64, 1.0, -v));
        }
        let grid = PointCloudGrid::new(GridParts {
            width: values.len(),
            height: 2,
            points,
            mask: vec![true; values.len() * 2],
        })
        .unwrap();
        let again = parse_grid(&render_grid(&grid, "raw"), "t").unwrap().grid;
        for r in 0..2 {
            for c in 0..values.len() {
                assert_eq!(grid.point(r, c).z.to_bits(), again.point(r, c).z.to_bits());
            }
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "P3DGRID 1\n2 2\nunit mm\n0 0 0\n1 0 oops\nnan nan nan\n1 1 0\n";
        match parse_grid(text, "t").unwrap_err() {
            GridFileError::Malformed { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let partial = "P3DGRID 1\n2 2\nunit mm\n0 0 0\nnan 0 1\nnan nan nan\n1 1 0\n";
        match parse_grid(partial, "t").unwrap_err() {
            GridFileError::PartialNan { line } => assert_eq!(line, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_cell_count_is_reported() {
        let text = "P3DGRID 1\n2 2\nunit mm\n0 0 0\n1 0 0\n";
        match parse_grid(text, "t").unwrap_err() {
            GridFileError::WrongCellCount { expected, got } => {
                assert_eq!((expected, got), (4, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        assert!(matches!(
            parse_grid("P3DGRID 2\n2 2\nunit mm\n", "t").unwrap_err(),
            GridFileError::BadMagic
        ));
    }

    #[test]
    fn monotonicity_violations_surface_as_grid_errors() {
        let text = "P3DGRID 1\n2 2\nunit mm\n1 0 0\n0 0 0\n0 1 0\n1 1 0\n";
        assert!(matches!(parse_grid(text, "t").unwrap_err(), GridFileError::Grid(_)));
    }
}
