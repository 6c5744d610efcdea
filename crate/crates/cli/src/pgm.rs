//! Binary PGM (P5) writing, plus a reader used by tests to inspect emitted
//! images.

use fpunwrap_core::raster::{pgm_bytes, GrayImage};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a P5 PGM: {0}")]
    Malformed(String),
}

pub fn save_pgm(path: &Path, image: &GrayImage) -> Result<(), PgmError> {
    fs::write(path, pgm_bytes(image))?;
    Ok(())
}

/// Parses the exact layout this tool writes: `P5\n{w} {h}\n255\n` + pixels.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let bad = |m: &str| PgmError::Malformed(m.to_string());
    let mut rest = bytes
        .strip_prefix(b"P5\n")
        .ok_or_else(|| bad("missing P5 header"))?;
    let read_line = |rest: &mut &[u8]| -> Result<String, PgmError> {
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header"))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| bad("non-ascii header"))?
            .to_string();
        *rest = &rest[nl + 1..];
        Ok(line)
    };
    let dims = read_line(&mut rest)?;
    let mut it = dims.split_whitespace();
    let width: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad width"))?;
    let height: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad height"))?;
    if it.next().is_some() {
        return Err(bad("trailing dimension tokens"));
    }
    if read_line(&mut rest)? != "255" {
        return Err(bad("expected maxval 255"));
    }
    if rest.len() != width * height {
        return Err(bad("pixel payload size mismatch"));
    }
    GrayImage::new(width, height, rest.to_vec()).ok_or_else(|| bad("empty image"))
}

pub fn load_pgm(path: &Path) -> Result<GrayImage, PgmError> {
    parse_pgm(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_read_round_trip() {
        let image = GrayImage::new(3, 2, vec![10, 20, 30, 40, 50, 60]).unwrap();
        let parsed = parse_pgm(&pgm_bytes(&image)).unwrap();
        assert_eq!(parsed, image);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let image = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        let mut bytes = pgm_bytes(&image);
        bytes.pop();
        assert!(parse_pgm(&bytes).is_err());
    }
}
