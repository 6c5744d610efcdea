//! CSV formats for match scores and comparison pair lists.
//!
//! Scores: `subject_a,impression_a,session_a,subject_b,impression_b,
//! session_b,score`. Pair lists: the same columns without `score`. Pair
//! identity ignores the column order of a/b; sessions default to 1 in
//! single-session protocols.

use fpunwrap_core::eval::{ImpressionId, Pair, ScoreRecord};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {source}")]
    Csv { row: usize, source: csv::Error },
    #[error("row {row}: score is not finite")]
    NonFiniteScore { row: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    subject_a: u32,
    impression_a: u32,
    session_a: u32,
    subject_b: u32,
    impression_b: u32,
    session_b: u32,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    subject_a: u32,
    impression_a: u32,
    session_a: u32,
    subject_b: u32,
    impression_b: u32,
    session_b: u32,
}

fn pair_of(row: &PairRow) -> Pair {
    Pair::new(
        ImpressionId::with_session(row.subject_a, row.impression_a, row.session_a),
        ImpressionId::with_session(row.subject_b, row.impression_b, row.session_b),
    )
}

/// Reads score rows in file order. Row numbers in errors are 1-based data
/// rows (the header is row 0).
pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>, ScoreFileError> {
    let mut reader = csv::Reader::from_reader(File::open(path)?);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let row = row.map_err(|source| ScoreFileError::Csv { row: i + 1, source })?;
        if !row.score.is_finite() {
            return Err(ScoreFileError::NonFiniteScore { row: i + 1 });
        }
        let pair = pair_of(&PairRow {
            subject_a: row.subject_a,
            impression_a: row.impression_a,
            session_a: row.session_a,
            subject_b: row.subject_b,
            impression_b: row.impression_b,
            session_b: row.session_b,
        });
        out.push(ScoreRecord { pair, score: row.score });
    }
    Ok(out)
}

pub fn write_scores(path: &Path, records: &[ScoreRecord]) -> Result<(), ScoreFileError> {
    let mut writer = csv::Writer::from_writer(File::create(path)?);
    for (i, rec) in records.iter().enumerate() {
        writer
            .serialize(ScoreRow {
                subject_a: rec.pair.a.subject,
                impression_a: rec.pair.a.impression,
                session_a: rec.pair.a.session,
                subject_b: rec.pair.b.subject,
                impression_b: rec.pair.b.impression,
                session_b: rec.pair.b.session,
                score: rec.score,
            })
            .map_err(|source| ScoreFileError::Csv { row: i + 1, source })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_pairs(path: &Path) -> Result<Vec<Pair>, ScoreFileError> {
    let mut reader = csv::Reader::from_reader(File::open(path)?);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<PairRow>().enumerate() {
        let row = row.map_err(|source| ScoreFileError::Csv { row: i + 1, source })?;
        out.push(pair_of(&row));
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[Pair]) -> Result<(), ScoreFileError> {
    let mut writer = csv::Writer::from_writer(File::create(path)?);
    for (i, p) in pairs.iter().enumerate() {
        writer
            .serialize(PairRow {
                subject_a: p.a.subject,
                impression_a: p.a.impression,
                session_a: p.a.session,
                subject_b: p.b.subject,
                impression_b: p.b.impression,
                session_b: p.b.session,
            })
            .map_err(|source| ScoreFileError::Csv { row: i + 1, source })?;
    }
    writer.flush()?;
    Ok(())
}
