//! File formats, configuration, and batch orchestration around
//! [`fpunwrap_core`]: text grid files, PGM output, score/pair CSVs, and the
//! multi-worker pipeline driver used by the `fpunwrap` binary.

pub mod config;
pub mod evalcmd;
pub mod grid_file;
pub mod pgm;
pub mod pipeline;
pub mod score_file;
