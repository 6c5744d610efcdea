//! Batch driver: runs grid files through fit → detrend → unwrap x → unwrap y
//! → rasterize, times each stage, writes the artifacts, and emits a manifest
//! of `path<TAB>sha-256` lines. Files are processed in parallel but written
//! and listed in input order, so output bytes are independent of the worker
//! count.

use crate::config::{ConfigError, PipelineConfig};
use crate::grid_file::{self, LoadedGrid};
use fpunwrap_core::cloud::{GridParts, Point3, PointCloudGrid};
use fpunwrap_core::raster::{pgm_bytes, rasterize, RasterConfig};
use fpunwrap_core::unwrap::{detrend, fit_all_rows, unwrap_x, unwrap_y, UnwrappedCloud};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("input {0} is neither a file nor a directory")]
    BadInput(PathBuf),
    #[error("no .p3d grids under {0}")]
    EmptyBatch(PathBuf),
}

/// Wall-clock milliseconds per stage.
#[derive(Clone, Copy, Debug, Default)]
pub struct StageTimings {
    pub fit: f64,
    pub detrend: f64,
    pub unwrap_x: f64,
    pub unwrap_y: f64,
    pub rasterize: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.fit + self.detrend + self.unwrap_x + self.unwrap_y + self.rasterize
    }
}

/// Everything produced for one input grid, still in memory.
pub struct FileArtifacts {
    pub pgm: Vec<u8>,
    pub cloud_text: Option<String>,
    pub timings: StageTimings,
    pub degenerate_range: bool,
    pub pitch: f64,
}

/// The unwrapped cloud is itself a lattice-monotone grid (x' increasing
/// along rows, y' along columns), so it round-trips through the grid format.
fn cloud_to_grid(cloud: &UnwrappedCloud) -> PointCloudGrid {
    let (w, h) = (cloud.width(), cloud.height());
    let mut points = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            if cloud.is_valid(r, c) {
                let p = cloud.point(r, c);
                points.push(Point3::new(p.xp, p.yp, p.z));
                mask.push(true);
            } else {
                points.push(Point3::new(f64::NAN, f64::NAN, f64::NAN));
                mask.push(false);
            }
        }
    }
    PointCloudGrid::new(GridParts { width: w, height: h, points, mask })
        .expect("unwrapped cloud invariants guarantee a valid grid")
}

/// Runs one grid through the full flattening pipeline.
pub fn process_grid(
    loaded: &LoadedGrid,
    config: &PipelineConfig,
) -> Result<FileArtifacts, String> {
    let mut timings = StageTimings::default();
    let clock = |ms: &mut f64, t0: Instant| *ms = t0.elapsed().as_secs_f64() * 1e3;

    let t0 = Instant::now();
    let fits = fit_all_rows(&loaded.grid, config.degree, config.partitions)
        .map_err(|e| format!("fit: {e}"))?;
    clock(&mut timings.fit, t0);

    let t0 = Instant::now();
    let dc = detrend(&loaded.grid, fits).map_err(|e| format!("detrend: {e}"))?;
    clock(&mut timings.detrend, t0);

    let t0 = Instant::now();
    let ux = unwrap_x(&dc).map_err(|e| format!("unwrap_x: {e}"))?;
    clock(&mut timings.unwrap_x, t0);

    let t0 = Instant::now();
    let uy = unwrap_y(&ux, &dc).map_err(|e| format!("unwrap_y: {e}"))?;
    clock(&mut timings.unwrap_y, t0);

    let t0 = Instant::now();
    let raster_config = RasterConfig {
        pitch: config.pitch,
        rounding: config.rounding,
        background: config.background,
        fill_holes: true,
    };
    let raster = rasterize(&uy, &raster_config).map_err(|e| format!("rasterize: {e}"))?;
    clock(&mut timings.rasterize, t0);

    let cloud_text = config
        .emit_cloud
        .then(|| grid_file::render_grid(&cloud_to_grid(&uy), &loaded.header.unit));

    Ok(FileArtifacts {
        pgm: pgm_bytes(&raster.image),
        cloud_text,
        timings,
        degenerate_range: raster.degenerate_range,
        pitch: raster.pitch,
    })
}

/// Gathers the batch: a single file, or every `*.p3d` directly inside a
/// directory, sorted by name.
fn collect_inputs(input: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "p3d"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(PipelineError::EmptyBatch(input.to_path_buf()));
        }
        return Ok(files);
    }
    Err(PipelineError::BadInput(input.to_path_buf()))
}

/// Outcome of a batch run. `failed` pairs each failing input with its
/// diagnostic; partial failure still writes everything that succeeded.
pub struct RunSummary {
    pub processed: usize,
    pub failed: Vec<(PathBuf, String)>,
    pub manifest_path: PathBuf,
}

type FileOutcome = Result<FileArtifacts, String>;

/// Processes every input with `config.workers` threads. Diagnostics and
/// per-file stage timings go to `log`; artifacts and the manifest are
/// written under `config.output_dir`.
pub fn run_pipeline(
    config: &PipelineConfig,
    log: &mut dyn Write,
) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let input = config.input.as_deref().ok_or(ConfigError::MissingInput)?;
    let out_dir = config.output_dir.as_deref().ok_or(ConfigError::MissingOutputDir)?;
    let inputs = collect_inputs(input)?;
    std::fs::create_dir_all(out_dir)?;

    let n = inputs.len();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, FileOutcome)>();
    let mut outcomes: Vec<Option<FileOutcome>> = Vec::new();
    outcomes.resize_with(n, || None);

    thread::scope(|scope| {
        for _ in 0..config.workers.min(n) {
            let tx = tx.clone();
            let inputs = &inputs;
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let outcome = grid_file::load_grid(&inputs[i])
                    .map_err(|e| e.to_string())
                    .and_then(|loaded| process_grid(&loaded, config));
                if tx.send((i, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, outcome) in rx {
            outcomes[i] = Some(outcome);
        }
    });

    let mut manifest: Vec<(String, String)> = Vec::new();
    let mut emit = |name: String, bytes: &[u8]| -> Result<(), PipelineError> {
        std::fs::write(out_dir.join(&name), bytes)?;
        let digest = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        manifest.push((name, hex));
        Ok(())
    };

    let mut summary =
        RunSummary { processed: 0, failed: Vec::new(), manifest_path: out_dir.join("manifest.tsv") };
    for (path, outcome) in inputs.iter().zip(outcomes) {
        let display = path.display();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "grid".to_string());
        match outcome.expect("every job sends exactly one outcome") {
            Ok(artifacts) => {
                emit(format!("{stem}.pgm"), &artifacts.pgm)?;
                if let Some(text) = &artifacts.cloud_text {
                    emit(format!("{stem}.unwrapped.p3d"), text.as_bytes())?;
                }
                if artifacts.degenerate_range {
                    let _ = writeln!(
                        log,
                        "warning file={display}: flat height range, image is uniform mid-gray"
                    );
                }
                let t = artifacts.timings;
                let _ = writeln!(
                    log,
                    "timing file={display} fit={:.3} detrend={:.3} unwrap_x={:.3} \
                     unwrap_y={:.3} rasterize={:.3} total={:.3} pitch={}",
                    t.fit,
                    t.detrend,
                    t.unwrap_x,
                    t.unwrap_y,
                    t.rasterize,
                    t.total(),
                    artifacts.pitch,
                );
                summary.processed += 1;
            }
            Err(message) => {
                let _ = writeln!(log, "error file={display}: {message}");
                summary.failed.push((path.clone(), message));
            }
        }
    }

    manifest.sort();
    let mut listing = String::new();
    for (name, hex) in &manifest {
        let _ = writeln!(listing, "{name}\t{hex}");
    }
    std::fs::write(&summary.manifest_path, listing)?;
    Ok(summary)
}
