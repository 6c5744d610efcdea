use clap::{Args, Parser, Subcommand};
use fpunwrap::config::PipelineConfig;
use fpunwrap::evalcmd::{self, CmdError};
use fpunwrap::grid_file;
use fpunwrap::pipeline::{run_pipeline, PipelineError};
use fpunwrap_core::cloud::{validate_parts, PointCloudGrid};
use fpunwrap_core::synth::{generate, Axis, SurfaceKind, SynthSpec};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 1 runtime or partial-batch failure, 2 bad
/// configuration or usage. clap's own parse errors already exit with 2.
const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fpunwrap",
    version,
    about = "Flattens grid-structured 3D fingerprint scans into ridge images \
             and evaluates matcher scores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flatten grid clouds into grayscale ridge images
    Unwrap(UnwrapArgs),
    /// Generate a synthetic scan grid with known geometry
    Synth(SynthArgs),
    /// Pair lists, EER, ROC/DET tables, CMC curves, and bundled reports
    Eval(EvalArgs),
    /// Validate a grid file and print a summary
    Inspect(InspectArgs),
}

/// Every flag mirrors a config-file key one to one, so values are kept as
/// raw strings and routed through the same parser.
#[derive(Args)]
struct UnwrapArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid file or directory of .p3d grids
    #[arg(long)]
    input: Option<String>,
    /// Directory for images, clouds, and the manifest
    #[arg(long = "output-dir")]
    output_dir: Option<String>,
    /// Slicewise fit degree
    #[arg(long)]
    degree: Option<String>,
    /// Slicewise fit partition count
    #[arg(long)]
    partitions: Option<String>,
    /// Flattened-origin policy (center)
    #[arg(long)]
    anchor: Option<String>,
    /// Pixel pitch, or "auto"
    #[arg(long)]
    pitch: Option<String>,
    /// Intensity rounding: half-away or half-even
    #[arg(long)]
    rounding: Option<String>,
    /// Background intensity for unsupported pixels
    #[arg(long)]
    background: Option<String>,
    /// Worker threads for batch runs
    #[arg(long)]
    workers: Option<String>,
    /// Also write each unwrapped cloud as a grid file (true|false)
    #[arg(long = "emit-cloud")]
    emit_cloud: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// plane | tilted-plane | parabolic-cylinder | circular-half-cylinder
    #[arg(long)]
    kind: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Radius (circular) or coefficient (tilted plane, parabolic)
    #[arg(long, default_value_t = 100.0)]
    shape: f64,
    /// Ridge amplitude; 0 disables ridges
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
    /// Ridge period along the surface
    #[arg(long, default_value_t = 8.0)]
    wavelength: f64,
    /// Lattice axis that follows the curved profile
    #[arg(long = "bend-axis", default_value = "x")]
    bend_axis: String,
    /// Lattice axis the ridge crests run along; the sinusoid undulates
    /// along the perpendicular axis
    #[arg(long = "ridge-axis", default_value = "y")]
    ridge_axis: String,
    /// Standard deviation of Gaussian z noise
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sample")]
    unit: String,
}

#[derive(Args)]
struct EvalArgs {
    #[command(subcommand)]
    command: EvalCommand,
}

#[derive(Args)]
struct ScoreInputs {
    /// Score CSV from an external matcher
    #[arg(long)]
    scores: PathBuf,
    /// Genuine pair-list CSV
    #[arg(long)]
    genuine: PathBuf,
    /// Imposter pair-list CSV
    #[arg(long)]
    imposter: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Write the genuine/imposter pair lists for a protocol
    Pairs {
        /// all-pairs | first-impression | cross-session
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        subjects: u32,
        #[arg(long)]
        impressions: u32,
        #[arg(long = "out-genuine")]
        out_genuine: PathBuf,
        #[arg(long = "out-imposter")]
        out_imposter: PathBuf,
    },
    /// Equal error rate and its threshold
    Eer {
        #[command(flatten)]
        inputs: ScoreInputs,
    },
    /// Operating-point table (threshold, far, frr) for ROC plots
    Roc {
        #[command(flatten)]
        inputs: ScoreInputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Operating-point table (threshold, far, frr) for DET plots
    Det {
        #[command(flatten)]
        inputs: ScoreInputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cumulative match curve from closed-set identification
    Cmc {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        subjects: u32,
        #[arg(long)]
        impressions: u32,
        /// Impression used as the probe; requires --mate-impression
        #[arg(long = "probe-impression")]
        probe_impression: Option<u32>,
        /// Impression enrolled as the mate; requires --probe-impression
        #[arg(long = "mate-impression")]
        mate_impression: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// report.txt plus roc/det (and optionally cmc) CSVs in one directory
    Report {
        #[arg(long)]
        scores: PathBuf,
        /// all-pairs | first-impression | cross-session
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        subjects: u32,
        #[arg(long)]
        impressions: u32,
        /// Also average the CMC over all probe/mate combinations
        #[arg(long)]
        cmc: bool,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct InspectArgs {
    grid: PathBuf,
}

fn usage_err(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn runtime_err(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_RUNTIME)
}

fn run_unwrap(args: UnwrapArgs) -> ExitCode {
    let mut config = PipelineConfig::default();
    if let Some(path) = &args.config {
        if let Err(e) = config.load_file(path) {
            return usage_err(format_args!("{}: {e}", path.display()));
        }
    }
    let overrides = [
        ("degree", &args.degree),
        ("partitions", &args.partitions),
        ("anchor", &args.anchor),
        ("pitch", &args.pitch),
        ("rounding", &args.rounding),
        ("background", &args.background),
        ("input", &args.input),
        ("output-dir", &args.output_dir),
        ("workers", &args.workers),
        ("emit-cloud", &args.emit_cloud),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            if let Err(e) = config.set(key, value) {
                return usage_err(e);
            }
        }
    }

    let mut log = std::io::stderr();
    match run_pipeline(&config, &mut log) {
        Ok(summary) => {
            println!("processed={}", summary.processed);
            println!("failed={}", summary.failed.len());
            println!("manifest={}", summary.manifest_path.display());
            if summary.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
        Err(PipelineError::Config(e)) => usage_err(e),
        Err(PipelineError::BadInput(p)) => {
            usage_err(format_args!("input {} is neither a file nor a directory", p.display()))
        }
        Err(e) => runtime_err(e),
    }
}

fn parse_axis(name: &str) -> Result<Axis, String> {
    match name {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        _ => Err(format!("unknown axis \"{name}\" (expected x or y)")),
    }
}

fn parse_kind(name: &str) -> Result<SurfaceKind, String> {
    match name {
        "plane" => Ok(SurfaceKind::Plane),
        "tilted-plane" => Ok(SurfaceKind::TiltedPlane),
        "parabolic-cylinder" => Ok(SurfaceKind::ParabolicCylinder),
        "circular-half-cylinder" => Ok(SurfaceKind::CircularHalfCylinder),
        _ => Err(format!(
            "unknown kind \"{name}\" (expected plane, tilted-plane, \
             parabolic-cylinder, or circular-half-cylinder)"
        )),
    }
}

fn run_synth(args: SynthArgs) -> ExitCode {
    let kind = match parse_kind(&args.kind) {
        Ok(k) => k,
        Err(e) => return usage_err(e),
    };
    let bend_axis = match parse_axis(&args.bend_axis) {
        Ok(a) => a,
        Err(e) => return usage_err(e),
    };
    let ridge_axis = match parse_axis(&args.ridge_axis) {
        Ok(a) => a,
        Err(e) => return usage_err(e),
    };
    if !args.noise.is_finite() || args.noise < 0.0 {
        return usage_err("noise must be finite and non-negative");
    }

    let spec = SynthSpec {
        kind,
        radius_or_coeff: args.shape,
        amplitude: args.amplitude,
        wavelength: args.wavelength,
        width: args.width,
        height: args.height,
        spacing: args.spacing,
        bend_axis,
        ridge_axis,
    };
    let grid = match generate(&spec) {
        Ok(g) => g,
        Err(e) => return usage_err(e),
    };

    let grid = if args.noise > 0.0 {
        match perturb_z(&grid, args.noise, args.seed) {
            Ok(g) => g,
            Err(e) => return runtime_err(e),
        }
    } else {
        grid
    };

    if let Err(e) = grid_file::save_grid(&args.out, &grid, &args.unit) {
        return runtime_err(format_args!("{}: {e}", args.out.display()));
    }
    println!(
        "wrote {} kind={} width={} height={} spacing={}",
        args.out.display(),
        args.kind,
        grid.width(),
        grid.height(),
        args.spacing
    );
    ExitCode::SUCCESS
}

/// Adds seeded Gaussian noise to z only. x/y stay on the exact lattice so
/// the result is still a valid grid for any noise level.
fn perturb_z(grid: &PointCloudGrid, sigma: f64, seed: u64) -> Result<PointCloudGrid, String> {
    let normal = Normal::new(0.0, sigma).map_err(|e| e.to_string())?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut parts = grid.to_parts();
    for (point, &valid) in parts.points.iter_mut().zip(&parts.mask) {
        if valid {
            point.z += normal.sample(&mut rng);
        }
    }
    PointCloudGrid::new(parts).map_err(|e| e.to_string())
}

fn run_eval(args: EvalArgs) -> ExitCode {
    let mut out = std::io::stdout();
    let result = match args.command {
        EvalCommand::Pairs { protocol, subjects, impressions, out_genuine, out_imposter } => {
            match evalcmd::parse_protocol(&protocol) {
                Ok(p) => {
                    evalcmd::cmd_pairs(p, subjects, impressions, &out_genuine, &out_imposter, &mut out)
                }
                Err(e) => return usage_err(e),
            }
        }
        EvalCommand::Eer { inputs } => {
            evalcmd::cmd_eer(&inputs.scores, &inputs.genuine, &inputs.imposter, &mut out)
        }
        EvalCommand::Roc { inputs, out: out_csv } | EvalCommand::Det { inputs, out: out_csv } => {
            evalcmd::cmd_curve(&inputs.scores, &inputs.genuine, &inputs.imposter, &out_csv, &mut out)
        }
        EvalCommand::Cmc { scores, subjects, impressions, probe_impression, mate_impression, out: out_csv } => {
            let combination = match (probe_impression, mate_impression) {
                (Some(p), Some(q)) => {
                    if p == q {
                        return usage_err("probe and mate impressions must differ");
                    }
                    Some((p, q))
                }
                (None, None) => None,
                _ => {
                    return usage_err(
                        "--probe-impression and --mate-impression must be given together",
                    )
                }
            };
            evalcmd::cmd_cmc(&scores, subjects, impressions, combination, out_csv.as_deref(), &mut out)
        }
        EvalCommand::Report { scores, protocol, subjects, impressions, cmc, out_dir } => {
            match evalcmd::parse_protocol(&protocol) {
                Ok(p) => evalcmd::cmd_report(
                    &scores, p, &protocol, subjects, impressions, cmc, &out_dir, &mut out,
                ),
                Err(e) => return usage_err(e),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // Impossible protocol parameters are a usage problem; everything
        // else (unreadable files, incomplete scores) is a runtime failure.
        Err(CmdError::Eval(e)) => usage_err(e),
        Err(e) => runtime_err(e),
    }
}

fn run_inspect(args: InspectArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.grid) {
        Ok(t) => t,
        Err(e) => return runtime_err(format_args!("{}: {e}", args.grid.display())),
    };
    let source = args.grid.display().to_string();
    let (header, parts) = match grid_file::parse_parts(&text, &source) {
        Ok(p) => p,
        Err(e) => return runtime_err(format_args!("{source}: {e}")),
    };
    let valid = parts.mask.iter().filter(|&&v| v).count();
    println!("source={source}");
    println!("width={}", header.width);
    println!("height={}", header.height);
    println!("unit={}", header.unit);
    println!("valid_cells={valid}");
    println!("masked_cells={}", parts.mask.len() - valid);

    let violations = validate_parts(&parts);
    if violations.is_empty() && valid > 0 {
        println!("status=ok");
        ExitCode::SUCCESS
    } else {
        if valid == 0 {
            println!("violation: grid has no valid points");
        }
        for v in &violations {
            // Cell-level rules map back to a data line: 3 header lines, then
            // row-major cells, 1-based.
            match v.cell {
                Some((r, c)) => println!("violation: {v} (line {})", 4 + r * header.width + c),
                None => println!("violation: {v}"),
            }
        }
        println!("status=invalid");
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Unwrap(args) => run_unwrap(args),
        Command::Synth(args) => run_synth(args),
        Command::Eval(args) => run_eval(args),
        Command::Inspect(args) => run_inspect(args),
    }
}
