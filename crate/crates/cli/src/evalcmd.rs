//! Implementations of the `eval` subcommands: pair-list generation, EER,
//! ROC/DET point tables, CMC curves, and the bundled report.

use crate::score_file::{self, ScoreFileError};
use fpunwrap_core::eval::{
    average_cmc_over_combinations, compute_cmc, compute_eer, gen_identification_gallery,
    gen_verification_pairs, partition_scores, rank_of_mate, roc_det_points, EvalError,
    ImpressionId, OperatingPoint, Protocol, ScoreRecord, ScoreSet,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CmdError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    ScoreFile(#[from] ScoreFileError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("unknown protocol \"{0}\" (expected all-pairs, first-impression, or cross-session)")]
    UnknownProtocol(String),
    #[error("no score for comparison {0:?} vs {1:?}")]
    MissingScore(ImpressionId, ImpressionId),
}

pub fn parse_protocol(name: &str) -> Result<Protocol, CmdError> {
    match name {
        "all-pairs" => Ok(Protocol::AllPairs),
        "first-impression" => Ok(Protocol::FirstImpression),
        "cross-session" => Ok(Protocol::CrossSession),
        _ => Err(CmdError::UnknownProtocol(name.to_string())),
    }
}

fn subject_ids(subjects: u32) -> Vec<u32> {
    (1..=subjects).collect()
}

/// `eval pairs`: writes the genuine and imposter pair lists and prints their
/// sizes.
pub fn cmd_pairs(
    protocol: Protocol,
    subjects: u32,
    impressions: u32,
    out_genuine: &Path,
    out_imposter: &Path,
    out: &mut dyn Write,
) -> Result<(), CmdError> {
    let set = gen_verification_pairs(protocol, &subject_ids(subjects), impressions)?;
    score_file::write_pairs(out_genuine, &set.genuine)?;
    score_file::write_pairs(out_imposter, &set.imposter)?;
    writeln!(out, "genuine_count={}", set.genuine.len())?;
    writeln!(out, "imposter_count={}", set.imposter.len())?;
    Ok(())
}

/// Loads scores and splits them against the two pair lists.
pub fn load_score_set(
    scores: &Path,
    genuine: &Path,
    imposter: &Path,
) -> Result<ScoreSet, CmdError> {
    let records = score_file::read_scores(scores)?;
    let genuine = score_file::read_pairs(genuine)?;
    let imposter = score_file::read_pairs(imposter)?;
    Ok(partition_scores(&records, &genuine, &imposter)?)
}

pub fn cmd_eer(
    scores: &Path,
    genuine: &Path,
    imposter: &Path,
    out: &mut dyn Write,
) -> Result<(), CmdError> {
    let set = load_score_set(scores, genuine, imposter)?;
    let result = compute_eer(&set)?;
    writeln!(out, "genuine_scored={}", set.genuine.len())?;
    writeln!(out, "imposter_scored={}", set.imposter.len())?;
    writeln!(out, "eer={}", result.eer)?;
    writeln!(out, "threshold={}", result.threshold)?;
    Ok(())
}

#[derive(Serialize)]
struct PointRow {
    threshold: f64,
    far: f64,
    frr: f64,
}

fn write_points(path: &Path, points: &[OperatingPoint]) -> Result<(), CmdError> {
    let mut writer = csv::Writer::from_writer(File::create(path)?);
    for p in points {
        writer.serialize(PointRow { threshold: p.threshold, far: p.far, frr: p.frr })?;
    }
    writer.flush()?;
    Ok(())
}

/// `eval roc` and `eval det` share the operating-point table; they differ
/// only in how readers plot it.
pub fn cmd_curve(
    scores: &Path,
    genuine: &Path,
    imposter: &Path,
    out_csv: &Path,
    out: &mut dyn Write,
) -> Result<(), CmdError> {
    let set = load_score_set(scores, genuine, imposter)?;
    let points = roc_det_points(&set)?;
    write_points(out_csv, &points)?;
    writeln!(out, "points={}", points.len())?;
    Ok(())
}

/// Score lookup keyed by the unordered comparison.
struct ScoreIndex(BTreeMap<(ImpressionId, ImpressionId), f64>);

impl ScoreIndex {
    fn new(records: &[ScoreRecord]) -> Self {
        ScoreIndex(records.iter().map(|r| (r.pair.canonical(), r.score)).collect())
    }

    fn get(&self, a: ImpressionId, b: ImpressionId) -> Result<f64, CmdError> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.0.get(&key).copied().ok_or(CmdError::MissingScore(a, b))
    }
}

/// One CMC curve for a fixed probe/mate impression choice.
fn cmc_for_combination(
    index: &ScoreIndex,
    subjects: &[u32],
    impressions: u32,
    probe_impression: u32,
    mate_impression: u32,
) -> Result<Vec<f64>, CmdError> {
    let setup =
        gen_identification_gallery(subjects, impressions, probe_impression, mate_impression)?;
    let mut ranks = Vec::with_capacity(setup.probes.len());
    let gallery_size = setup.galleries[0].len();
    for (probe, gallery) in setup.probes.iter().zip(&setup.galleries) {
        let mate = index.get(*probe, gallery[0])?;
        let mut nonmates = Vec::with_capacity(gallery.len() - 1);
        for entry in &gallery[1..] {
            nonmates.push(index.get(*probe, *entry)?);
        }
        ranks.push(rank_of_mate(mate, &nonmates));
    }
    Ok(compute_cmc(&ranks, gallery_size)?)
}

/// `eval cmc`: a single probe/mate combination when given, otherwise the
/// element-wise average over all ordered combinations with distinct probe
/// and mate impressions.
pub fn cmd_cmc(
    scores: &Path,
    subjects: u32,
    impressions: u32,
    combination: Option<(u32, u32)>,
    out_csv: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CmdError> {
    let records = score_file::read_scores(scores)?;
    let index = ScoreIndex::new(&records);
    let ids = subject_ids(subjects);

    let curve = match combination {
        Some((probe, mate)) => cmc_for_combination(&index, &ids, impressions, probe, mate)?,
        None => {
            let mut curves = Vec::new();
            for probe in 1..=impressions {
                for mate in 1..=impressions {
                    if probe != mate {
                        curves.push(cmc_for_combination(&index, &ids, impressions, probe, mate)?);
                    }
                }
            }
            average_cmc_over_combinations(&curves)?
        }
    };

    if let Some(path) = out_csv {
        let mut writer = csv::Writer::from_writer(File::create(path)?);
        writer.write_record(["rank", "hit_rate"])?;
        for (i, rate) in curve.iter().enumerate() {
            writer.write_record([(i + 1).to_string(), rate.to_string()])?;
        }
        writer.flush()?;
    }
    writeln!(out, "gallery_size={}", curve.len())?;
    writeln!(out, "rank1={}", curve[0])?;
    Ok(())
}

/// `eval report`: regenerates the protocol pair lists, scores them, and
/// bundles counts plus every verification metric (and optionally the averaged
/// CMC) into `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_report(
    scores_path: &Path,
    protocol: Protocol,
    protocol_name: &str,
    subjects: u32,
    impressions: u32,
    with_cmc: bool,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<(), CmdError> {
    std::fs::create_dir_all(out_dir)?;
    let ids = subject_ids(subjects);
    let pair_set = gen_verification_pairs(protocol, &ids, impressions)?;
    let records = score_file::read_scores(scores_path)?;
    let score_set = partition_scores(&records, &pair_set.genuine, &pair_set.imposter)?;
    let eer = compute_eer(&score_set)?;
    let points = roc_det_points(&score_set)?;
    write_points(&out_dir.join("roc.csv"), &points)?;
    write_points(&out_dir.join("det.csv"), &points)?;

    let mut report = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(report, "protocol={protocol_name}");
    let _ = writeln!(report, "subjects={subjects}");
    let _ = writeln!(report, "impressions={impressions}");
    let _ = writeln!(report, "genuine_count={}", pair_set.genuine.len());
    let _ = writeln!(report, "imposter_count={}", pair_set.imposter.len());
    let _ = writeln!(report, "genuine_scored={}", score_set.genuine.len());
    let _ = writeln!(report, "imposter_scored={}", score_set.imposter.len());
    let _ = writeln!(report, "eer={}", eer.eer);
    let _ = writeln!(report, "eer_threshold={}", eer.threshold);
    let _ = writeln!(report, "operating_points={}", points.len());

    if with_cmc {
        let index = ScoreIndex::new(&records);
        let mut curves = Vec::new();
        for probe in 1..=impressions {
            for mate in 1..=impressions {
                if probe != mate {
                    curves.push(cmc_for_combination(&index, &ids, impressions, probe, mate)?);
                }
            }
        }
        let curve = average_cmc_over_combinations(&curves)?;
        let mut writer = csv::Writer::from_writer(File::create(out_dir.join("cmc.csv"))?);
        writer.write_record(["rank", "hit_rate"])?;
        for (i, rate) in curve.iter().enumerate() {
            writer.write_record([(i + 1).to_string(), rate.to_string()])?;
        }
        writer.flush()?;
        let _ = writeln!(report, "gallery_size={}", curve.len());
        let _ = writeln!(report, "rank1={}", curve[0]);
    }

    std::fs::write(out_dir.join("report.txt"), &report)?;
    write!(out, "{report}")?;
    Ok(())
}
