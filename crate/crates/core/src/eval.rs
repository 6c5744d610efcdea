//! Verification and identification metrics over externally computed match
//! scores. Scores are similarities: a comparison is accepted at threshold t
//! when score >= t, so FAR(t) is the fraction of imposter scores >= t and
//! FRR(t) the fraction of genuine scores < t.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// One enrolled sample: subject, impression number (1-based), and capture
/// session. Single-session protocols use session 1 throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImpressionId {
    pub subject: u32,
    pub impression: u32,
    pub session: u32,
}

impl ImpressionId {
    pub fn new(subject: u32, impression: u32) -> Self {
        ImpressionId { subject, impression, session: 1 }
    }

    pub fn with_session(subject: u32, impression: u32, session: u32) -> Self {
        ImpressionId { subject, impression, session }
    }
}

/// An unordered comparison between two impressions. Matching treats (a, b)
/// and (b, a) as the same pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pair {
    pub a: ImpressionId,
    pub b: ImpressionId,
}

impl Pair {
    pub fn new(a: ImpressionId, b: ImpressionId) -> Self {
        Pair { a, b }
    }

    /// Order-insensitive key: the two ids sorted.
    pub fn canonical(&self) -> (ImpressionId, ImpressionId) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }
}

/// Comparison protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// Single session. Genuine: every impression pair within a subject,
    /// S * C(m, 2). Imposter: every impression pair across subjects,
    /// C(S, 2) * m^2.
    AllPairs,
    /// Single session. Genuine as in `AllPairs`; imposters compare only the
    /// first impression of each subject, C(S, 2) in total.
    FirstImpression,
    /// Two sessions. Every comparison puts a session-2 impression first and
    /// a session-1 impression second. Genuine: S * m^2. Imposter: one
    /// direction per unordered subject pair, C(S, 2) * m^2.
    CrossSession,
}

/// Pair lists for one protocol run.
#[derive(Clone, Debug, Default)]
pub struct PairSet {
    pub genuine: Vec<Pair>,
    pub imposter: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    TooFewSubjects,
    DuplicateSubject { subject: u32 },
    TooFewImpressions,
    ImpressionOutOfRange { impression: u32, count: u32 },
    EmptyGenuine,
    EmptyImposter,
    NonFiniteScore { index: usize },
    UnknownPair { index: usize },
    DuplicatePair { index: usize },
    EmptyRanks,
    EmptyGallery,
    RankOutOfRange { rank: usize, gallery: usize },
    CurveLengthMismatch,
    EmptyCurveSet,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TooFewSubjects => write!(f, "need at least two subjects"),
            EvalError::DuplicateSubject { subject } => {
                write!(f, "subject {subject} listed more than once")
            }
            EvalError::TooFewImpressions => write!(f, "need at least one impression per subject"),
            EvalError::ImpressionOutOfRange { impression, count } => {
                write!(f, "impression {impression} outside 1..={count}")
            }
            EvalError::EmptyGenuine => write!(f, "no genuine scores"),
            EvalError::EmptyImposter => write!(f, "no imposter scores"),
            EvalError::NonFiniteScore { index } => write!(f, "score {index} is not finite"),
            EvalError::UnknownPair { index } => {
                write!(f, "score {index} refers to a pair in neither list")
            }
            EvalError::DuplicatePair { index } => {
                write!(f, "score {index} repeats an already scored pair")
            }
            EvalError::EmptyRanks => write!(f, "no ranks to accumulate"),
            EvalError::EmptyGallery => write!(f, "gallery size must be positive"),
            EvalError::RankOutOfRange { rank, gallery } => {
                write!(f, "rank {rank} exceeds gallery size {gallery}")
            }
            EvalError::CurveLengthMismatch => write!(f, "curves have differing lengths"),
            EvalError::EmptyCurveSet => write!(f, "no curves to average"),
        }
    }
}

impl core::error::Error for EvalError {}

fn check_subjects(subjects: &[u32], m: u32) -> Result<(), EvalError> {
    if subjects.len() < 2 {
        return Err(EvalError::TooFewSubjects);
    }
    if m < 1 {
        return Err(EvalError::TooFewImpressions);
    }
    let mut seen = subjects.to_vec();
    seen.sort_unstable();
    for w in seen.windows(2) {
        if w[0] == w[1] {
            return Err(EvalError::DuplicateSubject { subject: w[0] });
        }
    }
    Ok(())
}

/// Enumerates the genuine and imposter comparisons for `protocol` over the
/// given subjects, each with impressions 1..=m (per session where relevant).
pub fn gen_verification_pairs(
    protocol: Protocol,
    subjects: &[u32],
    m: u32,
) -> Result<PairSet, EvalError> {
    check_subjects(subjects, m)?;
    let mut set = PairSet::default();
    match protocol {
        Protocol::AllPairs | Protocol::FirstImpression => {
            for &s in subjects {
                for i in 1..=m {
                    for j in (i + 1)..=m {
                        set.genuine
                            .push(Pair::new(ImpressionId::new(s, i), ImpressionId::new(s, j)));
                    }
                }
            }
            for (ai, &a) in subjects.iter().enumerate() {
                for &b in &subjects[ai + 1..] {
                    if protocol == Protocol::FirstImpression {
                        set.imposter
                            .push(Pair::new(ImpressionId::new(a, 1), ImpressionId::new(b, 1)));
                    } else {
                        for i in 1..=m {
                            for j in 1..=m {
                                set.imposter.push(Pair::new(
                                    ImpressionId::new(a, i),
                                    ImpressionId::new(b, j),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Protocol::CrossSession => {
            for &s in subjects {
                for i in 1..=m {
                    for j in 1..=m {
                        set.genuine.push(Pair::new(
                            ImpressionId::with_session(s, i, 2),
                            ImpressionId::with_session(s, j, 1),
                        ));
                    }
                }
            }
            for (ai, &a) in subjects.iter().enumerate() {
                for &b in &subjects[ai + 1..] {
                    for i in 1..=m {
                        for j in 1..=m {
                            set.imposter.push(Pair::new(
                                ImpressionId::with_session(a, i, 2),
                                ImpressionId::with_session(b, j, 1),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(set)
}

/// Closed identification setup: for each subject, the probe is its
/// `probe_impression` and the gallery holds that subject's `mate_impression`
/// (always at index 0) plus all m impressions of every other subject, so
/// every gallery has 1 + (S - 1) * m entries.
#[derive(Clone, Debug)]
pub struct IdentificationSetup {
    pub probes: Vec<ImpressionId>,
    pub galleries: Vec<Vec<ImpressionId>>,
}

pub fn gen_identification_gallery(
    subjects: &[u32],
    m: u32,
    probe_impression: u32,
    mate_impression: u32,
) -> Result<IdentificationSetup, EvalError> {
    check_subjects(subjects, m)?;
    for imp in [probe_impression, mate_impression] {
        if imp < 1 || imp > m {
            return Err(EvalError::ImpressionOutOfRange { impression: imp, count: m });
        }
    }
    let mut probes = Vec::with_capacity(subjects.len());
    let mut galleries = Vec::with_capacity(subjects.len());
    for &s in subjects {
        probes.push(ImpressionId::new(s, probe_impression));
        let mut gallery = Vec::with_capacity(1 + (subjects.len() - 1) * m as usize);
        gallery.push(ImpressionId::new(s, mate_impression));
        for &other in subjects {
            if other == s {
                continue;
            }
            for i in 1..=m {
                gallery.push(ImpressionId::new(other, i));
            }
        }
        galleries.push(gallery);
    }
    Ok(IdentificationSetup { probes, galleries })
}

/// Scored comparison as read from a score file.
#[derive(Clone, Copy, Debug)]
pub struct ScoreRecord {
    pub pair: Pair,
    pub score: f64,
}

/// Genuine and imposter similarity scores.
#[derive(Clone, Debug, Default)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub imposter: Vec<f64>,
}

/// Splits score records into genuine and imposter sets according to the pair
/// lists. Matching ignores element order within a pair. Records whose pair is
/// in neither list, repeats an already scored pair, or carries a non-finite
/// score are rejected with their record index.
pub fn partition_scores(
    records: &[ScoreRecord],
    genuine: &[Pair],
    imposter: &[Pair],
) -> Result<ScoreSet, EvalError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Genuine,
        Imposter,
    }
    let mut index = BTreeMap::new();
    for p in genuine {
        index.insert(p.canonical(), (Side::Genuine, false));
    }
    for p in imposter {
        index.insert(p.canonical(), (Side::Imposter, false));
    }
    let mut set = ScoreSet::default();
    for (i, rec) in records.iter().enumerate() {
        if !rec.score.is_finite() {
            return Err(EvalError::NonFiniteScore { index: i });
        }
        match index.get_mut(&rec.pair.canonical()) {
            None => return Err(EvalError::UnknownPair { index: i }),
            Some((_, true)) => return Err(EvalError::DuplicatePair { index: i }),
            Some((side, seen)) => {
                *seen = true;
                match side {
                    Side::Genuine => set.genuine.push(rec.score),
                    Side::Imposter => set.imposter.push(rec.score),
                }
            }
        }
    }
    Ok(set)
}

/// FAR/FRR at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
}

fn sorted_scores(scores: &ScoreSet) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    if scores.genuine.is_empty() {
        return Err(EvalError::EmptyGenuine);
    }
    if scores.imposter.is_empty() {
        return Err(EvalError::EmptyImposter);
    }
    for (i, s) in scores.genuine.iter().chain(scores.imposter.iter()).enumerate() {
        if !s.is_finite() {
            return Err(EvalError::NonFiniteScore { index: i });
        }
    }
    let mut gen = scores.genuine.clone();
    let mut imp = scores.imposter.clone();
    gen.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    imp.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((gen, imp))
}

/// Operating points at every distinct observed score, walked in ascending
/// threshold order with two cursors so the sweep is linear after sorting.
fn sweep_points(gen: &[f64], imp: &[f64]) -> Vec<OperatingPoint> {
    let mut thresholds: Vec<f64> = gen.iter().chain(imp.iter()).copied().collect();
    thresholds.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let (ng, ni) = (gen.len() as f64, imp.len() as f64);
    let mut points = Vec::with_capacity(thresholds.len());
    let mut gi = 0; // genuine scores strictly below the threshold
    let mut ii = 0; // imposter scores strictly below the threshold
    for t in thresholds {
        while gi < gen.len() && gen[gi] < t {
            gi += 1;
        }
        while ii < imp.len() && imp[ii] < t {
            ii += 1;
        }
        points.push(OperatingPoint {
            threshold: t,
            far: (imp.len() - ii) as f64 / ni,
            frr: gi as f64 / ng,
        });
    }
    points
}

/// Equal error rate by sweeping every distinct score as a threshold.
///
/// FAR - FRR is non-increasing in the threshold. If some threshold makes it
/// exactly zero, the EER is that common error (ties resolve toward the lower
/// value). Otherwise the two curves cross between adjacent thresholds and the
/// EER is linearly interpolated inside the bracket; a virtual top threshold
/// with FAR 0, FRR 1 closes the sweep when the difference never turns
/// negative, in which case the reported threshold clamps to the highest
/// observed score.
pub fn compute_eer(scores: &ScoreSet) -> Result<EerResult, EvalError> {
    let (gen, imp) = sorted_scores(scores)?;
    let points = sweep_points(&gen, &imp);

    let exact = points
        .iter()
        .filter(|p| p.far == p.frr)
        .min_by(|a, b| a.far.partial_cmp(&b.far).unwrap());
    if let Some(p) = exact {
        return Ok(EerResult { eer: p.far, threshold: p.threshold });
    }

    let virtual_top = OperatingPoint {
        threshold: points.last().unwrap().threshold,
        far: 0.0,
        frr: 1.0,
    };
    for w in points.windows(2).map(|w| (w[0], w[1])).chain([(
        *points.last().unwrap(),
        virtual_top,
    )]) {
        let (lo, hi) = w;
        let d0 = lo.far - lo.frr;
        let d1 = hi.far - hi.frr;
        if d0 > 0.0 && d1 < 0.0 {
            let t = d0 / (d0 - d1);
            return Ok(EerResult {
                eer: lo.far + t * (hi.far - lo.far),
                threshold: lo.threshold + t * (hi.threshold - lo.threshold),
            });
        }
    }
    // d starts at 1 (lowest threshold accepts everything) and ends at -1 on
    // the virtual top, so a zero or a sign change always exists.
    unreachable!("difference curve must cross zero");
}

/// One operating point per distinct threshold, descending from a virtual
/// +infinity (FAR 0, FRR 1) down to the lowest observed score (FAR 1,
/// FRR 0), so FAR runs weakly ascending. ROC readers plot (far, 1 - frr),
/// DET readers plot (far, frr).
pub fn roc_det_points(scores: &ScoreSet) -> Result<Vec<OperatingPoint>, EvalError> {
    let (gen, imp) = sorted_scores(scores)?;
    let mut points = sweep_points(&gen, &imp);
    points.reverse();
    let mut out = vec![OperatingPoint { threshold: f64::INFINITY, far: 0.0, frr: 1.0 }];
    out.extend(points);
    Ok(out)
}

/// Pessimistic closed-set rank: 1 + the number of non-mate scores that beat
/// the mate, counting ties against the mate.
pub fn rank_of_mate(mate_score: f64, nonmate_scores: &[f64]) -> usize {
    1 + nonmate_scores.iter().filter(|&&s| s >= mate_score).count()
}

/// Cumulative match characteristic: entry k is the fraction of probes whose
/// mate ranked within the top k+1. Monotone non-decreasing, ending at 1.
pub fn compute_cmc(ranks: &[usize], gallery_size: usize) -> Result<Vec<f64>, EvalError> {
    if ranks.is_empty() {
        return Err(EvalError::EmptyRanks);
    }
    if gallery_size == 0 {
        return Err(EvalError::EmptyGallery);
    }
    let mut hist = vec![0usize; gallery_size];
    for &r in ranks {
        if r < 1 || r > gallery_size {
            return Err(EvalError::RankOutOfRange { rank: r, gallery: gallery_size });
        }
        hist[r - 1] += 1;
    }
    let n = ranks.len() as f64;
    let mut cum = 0usize;
    Ok(hist
        .into_iter()
        .map(|c| {
            cum += c;
            cum as f64 / n
        })
        .collect())
}

/// Element-wise mean of equally long CMC curves, one per probe/mate
/// impression combination.
pub fn average_cmc_over_combinations(curves: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    let first = curves.first().ok_or(EvalError::EmptyCurveSet)?;
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(EvalError::CurveLengthMismatch);
    }
    let n = curves.len() as f64;
    Ok((0..first.len())
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / n)
        .collect())
}
