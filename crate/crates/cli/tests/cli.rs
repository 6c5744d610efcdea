//! End-to-end runs of the compiled binary: exit codes, stdout/stderr
//! contracts, and on-disk artifacts.

use fpunwrap::score_file;
use fpunwrap_core::eval::{ImpressionId, Pair, ScoreRecord};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpunwrap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn synth(out: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--kind", "plane", "--out"];
    let out_str = out.to_str().unwrap().to_string();
    args.push(&out_str);
    args.extend_from_slice(extra);
    let output = run(&args);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
}

#[test]
fn flat_plane_unwraps_to_uniform_midgray() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("plane.p3d");
    synth(&grid, &["--width", "16", "--height", "12"]);

    let out_dir = dir.path().join("out");
    let output = run(&[
        "unwrap",
        "--input",
        grid.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("processed=1"), "{text}");
    assert!(text.contains("failed=0"), "{text}");
    let log = stderr(&output);
    assert!(log.contains("warning file="), "{log}");
    assert!(log.contains("timing file="), "{log}");
    for stage in ["fit=", "detrend=", "unwrap_x=", "unwrap_y=", "rasterize=", "total="] {
        assert!(log.contains(stage), "{log}");
    }

    // A perfectly flat surface has zero height range everywhere, so the
    // whole image lands on the mid-gray fallback.
    let mut expected = b"P5\n16 12\n255\n".to_vec();
    expected.extend(std::iter::repeat(128u8).take(16 * 12));
    let image = std::fs::read(out_dir.join("plane.pgm")).unwrap();
    assert_eq!(image, expected);

    let manifest = std::fs::read_to_string(out_dir.join("manifest.tsv")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines.len(), 1);
    let (name, digest) = lines[0].split_once('\t').unwrap();
    assert_eq!(name, "plane.pgm");
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn batch_with_a_corrupt_member_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let in_dir = dir.path().join("in");
    std::fs::create_dir(&in_dir).unwrap();
    synth(&in_dir.join("good.p3d"), &["--width", "12", "--height", "8"]);
    std::fs::write(in_dir.join("broken.p3d"), "not a grid\n").unwrap();

    let out_dir = dir.path().join("out");
    let output = run(&[
        "unwrap",
        "--input",
        in_dir.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    let text = stdout(&output);
    assert!(text.contains("processed=1"), "{text}");
    assert!(text.contains("failed=1"), "{text}");
    let log = stderr(&output);
    assert!(log.contains("error file=") && log.contains("broken.p3d"), "{log}");

    // The good file's artifacts still land, and only they enter the manifest.
    let manifest = std::fs::read_to_string(out_dir.join("manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
    assert!(manifest.contains("good.pgm"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // Missing required pipeline settings.
    let output = run(&["unwrap"]);
    assert_eq!(code(&output), 2, "{}", stderr(&output));

    // Unknown synth surface.
    let output = run(&[
        "synth",
        "--kind",
        "sphere",
        "--out",
        dir.path().join("s.p3d").to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("unknown kind"));

    // Half-specified identification combination.
    let output = run(&[
        "eval", "cmc", "--scores", "nope.csv", "--subjects", "3", "--impressions", "2",
        "--probe-impression", "1",
    ]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("together"));

    // Flags clap itself rejects.
    let output = run(&["unwrap", "--no-such-flag"]);
    assert_eq!(code(&output), 2);

    // Config file with an unknown key.
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "degee = 2\n").unwrap();
    let output = run(&["unwrap", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("degee"), "{}", stderr(&output));
}

#[test]
fn inspect_summarizes_and_flags_invalid_grids() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.p3d");
    synth(&good, &["--width", "5", "--height", "4", "--unit", "mm"]);
    let output = run(&["inspect", good.to_str().unwrap()]);
    assert_eq!(code(&output), 0);
    let text = stdout(&output);
    for line in ["width=5", "height=4", "unit=mm", "valid_cells=20", "masked_cells=0", "status=ok"]
    {
        assert!(text.contains(line), "{text}");
    }

    // Swap two x coordinates so one row is out of order.
    let bad = dir.path().join("bad.p3d");
    std::fs::write(&bad, "P3DGRID 1\n2 2\nunit mm\n1 0 0\n0 0 0\n0 1 0\n1 1 0\n").unwrap();
    let output = run(&["inspect", bad.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let text = stdout(&output);
    assert!(text.contains("violation:"), "{text}");
    assert!(text.contains("status=invalid"), "{text}");

    let output = run(&["inspect", dir.path().join("absent.p3d").to_str().unwrap()]);
    assert_eq!(code(&output), 1);
}

#[test]
fn pair_generation_reports_protocol_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen.csv");
    let imp = dir.path().join("imp.csv");
    let output = run(&[
        "eval", "pairs", "--protocol", "all-pairs", "--subjects", "4", "--impressions", "3",
        "--out-genuine", gen.to_str().unwrap(), "--out-imposter", imp.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("genuine_count=12"), "{text}"); // 4 * C(3,2)
    assert!(text.contains("imposter_count=54"), "{text}"); // C(4,2) * 3^2

    // Header plus one row per pair.
    let gen_lines = std::fs::read_to_string(gen).unwrap().lines().count();
    let imp_lines = std::fs::read_to_string(imp).unwrap().lines().count();
    assert_eq!(gen_lines, 13);
    assert_eq!(imp_lines, 55);
}

fn write_hand_case(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let id = ImpressionId::new;
    let genuine = vec![
        Pair::new(id(1, 1), id(1, 2)),
        Pair::new(id(1, 1), id(1, 3)),
        Pair::new(id(2, 1), id(2, 2)),
        Pair::new(id(2, 1), id(2, 3)),
    ];
    let imposter = vec![
        Pair::new(id(1, 1), id(2, 1)),
        Pair::new(id(1, 1), id(2, 2)),
        Pair::new(id(1, 2), id(2, 1)),
        Pair::new(id(1, 3), id(2, 1)),
    ];
    let mut records = Vec::new();
    for (pair, score) in genuine.iter().zip([4.0, 6.0, 8.0, 9.0]) {
        records.push(ScoreRecord { pair: *pair, score });
    }
    for (pair, score) in imposter.iter().zip([1.0, 3.0, 5.0, 7.0]) {
        records.push(ScoreRecord { pair: *pair, score });
    }
    let gen_path = dir.join("gen.csv");
    let imp_path = dir.join("imp.csv");
    let scores_path = dir.join("scores.csv");
    score_file::write_pairs(&gen_path, &genuine).unwrap();
    score_file::write_pairs(&imp_path, &imposter).unwrap();
    score_file::write_scores(&scores_path, &records).unwrap();
    (scores_path, gen_path, imp_path)
}

#[test]
fn eer_through_the_binary_matches_the_hand_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, gen, imp) = write_hand_case(dir.path());
    let output = run(&[
        "eval", "eer", "--scores", scores.to_str().unwrap(), "--genuine", gen.to_str().unwrap(),
        "--imposter", imp.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("eer=0.25\n"), "{text}");
    assert!(text.contains("threshold=6\n"), "{text}");
    assert!(text.contains("genuine_scored=4"), "{text}");
}

#[test]
fn roc_table_has_header_and_terminal_points() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, gen, imp) = write_hand_case(dir.path());
    let out = dir.path().join("roc.csv");
    let output = run(&[
        "eval", "roc", "--scores", scores.to_str().unwrap(), "--genuine", gen.to_str().unwrap(),
        "--imposter", imp.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "threshold,far,frr");
    // 8 distinct scores + the reject-everything sentinel.
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "inf,0.0,1.0");
    assert!(lines[9].ends_with(",1.0,0.0"), "{}", lines[9]);
}

#[test]
fn report_bundles_counts_metrics_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    // Perfectly separable synthetic matcher over the full all-pairs square.
    let subjects: Vec<u32> = (1..=3).collect();
    let set =
        fpunwrap_core::eval::gen_verification_pairs(
            fpunwrap_core::eval::Protocol::AllPairs,
            &subjects,
            2,
        )
        .unwrap();
    let mut records = Vec::new();
    for (i, p) in set.genuine.iter().enumerate() {
        records.push(ScoreRecord { pair: *p, score: 0.9 + i as f64 * 1e-4 });
    }
    for (i, p) in set.imposter.iter().enumerate() {
        records.push(ScoreRecord { pair: *p, score: 0.1 + i as f64 * 1e-4 });
    }
    let scores = dir.path().join("scores.csv");
    score_file::write_scores(&scores, &records).unwrap();

    let out_dir = dir.path().join("report");
    let output = run(&[
        "eval", "report", "--scores", scores.to_str().unwrap(), "--protocol", "all-pairs",
        "--subjects", "3", "--impressions", "2", "--cmc", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let report = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    for line in [
        "protocol=all-pairs",
        "genuine_count=3",
        "imposter_count=12",
        "genuine_scored=3",
        "imposter_scored=12",
        "eer=0\n",
        "rank1=1\n",
        "gallery_size=5",
    ] {
        assert!(report.contains(line), "missing {line:?} in {report}");
    }
    assert_eq!(report, stdout(&output));
    for artifact in ["roc.csv", "det.csv", "cmc.csv"] {
        assert!(out_dir.join(artifact).is_file(), "{artifact}");
    }
}
