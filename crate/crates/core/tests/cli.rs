//! End-to-end tests of the command-line binary: flag parsing, exit codes,
//! output formats, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gazelag::fixmap::{map_for_frame, read_map_csv, KernelParams};
use gazelag::gaze::{parse_gaze_log, VideoMeta};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gazelag"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const META_300: &str = "width=160,height=120,fps=15,frames=300";

fn synth_pair(dir: &Path, lag: i32, jitter: f64, seed: u64) -> (String, String) {
    let actor = dir.join("actor.csv").to_str().unwrap().to_string();
    let viewer = dir.join("viewer.csv").to_str().unwrap().to_string();
    let out = run(&[
        "synth",
        "--meta",
        META_300,
        "--seed",
        &seed.to_string(),
        "--lag",
        &lag.to_string(),
        "--jitter",
        &jitter.to_string(),
        "--out-actor",
        &actor,
        "--out-viewer",
        &viewer,
    ]);
    assert_eq!(code(&out), 0, "synth failed: {out:?}");
    (actor, viewer)
}

#[test]
fn synth_is_byte_reproducible_and_prints_lag() {
    let dir = tempfile::tempdir().unwrap();
    let (actor_a, viewer_a) = synth_pair(dir.path(), 10, 5.0, 7);
    let bytes_a = (fs::read(&actor_a).unwrap(), fs::read(&viewer_a).unwrap());

    let dir_b = tempfile::tempdir().unwrap();
    let (actor_b, viewer_b) = synth_pair(dir_b.path(), 10, 5.0, 7);
    let bytes_b = (fs::read(&actor_b).unwrap(), fs::read(&viewer_b).unwrap());
    assert_eq!(bytes_a, bytes_b);

    let out = run(&[
        "synth",
        "--meta",
        META_300,
        "--lag",
        "10",
        "--out-actor",
        dir.path().join("a2.csv").to_str().unwrap(),
        "--out-viewer",
        dir.path().join("v2.csv").to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("lag_frames=10 (666.666667 ms)"));
}

#[test]
fn synth_zero_lag_zero_jitter_emits_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, viewer) = synth_pair(dir.path(), 0, 0.0, 3);
    assert_eq!(fs::read(actor).unwrap(), fs::read(viewer).unwrap());
}

#[test]
fn synth_dropout_matches_requested_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let actor = dir.path().join("actor.csv");
    let out = run(&[
        "synth",
        "--meta",
        "width=160,height=120,fps=15,frames=1000",
        "--dropout",
        "0.5",
        "--out-actor",
        actor.to_str().unwrap(),
        "--out-viewer",
        dir.path().join("viewer.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let meta = VideoMeta::new(160, 120, 15.0, 1000).unwrap();
    let stream = parse_gaze_log(&fs::read(actor).unwrap(), meta, "actor").unwrap();
    let report = stream.validate();
    let fraction = report.invalid as f64 / report.total as f64;
    assert!((fraction - 0.5).abs() < 0.05, "fraction {fraction}");
}

#[test]
fn synth_rejects_missing_frames_and_bad_params() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "synth",
        "--meta",
        "width=160,height=120,fps=15",
        "--out-actor",
        dir.path().join("a.csv").to_str().unwrap(),
        "--out-viewer",
        dir.path().join("v.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 64);

    let out = run(&[
        "synth",
        "--meta",
        META_300,
        "--smoothness",
        "1.5",
        "--out-actor",
        dir.path().join("a.csv").to_str().unwrap(),
        "--out-viewer",
        dir.path().join("v.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn map_writes_pgm_and_lossless_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, _) = synth_pair(dir.path(), 0, 0.0, 11);
    let pgm = dir.path().join("map.pgm");
    let csv = dir.path().join("map.csv");
    let out = run(&[
        "map",
        "--gaze",
        &actor,
        "--meta",
        META_300,
        "--frame",
        "12",
        "--sigma",
        "10",
        "--out-pgm",
        pgm.to_str().unwrap(),
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let pgm_bytes = fs::read(&pgm).unwrap();
    assert!(pgm_bytes.starts_with(b"P5\n160 120\n65535\n"));
    let header = b"P5\n160 120\n65535\n".len();
    let max_level = pgm_bytes[header..]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .max()
        .unwrap();
    assert_eq!(max_level, 65535);

    // the lossless CSV re-imports bit-exactly against an in-process build
    let meta = VideoMeta::new(160, 120, 15.0, 300).unwrap();
    let stream = parse_gaze_log(&fs::read(&actor).unwrap(), meta, "actor").unwrap();
    let params = KernelParams::new(10.0).unwrap();
    let expected = map_for_frame(&stream, 12, 0, &params).unwrap();
    let imported = read_map_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(imported.values(), expected.values());
}

#[test]
fn map_without_gaze_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let gaze = dir.path().join("gaze.csv");
    fs::write(&gaze, "frame,t_s,x_px,y_px,valid\n0,0.000000,80.000,60.000,1\n").unwrap();
    let pgm = dir.path().join("missing.pgm");
    let out = run(&[
        "map",
        "--gaze",
        gaze.to_str().unwrap(),
        "--meta",
        "width=160,height=120,fps=15",
        "--frame",
        "5",
        "--out-pgm",
        pgm.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!pgm.exists());
    assert!(!out.stderr.is_empty());
}

#[test]
fn map_missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "map",
        "--gaze",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--meta",
        META_300,
        "--frame",
        "0",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_reports_known_lag_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, viewer) = synth_pair(dir.path(), 10, 10.0, 42);
    let report_a = dir.path().join("report_a.csv");
    let report_b = dir.path().join("report_b.csv");
    let sweep = |report: &Path| {
        run(&[
            "sweep",
            "--actor",
            &actor,
            "--viewer",
            &viewer,
            "--meta",
            META_300,
            "--metric",
            "auc-maps",
            "--tau",
            "-18:18",
            "--sigma",
            "10",
            "--frame-step",
            "2",
            "--out",
            report.to_str().unwrap(),
        ])
    };
    let out = sweep(&report_a);
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).contains("best_shift=10 (666.666667 ms)"),
        "stdout: {}",
        stdout(&out)
    );

    let text = fs::read_to_string(&report_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau_frames,tau_ms,metric,mean,std,n");
    assert_eq!(lines.len(), 38); // header + 37 shifts
    assert!(lines[1].starts_with("-18,-1200.000000,auc-maps,"));

    let out_b = sweep(&report_b);
    assert_eq!(code(&out_b), 0);
    assert_eq!(fs::read(&report_a).unwrap(), fs::read(&report_b).unwrap());
    assert_eq!(stdout(&out), stdout(&out_b));
}

#[test]
fn sweep_self_comparison_pcc_is_unit_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, _) = synth_pair(dir.path(), 0, 0.0, 9);
    let report = dir.path().join("report.csv");
    let out = run(&[
        "sweep",
        "--actor",
        &actor,
        "--viewer",
        &actor,
        "--meta",
        META_300,
        "--metric",
        "pcc",
        "--tau",
        "-5:5",
        "--sigma",
        "10",
        "--frame-step",
        "4",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("best_shift=0"), "stdout: {text}");
    assert!(text.contains("mean=1.000000"), "stdout: {text}");
}

#[test]
fn sweep_usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, viewer) = synth_pair(dir.path(), 0, 0.0, 1);
    let report = dir.path().join("report.csv");
    // inverted tau range
    let out = run(&[
        "sweep",
        "--actor",
        &actor,
        "--viewer",
        &viewer,
        "--meta",
        META_300,
        "--tau",
        "20:-20",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 64);
    // unknown metric
    let out = run(&[
        "sweep",
        "--actor",
        &actor,
        "--viewer",
        &viewer,
        "--meta",
        META_300,
        "--metric",
        "kl-divergence",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 64);
    // unknown flag is a usage error too
    let out = run(&["sweep", "--bogus"]);
    assert_eq!(code(&out), 64);
    // missing meta
    let out = run(&[
        "sweep",
        "--actor",
        &actor,
        "--viewer",
        &viewer,
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn wilcoxon_pairs_file_exact_case() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    fs::write(&pairs, "a,b\n2,1\n3,1\n4,1\n5,1\n6,1\n").unwrap();
    let out = run(&[
        "wilcoxon",
        "--pairs",
        pairs.to_str().unwrap(),
        "--alternative",
        "greater",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("w_plus=15.000000"), "stdout: {text}");
    assert!(text.contains("n_effective=5"), "stdout: {text}");
    assert!(text.contains("method=exact"), "stdout: {text}");
    assert!(text.contains("p_value=0.031250"), "stdout: {text}");
}

#[test]
fn wilcoxon_identical_columns_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    fs::write(&pairs, "1.5,1.5\n2.5,2.5\n").unwrap();
    let out = run(&["wilcoxon", "--pairs", pairs.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn wilcoxon_from_sweep_confirms_the_lag() {
    let dir = tempfile::tempdir().unwrap();
    let (actor, viewer) = synth_pair(dir.path(), 10, 10.0, 24);
    let out = run(&[
        "wilcoxon",
        "--actor",
        &actor,
        "--viewer",
        &viewer,
        "--meta",
        META_300,
        "--metric",
        "pcc",
        "--tau",
        "-15:15",
        "--sigma",
        "10",
        "--frame-step",
        "2",
        "--tau-a",
        "10",
        "--tau-b",
        "0",
        "--alternative",
        "greater",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("tau=10 vs tau=0"), "stdout: {text}");
    let p: f64 = text
        .split("p_value=")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(p < 0.01, "p = {p}");
}

#[test]
fn wilcoxon_requires_an_input_mode() {
    let out = run(&["wilcoxon"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["sweep", "--help"])), 0);
}
