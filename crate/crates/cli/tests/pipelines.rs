use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use simseg::io;
use simseg::FeatureSequence;

fn simseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simseg"))
        .args(args)
        .env_remove("SIMSEG_DATA")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = simseg(args);
    assert!(
        out.status.success(),
        "simseg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn kv(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(root: &Path, extra: &[&str]) {
    let mut args = vec![
        "--seed",
        "11",
        "-q",
        "synth",
        "-o",
        p(root),
        "--videos",
        "3",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn detect_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    synth(&root, &[]);
    let det = dir.path().join("det");
    let bundle = root.join("splits/all.bundle");
    ok(&[
        "-q",
        "detect",
        "--data",
        p(&root),
        "--split",
        p(&bundle),
        "--out-dir",
        p(&det),
        "-k",
        "5",
        "--b-intrv",
        "30",
        "--labels-out",
        "yes",
    ]);
    assert!(det.join("vid00.txt").exists());
    let report = ok(&[
        "-q",
        "eval",
        "--data",
        p(&root),
        "--pred-dir",
        p(&det.join("labels")),
        "--match",
        "hungarian",
        "--kv",
    ]);
    assert!(kv(&report, "f1_10") >= 90.0, "{report}");
    assert!(kv(&report, "boundary_f1") >= 90.0, "{report}");
}

#[test]
fn correct_smooth_eval_improves_shifted_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    synth(&root, &["--pred-shift", "6", "--noise", "0.1"]);
    let manifest = root.join("dataset.manifest");
    let bundle = root.join("splits/all.bundle");
    let before = ok(&["-q", "eval", "--manifest", p(&manifest), "--kv"]);

    let corrected = dir.path().join("corrected");
    let smoothed = dir.path().join("smoothed");
    ok(&[
        "-q",
        "correct",
        "--manifest",
        p(&manifest),
        "--split",
        p(&bundle),
        "--out-dir",
        p(&corrected),
    ]);
    ok(&[
        "-q",
        "smooth",
        "--manifest",
        p(&manifest),
        "--pred-dir",
        p(&corrected),
        "--split",
        p(&bundle),
        "--out-dir",
        p(&smoothed),
        "--s-win",
        "auto",
    ]);
    let after = ok(&[
        "-q",
        "eval",
        "--manifest",
        p(&manifest),
        "--pred-dir",
        p(&smoothed),
        "--kv",
    ]);
    assert!(kv(&after, "acc") > kv(&before, "acc"), "{before}\n{after}");
    assert!(kv(&after, "boundary_f1") >= kv(&before, "boundary_f1"));
}

#[test]
fn single_file_commands_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    synth(&root, &["--pred-shift", "5"]);
    let mapping = root.join("mapping.txt");
    let feat = root.join("features/vid01.npy");
    let pred = root.join("predictions/vid01.txt");
    let gt = root.join("groundTruth/vid01.txt");
    let out = dir.path().join("c.txt");
    let report = dir.path().join("c.report");
    ok(&[
        "correct",
        "-f",
        p(&feat),
        "-p",
        p(&pred),
        "--mapping",
        p(&mapping),
        "-o",
        p(&out),
        "--report",
        p(&report),
        "--b-win",
        "auto",
        "--b-seg",
        "auto",
    ]);
    let lines = fs::read_to_string(&report).unwrap();
    assert_eq!(lines.lines().count(), 4);

    let eval_out = dir.path().join("eval.txt");
    ok(&[
        "eval",
        "-p",
        p(&gt),
        "-g",
        p(&gt),
        "--mapping",
        p(&mapping),
        "-o",
        p(&eval_out),
    ]);
    let written = io::load_report(&eval_out).unwrap();
    assert!(written.fields().iter().all(|&(_, v)| v == 100.0));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    synth(&a, &[]);
    synth(&b, &[]);
    let fa = fs::read(a.join("features/vid02.npy")).unwrap();
    assert_eq!(fa, fs::read(b.join("features/vid02.npy")).unwrap());

    let feat = a.join("features/vid02.npy");
    let first = ok(&["--seed", "4", "detect", "-f", p(&feat), "-k", "5"]);
    let second = ok(&["--seed", "4", "detect", "-f", p(&feat), "-k", "5"]);
    assert_eq!(first, second);
    assert!(first.contains("b_intrv="));
    assert!(first.contains("cluster candidates="));
}

#[test]
fn vote_plot_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let l = dir.path().join("l.txt");
    fs::write(&l, "0\n0\n1\n1\n2\n").unwrap();
    let voted = dir.path().join("v.txt");
    ok(&["vote", p(&l), p(&l), p(&l), p(&l), "-o", p(&voted)]);
    assert_eq!(fs::read(&voted).unwrap(), fs::read(&l).unwrap());

    let too_few = simseg(&["vote", p(&l), "-o", p(&voted)]);
    assert_eq!(too_few.status.code(), Some(2));

    let m = dir.path().join("m.txt");
    fs::write(&m, "1\n1\n1\n2\n2\n").unwrap();
    let svg1 = dir.path().join("1.svg");
    let svg2 = dir.path().join("2.svg");
    ok(&["plot", p(&l), p(&m), "-o", p(&svg1), "--titles", "GT,Pr"]);
    ok(&["plot", p(&l), p(&m), "-o", p(&svg2), "--titles", "GT,Pr"]);
    let svg = fs::read_to_string(&svg1).unwrap();
    assert_eq!(svg, fs::read_to_string(&svg2).unwrap());
    assert_eq!(svg.matches("<text").count(), 2);
    assert!(svg.starts_with("<svg"));

    let empty = dir.path().join("e.txt");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        simseg(&["plot", p(&empty), "-o", p(&svg1)]).status.code(),
        Some(2)
    );

    let missing = simseg(&["detect", "-f", p(&dir.path().join("nope.npy")), "-k", "3"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.npy"));
}

#[test]
fn constant_features_are_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("flat.npy");
    io::save_features(&f, &FeatureSequence::new(40, 3, vec![1.0; 120]).unwrap()).unwrap();
    let out = simseg(&["-q", "detect", "-f", p(&f), "-k", "3", "--b-intrv", "5"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
