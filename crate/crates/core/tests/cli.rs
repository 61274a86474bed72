use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lada::raster::{write_pgm, ClassMask, GrayImage, PgmMode};

fn lada(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lada"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const ARTIFACTS: [&str; 9] = [
    "labels.pgm",
    "mle_p.csv",
    "mle_p.pgm",
    "anova_p.csv",
    "anova_p.pgm",
    "boundaries.csv",
    "overlay.pgm",
    "run_report.txt",
    "timings.txt",
];

const SMALL_CYLINDER: &str = "width = 60\nheight = 80\nboundaries = 20, 40, 60\nbase = 200, 20, 60, 100\n\
gradient = 0.15, 0.3, 0.25, 0.2\nnoise = 2\nvoid_half_width = 3\nedge_blur = 1\n";

#[test]
fn phantom_is_deterministic_and_segments() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("spec.cfg"), SMALL_CYLINDER).unwrap();
    for out in ["a", "b"] {
        let res = lada(dir, &["phantom", "cylinder", "--config", "spec.cfg", "--seed", "7", "--out", out]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    for f in ["image.pgm", "mask.pgm", "truth.pgm", "truth.csv"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap());
    }
    let truth_csv = fs::read_to_string(dir.join("a/truth.csv")).unwrap();
    assert!(truth_csv.contains("1,2,line,slope=0.000000;intercept=19.500000"));

    let res = lada(
        dir,
        &["segment", "--image", "a/image.pgm", "--mask", "a/mask.pgm", "-d", "10", "-n", "12", "--alpha", "0.05", "--out", "seg"],
    );
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ARTIFACTS {
        assert!(dir.join("seg").join(f).is_file(), "missing {f}");
    }
    let report = fs::read_to_string(dir.join("seg/run_report.txt")).unwrap();
    assert!(report.contains("d=10\nn=12\n") && report.contains("proximity=5\n"));
    let csv = fs::read_to_string(dir.join("seg/boundaries.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",fitted,")).count(), 3);

    let res = lada(dir, &["report", "--labels", "seg/labels.pgm", "--truth", "a/truth.pgm", "--classes", "4"]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8(res.stdout).unwrap();
    let acc: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("accuracy="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc > 0.99, "{text}");

    // Refitting the saved maps reproduces the boundary table.
    let res = lada(
        dir,
        &["boundaries", "--labels", "seg/labels.pgm", "--classes", "4", "--pmap", "seg/mle_p.csv", "--proximity", "5", "--out", "refit"],
    );
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        fs::read(dir.join("refit/boundaries.csv")).unwrap(),
        fs::read(dir.join("seg/boundaries.csv")).unwrap()
    );
    assert_eq!(
        fs::read(dir.join("refit/overlay.pgm")).unwrap(),
        fs::read(dir.join("seg/overlay.pgm")).unwrap()
    );
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&lada(dir, &["phantom", "ring", "--seed", "3", "--out", "ring"])), 0);
    fs::write(
        dir.join("run.cfg"),
        "image = ring/image.pgm\nmask = ring/mask.pgm\nd = 25\nn = 20\nfit = circle\nout = cfgout\n",
    )
    .unwrap();
    let res = lada(dir, &["segment", "--config", "run.cfg", "-n", "15"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report = fs::read_to_string(dir.join("cfgout/run_report.txt")).unwrap();
    assert!(report.contains("d=25\nn=15\n"), "{report}");
    let csv = fs::read_to_string(dir.join("cfgout/boundaries.csv")).unwrap();
    assert!(csv.contains("1,2,circle,fitted"), "{csv}");

    let res = lada(dir, &["qda", "--config", "run.cfg", "--out", "qdaout"]);
    assert_eq!(code(&res), 0);
    let report = fs::read_to_string(dir.join("qdaout/run_report.txt")).unwrap();
    assert!(report.contains("mode=qda\n"));
}

#[test]
fn bad_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let image = GrayImage::new(4, 4, vec![1.0; 16]).unwrap();
    fs::write(dir.join("img.pgm"), write_pgm(&image, PgmMode::Ascii).unwrap()).unwrap();
    fs::write(dir.join("junk.pgm"), b"P7\n").unwrap();

    let missing_mask = lada(dir, &["segment", "--image", "img.pgm", "--mask", "mask.pgm", "-d", "25", "-n", "25"]);
    assert_eq!(code(&missing_mask), 2);
    assert!(String::from_utf8_lossy(&missing_mask.stderr).contains("mask.pgm"));

    assert_eq!(code(&lada(dir, &["segment", "--image", "img.pgm", "--mask", "junk.pgm"])), 2);
    assert_eq!(code(&lada(dir, &["segment", "--image", "img.pgm"])), 2);
    assert_eq!(code(&lada(dir, &["segment", "--image", "img.pgm", "--mask", "img.pgm", "--alpha", "2"])), 2);
    assert_eq!(code(&lada(dir, &["segment", "--image", "img.pgm", "--mask", "img.pgm", "--mode", "svm"])), 2);
    let threads = Command::new(env!("CARGO_BIN_EXE_lada"))
        .current_dir(dir)
        .env("LADA_THREADS", "many")
        .args(["phantom", "ring", "--out", "x"])
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
}

#[test]
fn fit_failure_exits_3_and_keeps_artifacts() {
    // One column wide: every interface point shares a column, so a line
    // (row on column) cannot be fitted.
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let h = 20;
    let image = GrayImage::new(1, h, (0..h).map(|r| if r < 10 { 10.0 } else { 200.0 }).collect()).unwrap();
    let mask = ClassMask::new(1, h, (0..h).map(|r| if r < 8 { 1 } else if r >= 12 { 2 } else { 0 }).collect()).unwrap();
    fs::write(dir.join("img.pgm"), write_pgm(&image, PgmMode::Binary).unwrap()).unwrap();
    fs::write(dir.join("mask.pgm"), write_pgm(&mask, PgmMode::Binary).unwrap()).unwrap();
    let res = lada(
        dir,
        &["segment", "--image", "img.pgm", "--mask", "mask.pgm", "-d", "6", "-n", "5", "--min-boundary-points", "2", "--out", "o"],
    );
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ARTIFACTS {
        assert!(dir.join("o").join(f).is_file(), "missing {f}");
    }
    let csv = fs::read_to_string(dir.join("o/boundaries.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("1,2,line,failed,2,"), "{csv}");
    let report = fs::read_to_string(dir.join("o/run_report.txt")).unwrap();
    assert!(report.contains("status=fit_failure"));
}
