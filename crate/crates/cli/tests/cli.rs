use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ug_core::GridConfig;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenes() -> PathBuf {
    repo().join("crates/core/tests/fixtures/scenes.jsonl")
}

fn vocab() -> PathBuf {
    repo().join("crates/core/tests/fixtures/vocab.json")
}

fn ug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ug"))
        .args(args)
        .env_remove("UG_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn grid_file(dir: &Path, restrictions: &str) -> PathBuf {
    let path = dir.join("grid.toml");
    let text = format!(
        "topk = [16]\nfilters = [\"none\"]\n\n[restrictions]\n{restrictions}\n\n[[calibrations]]\nensemble = \"keep_members\"\nsizes = [4]\n\n[[detectors]]\nmethod = \"EV\"\n"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn evaluate_prints_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let grid = grid_file(dir.path(), "");
    let out = ug(&[
        "evaluate",
        "--data",
        scenes().to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        stdout(&out),
        "Method, top-k, CertIoU.5, CertAcc, CorrUnc, Th.IoU.5, AvgUncObj, MaxUncObj\n\
         Ens_4 + EV, 16, 0.500, 1.000, 1.000, 1.000, 2.00, 2\n"
    );
}

#[test]
fn evaluate_writes_markdown_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = grid_file(dir.path(), "");
    let target = dir.path().join("report.md");
    let out = ug(&[
        "evaluate",
        "--data",
        scenes().to_str().unwrap(),
        "--vocab",
        vocab().to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--format",
        "markdown",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(target).unwrap();
    assert!(text.contains("| Ens_4 + EV | 16 | 0.500 |"), "{text}");
}

#[test]
fn require_pass_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = scenes();
    let passing = grid_file(dir.path(), "th_iou_min = 0.75");
    let out = ug(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--grid",
        passing.to_str().unwrap(),
        "--require-pass",
    ]);
    assert_eq!(out.status.code(), Some(0));

    // Th.IoU is exactly 1 on the fixture and the bound is strict.
    let failing = grid_file(dir.path(), "th_iou_min = 1.0");
    let out = ug(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--grid",
        failing.to_str().unwrap(),
        "--require-pass",
        "--restrict",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out).lines().count(), 1, "only the header survives");

    let out = ug(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--grid",
        failing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn questions_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("q.jsonl");
    let out = ug(&[
        "questions",
        "--data",
        scenes().to_str().unwrap(),
        "--method",
        "top16+Ens5+EV",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("2 questions written"));
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("\"scene_id\":\"val-0001\""));
}

#[test]
fn subsets_lists_every_tag() {
    let out = ug(&[
        "subsets",
        "--data",
        scenes().to_str().unwrap(),
        "--method",
        "top16+Ens4+EV",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let tags: Vec<&str> = text.lines().skip(1).map(|l| l.split(", ").next().unwrap()).collect();
    assert_eq!(tags, ["all", "ambiguous", "depth"]);
}

#[test]
fn bad_arguments_fail() {
    let out = ug(&[
        "subsets",
        "--data",
        scenes().to_str().unwrap(),
        "--method",
        "top16+Bogus",
    ]);
    assert!(!out.status.success());
    let out = ug(&["evaluate", "--data", "/nonexistent.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent.jsonl"));
    let out = ug(&["evaluate", "--data", scenes().to_str().unwrap(), "--format", "xlsx"]);
    assert!(!out.status.success());
}

#[test]
fn thread_cap_is_validated() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ug"))
            .args(["subsets", "--data", scenes().to_str().unwrap(), "--method", "top16+SA"])
            .env("UG_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("2").status.success());
    assert!(!run("0").status.success());
    assert!(!run("many").status.success());
}

#[test]
fn shipped_default_grid_matches_builtin() {
    let shipped = GridConfig::load(repo().join("configs/default_grid.toml")).unwrap();
    assert_eq!(shipped, GridConfig::default());
}
