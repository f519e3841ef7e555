use std::process::Command;

use serde_json::Value;

use microcover::cli;
use microcover::covers::{Constraint, CoverAttempt};
use microcover::exact::{Interval, Rational};
use microcover::omega::OmegaSet;

fn run(args: &[&str]) -> (i32, Value) {
    let out = cli::run(std::iter::once("microcover").chain(args.iter().copied()));
    let json = if out.artifact.is_empty() { Value::Null } else { serde_json::from_slice(&out.artifact).unwrap() };
    (out.code, json)
}

fn write_cover(dir: &tempfile::TempDir, name: &str, cover: &CoverAttempt) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(cover).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn envelope_fields() {
    let (code, v) = run(&["--seed", "4", "spacing", "--depth", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "microcover/1");
    assert_eq!(v["command"], "spacing");
    assert_eq!(v["seed"], 4);
    assert_eq!(v["exit_code"], 0);
    assert!(v["config"].is_object() && v["result"].is_object());
}

#[test]
fn spacing_places_level_zero_first() {
    let (code, v) = run(&["spacing", "--depth", "2", "--A", "(w+1)", "--count", "3"]);
    assert_eq!(code, 0);
    let text = v["result"].to_string();
    // the first three placements use the level-0 terminal 𝒦 nodes of length 1/7
    assert!(text.contains(r#""den":"7""#), "{text}");
}

#[test]
fn invalid_index_set_is_a_precondition_failure() {
    // 0 ∈ A is not allowed at m = 0
    let (code, v) = run(&["spacing", "--A", "w"]);
    assert_eq!(code, 1);
    assert!(v["result"]["error"]["message"].as_str().unwrap().contains("m = 0"));
    let (code, _) = run(&["spacing", "--A", "not a set"]);
    assert_eq!(code, 1);
}

#[test]
fn density_reports_exact_and_estimate() {
    let (code, v) = run(&["density", "--set", "1+4w", "--window", "4096", "--samples", "16"]);
    assert_eq!(code, 0);
    let r = &v["result"]["report"];
    assert_eq!(r["exact_density"]["num"], "1");
    assert_eq!(r["exact_density"]["den"], "4");
}

#[test]
fn check_cover_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let eps = Rational::frac(1, 7);
    let good = CoverAttempt::new(
        OmegaSet::finite([0, 2]),
        Constraint::geometric(eps.clone()),
        4,
        [
            (0, Interval::with_length(Rational::zero(), &eps)),
            (2, Interval::with_length(Rational::frac(1, 2), &eps.pow(3))),
        ],
    );
    let path = write_cover(&dir, "good.json", &good);
    let (code, v) = run(&["check-cover", "--file", &path, "--region", "0,1/7"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["coverage"]["covered"], true);

    let bad = CoverAttempt::new(
        OmegaSet::finite([1]),
        Constraint::geometric(eps.clone()),
        4,
        [(1, Interval::with_length(Rational::zero(), &eps))],
    );
    let path = write_cover(&dir, "bad.json", &bad);
    let (code, v) = run(&["check-cover", "--file", &path]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["violations"], serde_json::json!([1]));

    // within a few parts in 10^20 of 7^-ln 7: undecidable at 4 bits, decided at the default cap
    let near = Rational::new(2_267_332_154_036_268_097u64, 10u128.pow(20)).unwrap();
    let tie = CoverAttempt::new(
        OmegaSet::all(),
        Constraint::logarithmic(eps.clone()),
        100,
        [(5, Interval::with_length(Rational::zero(), &near))],
    );
    let path = write_cover(&dir, "tie.json", &tie);
    let (code, v) = run(&["--precision-cap", "4", "check-cover", "--file", &path]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["indeterminate"], serde_json::json!([5]));
    let (code, _) = run(&["check-cover", "--file", &path]);
    assert_ne!(code, 2);
}

#[test]
fn build_x_reports_truncation() {
    let (code, v) = run(&["build-x", "--depth", "2", "--cutoff", "100", "--verify-level", "1"]);
    assert_eq!(code, 0);
    let x = &v["result"]["x"];
    assert!(!x["truncation"].as_array().unwrap().is_empty());
    assert_eq!(v["result"]["microscopic"]["coverage"]["covered"], true);
    let (code, _) = run(&["build-x", "--depth", "3", "--cutoff", "2"]);
    assert_eq!(code, 1);
}

#[test]
fn ln_reindex_window_too_small() {
    let (code, v) = run(&["reindex", "ln", "--count", "200", "--m", "2", "--window", "100"]);
    assert_eq!(code, 3);
    assert_eq!(v["result"]["error"]["kind"], "window-insufficient");
}

#[test]
fn challenge_summary() {
    let (code, v) = run(&["--seed", "2", "challenge", "--trials", "6", "--depth", "5", "--budget", "1/5"]);
    assert_eq!(code, 0);
    let s = &v["result"]["summary"];
    assert_eq!(s["trials"], 6);
    assert_eq!(s["witnesses"], 6);
    assert_eq!(s["guaranteed_failures"], 0);
}

#[test]
fn binary_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let status = Command::new(env!("CARGO_BIN_EXE_microcover"))
        .args(["density", "--set", "{1,2}", "--window", "64", "--samples", "4", "--output"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "density");

    let status = Command::new(env!("CARGO_BIN_EXE_microcover")).args(["spacing", "--A", "w"]).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--seed", "11", "challenge", "--trials", "5", "--depth", "4", "--strategy", "random"];
    let a = cli::run(std::iter::once("microcover").chain(args));
    let b = cli::run(std::iter::once("microcover").chain(args));
    assert_eq!(a.artifact, b.artifact);
    let other = cli::run(std::iter::once("microcover").chain(["--seed", "12"]).chain(args[2..].iter().copied()));
    assert_ne!(a.artifact, other.artifact);
}
