//! End-to-end runs of the `hydrosim` binary.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{DEFAULT_SCENARIO, SKELETON_SCENARIO};

const BIN: &str = env!("CARGO_BIN_EXE_hydrosim");
const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(GOLDEN).join(name)).unwrap()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["default.toml", "skeleton.toml"] {
        let path = scenarios().join(name);
        let out = run(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
    }
}

#[test]
fn config_errors_exit_one_and_are_distinguishable() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown.toml",
            DEFAULT_SCENARIO.replace("[pump]\n", "[pump]\nefficiency = 0.9\n"),
            "unknown key `pump.efficiency` at line",
        ),
        (
            "syntax.toml",
            DEFAULT_SCENARIO.replacen("density = 870.0", "density = = 870.0", 1),
            "syntax error at line 8",
        ),
        (
            "invalid.toml",
            DEFAULT_SCENARIO.replace("dt = 0.001", "dt = 0.01"),
            "invalid `sim.dt` at line",
        ),
        (
            "schema.toml",
            DEFAULT_SCENARIO.replace("density = 870.0", "density = \"oil\""),
            "schema error at line 8",
        ),
    ];
    for (name, text, expected) in cases {
        let path = write_config(tmp.path(), name, &text);
        for args in [
            vec!["validate", "--config", &path],
            vec!["compare", "--config", &path, "--out", tmp.path().to_str().unwrap()],
        ] {
            let out = run(&args);
            assert_eq!(code(&out), 1, "{name}");
            assert!(stderr(&out).contains(expected), "{name}: {}", stderr(&out));
        }
    }
    let out = run(&["validate", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(code(&out), 1);
    let out = run(&["simulate", "--config", "x.toml", "--circuit", "xyz", "--out", "o"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_is_byte_identical_and_matches_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios().join("default.toml");
    for kind in ["pdcv", "pfcv"] {
        let a = tmp.path().join(format!("{kind}_a"));
        let b = tmp.path().join(format!("{kind}_b"));
        for dir in [&a, &b] {
            let out = run(&[
                "simulate",
                "--config",
                config.to_str().unwrap(),
                "--circuit",
                kind,
                "--out",
                dir.to_str().unwrap(),
            ]);
            assert_eq!(code(&out), 0, "{}", stderr(&out));
        }
        assert_eq!(files(&a), files(&b));
        let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
        assert_eq!(manifest, golden(&format!("simulate_{kind}_manifest.json")));
    }
}

#[test]
fn compare_is_byte_identical_and_matches_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios().join("default.toml");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = run(&["compare", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(files(&a), files(&b));
    assert_eq!(fs::read_to_string(a.join("comparison.txt")).unwrap(), golden("comparison.txt"));
    assert_eq!(fs::read_to_string(a.join("manifest.json")).unwrap(), golden("compare_manifest.json"));

    // both logs carry the same scenario digest
    let header = |name: &str| {
        let text = fs::read_to_string(a.join(name)).unwrap();
        let first = text.lines().next().unwrap().to_string();
        first.split("config_digest=").nth(1).unwrap().to_string()
    };
    assert_eq!(header("pdcv.csv"), header("pfcv.csv"));
}

#[test]
fn manifest_timestamp_follows_source_date_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios().join("default.toml");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--circuit",
        "pfcv",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let manifest = fs::read_to_string(tmp.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"timestamp\": \"2023-11-14T22:13:20Z\""));
}

#[test]
fn blowup_exits_two_with_failure_time() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DEFAULT_SCENARIO
        .replace("time_constant = 0.01", "time_constant = 5.0")
        .replace("dt = 0.001", "dt = 1.0")
        .replace("log_decimation = 10", "log_decimation = 1");
    let path = write_config(tmp.path(), "unstable.toml", &text);
    for kind in ["pdcv", "pfcv"] {
        let out = run(&["simulate", "--config", &path, "--circuit", kind, "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{}", stderr(&out));
        assert!(stderr(&out).contains("numerical blow-up at t = "), "{}", stderr(&out));
    }
    let out = run(&["compare", "--config", &path, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_duration_compare_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DEFAULT_SCENARIO.replace("duration = 18.0", "duration = 0.0");
    let path = write_config(tmp.path(), "empty.toml", &text);
    let out = run(&["compare", "--config", &path, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn calibrate_reproduces_shipped_default() {
    let tmp = tempfile::tempdir().unwrap();
    let skeleton = write_config(tmp.path(), "skeleton.toml", SKELETON_SCENARIO);
    let out_path = tmp.path().join("calibrated.toml");
    for _ in 0..2 {
        let out = run(&[
            "calibrate",
            "--config",
            &skeleton,
            "--target",
            "8.54",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert_eq!(fs::read_to_string(&out_path).unwrap(), DEFAULT_SCENARIO);
    }
}

#[test]
fn calibrate_reaches_near_zero_saving_on_flat_load() {
    let tmp = tempfile::tempdir().unwrap();
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/flat_load.toml");
    let cal = tmp.path().join("cal.toml");
    let out = run(&[
        "calibrate",
        "--config",
        input.to_str().unwrap(),
        "--target",
        "0.1",
        "--out",
        cal.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let dir = tmp.path().join("cmp");
    let out = run(&["compare", "--config", cal.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("comparison.json")).unwrap()).unwrap();
    let saving = record["saving_percent"].as_f64().unwrap();
    assert!((-0.9..=1.1).contains(&saving), "saving {saving}");

    // the relief setting sits just above the 4.5 MPa load pressure
    let cfg = hydrosim::config::parse_config(&fs::read_to_string(&cal).unwrap()).unwrap();
    let p = cfg.params.relief.cracking_pressure;
    assert!(p > 4.5e6 && p < 4.6e6, "relief {p}");
}

#[test]
fn calibrate_infeasible_and_bad_targets() {
    let tmp = tempfile::tempdir().unwrap();
    let skeleton = write_config(tmp.path(), "skeleton.toml", SKELETON_SCENARIO);
    let dest = tmp.path().join("never.toml");
    let out = run(&["calibrate", "--config", &skeleton, "--target", "0.1", "--out", dest.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("calibration infeasible"));
    assert!(!dest.exists());

    for target in ["0", "50", "-3"] {
        let out = run(&["calibrate", "--config", &skeleton, "--target", target, "--out", dest.to_str().unwrap()]);
        assert_eq!(code(&out), 1, "target {target}");
    }
}
