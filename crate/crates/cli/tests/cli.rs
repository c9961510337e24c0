use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boolean-spheres"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn meta(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "gamma = 30.0\nseed = 5\nepsilon = 0.02\n").unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", "run.toml", "--seed", "7", "--out", "z.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = meta(&dir.path().join("z.meta.json"));
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["intensity"], 30.0);
    assert_eq!(m["config"]["reach"], 0.02);
    assert_eq!(m["config"]["window"], "0:0:1:1");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn configuration_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "gama = 30.0\n").unwrap();
    for args in [
        vec!["simulate", "--radius-dist", "uniform:0.1:0.05"],
        vec!["simulate", "--config", "bad.toml"],
        vec!["simulate", "--config", "missing.toml"],
        vec!["estimate", "--gauge", "segment:+z"],
        vec!["estimate", "--method", "limit-spherical", "--gauge", "segment:+x"],
        vec!["variance", "--gauge", "segment:-y"],
        vec!["table", "--reps", "0"],
        vec!["validate", "--suites", "nonsense"],
        vec!["frobnicate"],
    ] {
        let out = run(dir.path(), &args);
        assert_eq!(
            out.status.code(),
            Some(3),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let skipped = run(dir.path(), &["validate", "--reps", "0"]);
    assert_eq!(skipped.status.code(), Some(2));
    let m = meta(&dir.path().join("validation.meta.json"));
    assert_eq!(m["outputs"]["status"], "skipped");
    let ok = run(
        dir.path(),
        &[
            "validate",
            "--reps",
            "5",
            "--suites",
            "structural,quadrature-identity",
            "--grid-h",
            "0.02",
        ],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let csv = std::fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert!(csv.starts_with("suite,status,check,passed,observed,expected,tolerance\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(3) == Some("true")));
}

#[test]
fn stored_realization_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(dir.path(), &["simulate", "--seed", "4", "--out", "z.csv"]);
    assert!(sim.status.success());
    let from_file = run(
        dir.path(),
        &["estimate", "--input", "z.csv", "--grid-h", "0.01", "--out", "a.csv"],
    );
    assert!(
        from_file.status.success(),
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    let direct = run(
        dir.path(),
        &["estimate", "--seed", "4", "--grid-h", "0.01", "--out", "b.csv"],
    );
    assert!(direct.status.success());
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        meta(&dir.path().join("a.meta.json"))["outputs"][0]["ks"],
        meta(&dir.path().join("b.meta.json"))["outputs"][0]["ks"]
    );
}

#[test]
fn sequential_table_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "table",
            "--reps",
            "4",
            "--grid-h",
            "0.025",
            "--seed",
            "9",
            "--sequential",
            "--out",
            out,
        ]
    };
    for out in ["one/t.csv", "two/t.csv"] {
        let o = run(dir.path(), &args(out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["t.csv", "t.replications.csv"] {
        let a = std::fs::read(dir.path().join("one").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("two").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let (a, b) = (
        meta(&dir.path().join("one/t.meta.json")),
        meta(&dir.path().join("two/t.meta.json")),
    );
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(a["outputs"], b["outputs"]);
    let header = std::fs::read_to_string(dir.path().join("one/t.csv")).unwrap();
    assert!(header.starts_with(
        "estimator,spherical_ks,spherical_ks_se,linear_ks,linear_ks_se,spherical_cvm1000,spherical_cvm1000_se,linear_cvm1000,linear_cvm1000_se\n"
    ));
    assert_eq!(header.lines().count(), 13);
}

#[test]
fn variance_writes_documented_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["variance", "--qmc-points", "1024", "--qmc-shifts", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("variance.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "sigma2",
            "tau1_part",
            "tau2_part",
            "sigma_g2",
            "sigma_g2_direct",
            "g_c",
            "beta"
        ]
    );
    let m = meta(&dir.path().join("variance.meta.json"));
    assert!(m["outputs"]["sigma2"]["sigma2"].as_f64().unwrap() > 0.0);
}
