//! End-to-end tests of the `iqc-lmi` binary: exit codes, file outputs,
//! and the JSON report format, driven through `std::process::Command`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DMatrix;

use iqc_core::lti::StateSpace;
use iqc_core::netex::{covering_set, CoveringKind, CyclicNetwork};
use iqc_core::problem::Plant;
use iqc_core::valueset::ValueSet;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iqc-lmi"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout should be JSON")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn gain_plant(g: f64) -> Plant {
    Plant::without_perf(
        StateSpace::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[g]),
            DMatrix::from_row_slice(1, 1, &[0.0]),
        )
        .unwrap(),
    )
}

fn unit_disk() -> ValueSet {
    ValueSet::repeated_quadratic(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        1,
        false,
    )
    .unwrap()
}

#[test]
fn example_certifies_and_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "example",
        "--nu",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
        "--samples",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("certified: energy-gain bound 0.654"), "{text}");

    for name in [
        "report.json",
        "certificate.json",
        "problem.dat-s",
        "eigenvalues.csv",
        "boundary.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["certified"], serde_json::Value::Bool(true));
    let raw = report["gamma_raw"].as_f64().unwrap();
    assert!((raw - 0.654124).abs() < 1e-3, "gamma_raw = {raw}");
}

#[test]
fn example_disk_covering_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "example",
        "--nu",
        "0",
        "--test",
        "disk",
        "--out",
        dir.path().to_str().unwrap(),
        "--samples",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("not certified"), "{text}");
}

#[test]
fn example_rejects_an_unknown_covering_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "example",
        "--nu",
        "0",
        "--test",
        "wedge",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(!out.stderr.is_empty());
}

#[test]
fn analyze_certifies_a_small_loop_gain() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    let set = dir.path().join("set.json");
    let recipe = dir.path().join("recipe.json");
    write_json(&plant, &gain_plant(0.5));
    write_json(&set, &unit_disk());
    fs::write(&recipe, r#"{"test_kind": "StaticRepeated"}"#).unwrap();

    let cert_dir = dir.path().join("cert");
    let out = run(&[
        "analyze",
        "--plant",
        plant.to_str().unwrap(),
        "--set",
        set.to_str().unwrap(),
        "--recipe",
        recipe.to_str().unwrap(),
        "--out",
        cert_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = stdout_json(&out);
    assert_eq!(report["certified"], serde_json::Value::Bool(true));
    assert!(report["residual_floor"].as_f64().unwrap() >= -1e-8);
    assert!(cert_dir.join("certificate.json").exists());
    assert!(cert_dir.join("problem.dat-s").exists());
}

#[test]
fn analyze_reports_a_large_loop_gain_as_uncertified() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    let set = dir.path().join("set.json");
    let recipe = dir.path().join("recipe.json");
    write_json(&plant, &gain_plant(2.0));
    write_json(&set, &unit_disk());
    fs::write(&recipe, r#"{"test_kind": "StaticRepeated"}"#).unwrap();

    let out = run(&[
        "analyze",
        "--plant",
        plant.to_str().unwrap(),
        "--set",
        set.to_str().unwrap(),
        "--recipe",
        recipe.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let report = stdout_json(&out);
    assert_eq!(report["certified"], serde_json::Value::Bool(false));
    assert_eq!(report["gamma"], serde_json::Value::Null);
}

#[test]
fn analyze_reproduces_the_network_example_gain_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    let set = dir.path().join("set.json");
    let recipe = dir.path().join("recipe.json");
    let aux = CyclicNetwork::example().auxiliary_plant();
    write_json(&plant, &aux);
    write_json(
        &set,
        &covering_set(CoveringKind::Intersection, aux.k()).unwrap(),
    );
    fs::write(
        &recipe,
        r#"{"test_kind": "DynIntersection", "filter": {"alpha": 2.0, "nu": 0, "family": "repeated"}}"#,
    )
    .unwrap();

    let out = run(&[
        "analyze",
        "--plant",
        plant.to_str().unwrap(),
        "--set",
        set.to_str().unwrap(),
        "--recipe",
        recipe.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = stdout_json(&out);
    let gamma = report["gamma"].as_f64().unwrap();
    assert!((gamma - 0.654124).abs() < 1e-3, "gamma = {gamma}");
}

#[test]
fn analyze_errors_on_a_missing_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.json");
    let recipe = dir.path().join("recipe.json");
    write_json(&set, &unit_disk());
    fs::write(&recipe, r#"{"test_kind": "StaticRepeated"}"#).unwrap();

    let out = run(&[
        "analyze",
        "--plant",
        dir.path().join("nope.json").to_str().unwrap(),
        "--set",
        set.to_str().unwrap(),
        "--recipe",
        recipe.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot read"), "{err}");
}

#[test]
fn analyze_errors_on_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    let set = dir.path().join("set.json");
    let recipe = dir.path().join("recipe.json");
    fs::write(&plant, "{ not json").unwrap();
    write_json(&set, &unit_disk());
    fs::write(&recipe, r#"{"test_kind": "StaticRepeated"}"#).unwrap();

    let out = run(&[
        "analyze",
        "--plant",
        plant.to_str().unwrap(),
        "--set",
        set.to_str().unwrap(),
        "--recipe",
        recipe.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot parse"), "{err}");
}
