use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sensorplace::cli::INCOMPLETE_MARKER;

const SCENE: &str = r#"seed = 4

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
h = 0.05

[[obstacles]]
polygon = [[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6]]

[[sensors]]
range = 0.5
width = 1.2
failure = 0.2
position = [0.2, 0.3]
angle = 0.4

[[sensors]]
range = 0.4
width = 1.0
failure = 0.2
boundary = "obstacle:0"
s = 0.3
angle = 5.0

[optimizer]
iterations = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sensorplace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn scene_file(dir: &Path, body: &str) -> String {
    let p = dir.join("scene.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_the_declared_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scene_file(tmp.path(), SCENE);
    let out_dir = tmp.path().join("run");
    let out = run(&["solve", &scene, "--out", out_dir.to_str().unwrap(), "--dump-fields"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = text(&out);
    assert!(line.starts_with("initial=") && line.contains(" final="), "{line}");

    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let expected = [
        "initial.toml",
        "overlap.grid",
        "overlap.pgm",
        "phi_0.grid",
        "phi_1.grid",
        "placement.toml",
        "psi.grid",
        "scenario.normalized.toml",
        "timing.csv",
        "trace.csv",
        "union.grid",
        "union.pgm",
    ];
    assert_eq!(names, expected);
    assert!(!out_dir.join(INCOMPLETE_MARKER).exists());
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 3);

    // the final value printed by solve is what evaluate reports
    let placement = out_dir.join("placement.toml");
    let eval = run(&["evaluate", &scene, placement.to_str().unwrap()]);
    assert!(eval.status.success());
    let final_value = line.trim().rsplit("final=").next().unwrap();
    assert!(text(&eval).contains(&format!("value={final_value}")), "{}", text(&eval));

    // the normalized scenario reproduces the run
    let again = tmp.path().join("again");
    let normalized = out_dir.join("scenario.normalized.toml");
    let out2 = run(&["solve", normalized.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(out2.status.success());
    assert_eq!(text(&out2), line);
    assert_eq!(fs::read_to_string(again.join("trace.csv")).unwrap(), trace);
    assert_eq!(
        fs::read(again.join("placement.toml")).unwrap(),
        fs::read(out_dir.join("placement.toml")).unwrap()
    );
}

#[test]
fn zero_iterations_refines_once() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scene_file(tmp.path(), SCENE);
    let out_dir = tmp.path().join("run");
    let out = run(&["solve", &scene, "--iterations", "0", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(out_dir.join("union.pgm").exists());
}

#[test]
fn maps_and_oracle_check() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scene_file(tmp.path(), SCENE);
    let out_dir = tmp.path().join("run");
    assert!(run(&["solve", &scene, "--iterations", "0", "--out", out_dir.to_str().unwrap()])
        .status
        .success());
    let initial = out_dir.join("initial.toml");
    let maps = tmp.path().join("maps");
    let out = run(&["coverage-map", &scene, initial.to_str().unwrap(), "--out", maps.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(maps.join("union.grid").exists() && maps.join("overlap.pgm").exists());

    let check = tmp.path().join("check");
    let out = run(&["oracle-check", &scene, initial.to_str().unwrap(), "--out", check.to_str().unwrap()]);
    assert!(out.status.success());
    let report = text(&out);
    assert_eq!(report.lines().filter(|l| l.starts_with("sensor=")).count(), 2);
    assert!(report.contains("total agree="));
    assert!(check.join("oracle_mask.pgm").exists());
}

#[test]
fn presets_are_listed() {
    let out = run(&["presets"]);
    assert!(out.status.success());
    let listing = text(&out);
    for name in ["fig4", "fig5", "fig8-3d", "pentagon-sym", "store-p05"] {
        assert!(listing.contains(name), "{name} missing from {listing}");
    }
}

#[test]
fn failures_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(run(&["evaluate", missing.to_str().unwrap(), "x.toml"]).status.code(), Some(4));

    let bad_p = scene_file(tmp.path(), &SCENE.replacen("failure = 0.2", "failure = 1.5", 1));
    let out = run(&["solve", &bad_p, "--out", tmp.path().join("a").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failure"));

    let inside = scene_file(tmp.path(), &SCENE.replace("position = [0.2, 0.3]", "position = [0.5, 0.5]"));
    let out_dir = tmp.path().join("b");
    let out = run(&["solve", &inside, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // rejected before the run starts: no result artifacts
    assert!(!out_dir.join("placement.toml").exists());

    assert_eq!(run(&["solve", "preset:nowhere"]).status.code(), Some(2));
    let broken = scene_file(tmp.path(), "[domain\n");
    assert_eq!(run(&["evaluate", &broken, "x.toml"]).status.code(), Some(2));
}
