use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posetmod")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn hom_of_maximal_ideal_and_square_quotient_is_two() {
    let (u, d) = (data("maximal_ideal_upset.json"), data("square_quotient_downset.json"));
    let out = run(&["hom", "--upset", path_str(&u), "--downset", path_str(&d)]);
    assert_eq!(stdout_json(&out), Value::from(2));
}

#[test]
fn noncommuting_module_fails_verification_with_paths() {
    let out = run(&["verify", path_str(&data("noncommuting_diamond.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("a -> b -> d") && err.contains("a -> c -> d"), "{err}");
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"n\": 2,\n  \"simplices\": [\n").unwrap();
    let out = run(&["verify", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["resolve", "x.json", "--side", "sideways"]).status.code(), Some(2));
}

#[test]
fn worked_filtration_fringe_is_three_by_three() {
    let out = run(&["fringe", path_str(&data("worked_filtration.json"))]);
    let v = stdout_json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["cols"].as_array().unwrap().len(), 3);
    let entries = v["entries"].as_object().unwrap();
    let get = |p: usize, q: usize| entries.get(&format!("({p},{q})")).and_then(|x| x.as_str()).unwrap_or("0");
    // Rows come out as a, c, b.
    let table: Vec<Vec<&str>> = (0..3).map(|p| (0..3).map(|q| get(p, q)).collect()).collect();
    assert_eq!(table, vec![vec!["1", "0", "1"], vec!["0", "-1", "1"], vec!["-1", "1", "1"]]);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let f = data("worked_filtration.json");
    for cmd in [vec!["phom", path_str(&f)], vec!["fringe", path_str(&f)]] {
        let one = run(&[&["--threads", "1"], cmd.as_slice()].concat());
        let four = run(&[&["--threads", "4"], cmd.as_slice()].concat());
        assert!(one.status.success() && four.status.success());
        assert_eq!(one.stdout, four.stdout, "{cmd:?}");
    }
}

#[test]
fn pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let h0 = dir.path().join("h0.json");
    let f = data("worked_filtration.json");
    let out = run(&["phom", path_str(&f), "--dim", "0", "-o", path_str(&h0)]);
    assert!(out.status.success() && out.stdout.is_empty());

    let verified = stdout_json(&run(&["verify", path_str(&h0)]));
    assert_eq!(verified["kind"], "box module");

    let primary = stdout_json(&run(&["primary", path_str(&h0)]));
    assert!(primary.is_object());

    for side in ["upset", "downset"] {
        let res = stdout_json(&run(&["resolve", path_str(&h0), "--side", side]));
        assert!(res.is_object(), "{side}");
    }

    let enc = dir.path().join("enc.json");
    assert!(run(&["encode", path_str(&h0), "-o", path_str(&enc)]).status.success());
    assert_eq!(stdout_json(&run(&["verify", path_str(&enc)]))["kind"], "encoding");
    let fringe = stdout_json(&run(&["fringe", path_str(&enc)]));
    assert_eq!(fringe["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn prime_field_flag_is_accepted() {
    let out = run(&["--field", "p:7", "phom", path_str(&data("worked_filtration.json"))]);
    assert_eq!(stdout_json(&out)["field"], "p:7");
    assert_eq!(run(&["--field", "p:8", "phom", "x.json"]).status.code(), Some(2));
}
