use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(eps: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(format!("perturbed_pair_eps_{eps}.json"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = Command::new(env!("CARGO_BIN_EXE_ptsm"))
        .args(args)
        .env_remove("PTSM_MAX_DEPTH")
        .output()
        .unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, out)
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn validate_accepts_fixture() {
    let (code, r, _) = run(&["validate", "-s", &fixture("1_4")]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["states"], 10);
    assert_eq!(r["outputs"]["components"], 2);
}

#[test]
fn validate_rejects_float_weight_and_dangling_target() {
    let dir = tempfile::tempdir().unwrap();
    let float = write_temp(
        &dir,
        "float.json",
        r#"{"atoms":[],"states":[{"label":"a","successors":{"a":"0.5"}}]}"#,
    );
    let (code, r, _) = run(&["validate", "-s", &float]);
    assert_eq!(code, 1);
    assert_eq!(r["status"], "input_error");
    let msg = r["error"].as_str().unwrap();
    assert!(msg.contains("states[0]"), "{msg}");

    let dangling = write_temp(
        &dir,
        "dangling.json",
        r#"{"atoms":[],"states":[{"label":"a","successors":{"b":"1"}}]}"#,
    );
    let (code, r, _) = run(&["validate", "-s", &dangling]);
    assert_eq!(code, 1);
    assert!(r["error"].as_str().unwrap().contains("does not exist"));
}

#[test]
fn eval_modal_and_first_order() {
    let f = fixture("1_4");
    let (code, r, _) = run(&["eval", "-s", &f, "--modal", "<>[]0", "--state", "x1"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["value"], "1/2");

    let (code, r, _) = run(&["eval", "-s", &f, "--modal", "3/7"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["values"]["y4"]["value"], "3/7");

    let (code, r, _) = run(&["eval", "-s", &f, "--fo", "x:<>y. y:<>z. 1", "--env", "x=x1"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["value"], "1/2");

    let (code, r, _) = run(&["eval", "-s", &f, "--fo", "x:<>y. ~(y = z)", "--env", "x=x"]);
    assert_eq!(code, 1);
    assert!(r["error"].as_str().unwrap().contains('z'));
}

#[test]
fn distance_replays_fixture_for_every_method() {
    let f = fixture("1_4");
    for m in ["w", "k", "g"] {
        let (code, r, _) = run(&[
            "distance", "-s", &f, "-n", "3", "--method", m, "--pair", "x,y",
        ]);
        assert_eq!(code, 0, "{m}");
        assert_eq!(r["outputs"]["matrix"]["x|y"], "3/16", "{m}");
    }
    let (code, r, _) = run(&["distance", "-s", &f, "-n", "0"]);
    assert_eq!(code, 0);
    let zeros = r["outputs"]["matrix"].as_object().unwrap();
    assert_eq!(zeros.len(), 45);
    assert!(zeros.values().all(|v| v == "0"));

    let (code, r, _) = run(&["distance", "-s", &f, "-n", "3", "--assert-coincide"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["coincide"], true);
}

#[test]
fn reports_are_reproducible_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let f = fixture("1_10");
    let args = ["distance", "-s", &f, "-n", "3", "--method", "k"];
    let (_, _, first) = run(&args);
    let (_, _, second) = run(&args);
    assert_eq!(first.stdout, second.stdout);
    let mut with_file = args.to_vec();
    let p = out.display().to_string();
    with_file.extend(["--json", &p]);
    let (code, r, _) = run(&with_file);
    assert_eq!(code, 0);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(saved, r);
    assert_eq!(r["outputs"]["matrix"]["x|y"], "9/100");
}

#[test]
fn depth_cap_is_enforced() {
    let f = fixture("1_4");
    let (code, _, _) = run(&["distance", "-s", &f, "-n", "9"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["distance", "-s", &f, "-n", "3", "--max-depth", "2"]);
    assert_eq!(code, 1);
    let out = Command::new(env!("CARGO_BIN_EXE_ptsm"))
        .args(["distance", "-s", &f, "-n", "3"])
        .env("PTSM_MAX_DEPTH", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn witness_certifies_the_gap() {
    let f = fixture("1_4");
    let (code, r, _) = run(&[
        "witness", "-s", &f, "--a", "x", "--b", "y", "-n", "3", "--delta", "1/32",
    ]);
    assert_eq!(code, 0);
    let gap = ptsm_core::rational::parse(r["outputs"]["gap"]["value"].as_str().unwrap()).unwrap();
    assert!(gap >= ptsm_core::rational::ratio(3, 16) - ptsm_core::rational::ratio(1, 32));

    let (code, r, _) = run(&[
        "witness", "-s", &f, "--a", "x", "--b", "x", "-n", "3", "--delta", "1/32",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["gap"]["value"], "0");

    let (code, _, _) = run(&[
        "witness", "-s", &f, "--a", "x", "--b", "y", "-n", "3", "--delta", "0",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn game_synth_verify_and_refuse() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json").display().to_string();
    let f = fixture("1_4");
    let (code, r, _) = run(&[
        "game",
        "synth",
        "-s",
        &f,
        "--a",
        "x",
        "--b",
        "y",
        "-n",
        "3",
        "--epsilon",
        "3/16",
        "--out",
        &cert,
    ]);
    assert_eq!(code, 0);
    let plan = r["outputs"]["certificate"]["move"].as_array().unwrap();
    assert_eq!(plan.len(), 3);

    let (code, r, _) = run(&["game", "verify", "-s", &f, "--certificate", &cert]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["valid"], true);

    let text = std::fs::read_to_string(&cert).unwrap();
    let tampered = text.replacen("\"epsilon\": \"3/16\"", "\"epsilon\": \"1/16\"", 1);
    assert_ne!(text, tampered);
    let bad = write_temp(&dir, "bad.json", &tampered);
    let (code, r, _) = run(&["game", "verify", "-s", &f, "--certificate", &bad]);
    assert_eq!(code, 2);
    assert_eq!(r["outputs"]["valid"], false);

    let (code, r, _) = run(&[
        "game",
        "synth",
        "-s",
        &f,
        "--a",
        "x",
        "--b",
        "y",
        "-n",
        "3",
        "--epsilon",
        "187/1000",
    ]);
    assert_eq!(code, 2);
    assert_eq!(r["outputs"]["winnable"], false);

    let (code, r, _) = run(&["game", "value", "-s", &f, "--a", "x", "--b", "y", "-n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["value"]["value"], "3/16");
}

#[test]
fn transforms() {
    let f = fixture("1_4");
    let (code, r, _) = run(&["transform", "restrict", "-s", &f, "--state", "x", "-k", "1"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["states"], 3);

    let (code, r, _) = run(&["transform", "unravel", "-s", &f, "--state", "x", "-n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["root"], "x");

    let (code, r, _) = run(&["transform", "union", "-s", &f, "--system-b", &fixture("0")]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["offsets"], serde_json::json!([0, 10]));

    let (code, r, _) = run(&["transform", "translate", "--modal", "<>p"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["formula"], "x:<>y. p(y)");
}

#[test]
fn suite_passes_detects_faults_and_warns_on_zero_trials() {
    let small = [
        "suite",
        "--seed",
        "7",
        "--max-states",
        "4",
        "-n",
        "2",
        "--trials",
        "3",
    ];
    let (code, r, _) = run(&small);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["outputs"]["properties"].as_array().unwrap().len(), 7);

    let mut faulty = small.to_vec();
    faulty.extend(["--inject-fault", "skip-atom-term"]);
    let (code, r, _) = run(&faulty);
    assert_eq!(code, 2);
    let coincidence = r["outputs"]["properties"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "coincidence")
        .unwrap();
    assert_eq!(coincidence["passed"], false);
    assert!(coincidence["counterexample"].is_object());

    let (code, r, _) = run(&["suite", "--max-states", "3", "-n", "1", "--trials", "0"]);
    assert_eq!(code, 0);
    assert_eq!(r["outputs"]["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn usage_errors_exit_with_input_code() {
    let (code, _, _) = run(&["distance"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["validate", "-s", "/nonexistent/file.json"]);
    assert_eq!(code, 1);
}
