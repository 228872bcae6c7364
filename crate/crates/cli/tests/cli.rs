use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eprbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprbc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_session(path: &Path, lambda: &str, n: &str, seed: &str) {
    let out = eprbc(&[
        "session",
        "--lambda",
        lambda,
        "--n",
        n,
        "--seed",
        seed,
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn honest_session_is_accepted() {
    let out = eprbc(&["session", "--lambda", "1", "--n", "30", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("accepted=true"));
}

#[test]
fn honest_transcript_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    write_session(&path, "0", "25", "3");
    let out = eprbc(&["verify-transcript", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("matches_stored=true"));
}

#[test]
fn flipped_outcome_is_rejected_with_its_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    write_session(&path, "1", "40", "11");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let entries = doc["entries"].as_array_mut().unwrap();
    let entry = entries
        .iter_mut()
        .find(|e| e["family"] == "F1" && e["checked"] == true)
        .expect("a checked F1 index");
    let index = entry["index"].as_u64().unwrap();
    let m1 = entry["m1"].as_i64().unwrap();
    entry["m1"] = Value::from(-m1);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let out = eprbc(&["verify-transcript", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains(&format!("failure at index {index}:")), "{text}");
    assert!(text.contains("matches_stored=false"));
}

#[test]
fn truncated_transcript_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    write_session(&path, "1", "10", "5");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    let out = eprbc(&["verify-transcript", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_transcript_names_the_path() {
    let out = eprbc(&["verify-transcript", "/nonexistent/transcript.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/transcript.json"));
}

#[test]
fn bad_input_exits_two() {
    for args in [
        &["cheat", "--n", "4", "--families", "1,1,1"][..],
        &["cheat", "--n", "4", "--families", "1,-1,0,0,0,1"],
        &["cheat", "--n", "4", "--committed-bit", "1", "--claimed-bit", "1"],
        &["session", "--lambda", "2", "--n", "4"],
        &["session", "--lambda", "1", "--n", "4", "--bogus"],
    ] {
        let out = eprbc(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn epr_attack_always_wins() {
    let out = eprbc(&["attack", "--claimed-bit", "0", "--n", "20", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rate=1.000000"));
}

#[test]
fn stable_reports_match_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let path = dir.path().join(format!("cheat-{threads}.json"));
        let out = eprbc(&[
            "cheat",
            "--n",
            "6",
            "--trials",
            "500",
            "--seed",
            "9",
            "--stable-output",
            "--threads",
            threads,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    let serial = run("1");
    assert_eq!(serial, run("3"));
    let report: Value = serde_json::from_slice(&serial).unwrap();
    assert!(report["runtime_ms"].is_null());
    assert_eq!(report["results"]["trials"], 500);
}

#[test]
fn cheat_writes_csv_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let transcript = dir.path().join("t.json");
    let out = eprbc(&[
        "cheat",
        "--n",
        "4",
        "--trials",
        "50",
        "--csv",
        csv.to_str().unwrap(),
        "--transcript",
        transcript.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().next(), Some("trial_index,accepted,checked_count"));
    assert_eq!(rows.lines().count(), 51);
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&transcript).unwrap()).unwrap();
    assert_eq!(stored["strategy"]["type"], "naive_substitution");
    let verified = eprbc(&["verify-transcript", transcript.to_str().unwrap()]);
    assert!(stdout(&verified).contains("matches_stored=true"));
    assert_ne!(verified.status.code(), Some(2));
}

#[test]
fn batched_sessions_and_experiments_succeed() {
    let out = eprbc(&["session", "--lambda", "0", "--n", "10", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all_accepted=true"));
    let out = eprbc(&["indist", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 7);
    let out = eprbc(&["corr-table", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("within tolerance: true"));
}

#[test]
fn help_states_units() {
    let out = eprbc(&["corr-table", "--help"]);
    assert!(stdout(&out).contains("180°"));
    assert!(stdout(&eprbc(&["--help"])).contains("degrees"));
}
