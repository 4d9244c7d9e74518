use std::path::{Path, PathBuf};
use std::process::Command;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_tenfinger")).args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replaying_the_session_fixture_reproduces_the_transcript() {
    let lex = data("english-10k.txt");
    let out = run(&[
        "replay",
        "--messages",
        s(&data("fixtures/session10.messages.jsonl")),
        "--phrases",
        s(&data("phrases.txt")),
        "--lexicon",
        s(&lex),
    ]);
    assert_eq!(out, std::fs::read_to_string(data("fixtures/session10.expected.txt")).unwrap());
}

#[test]
fn touch_log_replay_commits_eligible() {
    let out = run(&["replay", "--log", s(&data("fixtures/eligible.jsonl")), "--lexicon", s(&data("english-10k.txt"))]);
    let last: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(last["text"], "eligible");
}

#[test]
fn synth_decode_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lex = data("english-10k.txt");
    let corpus = dir.path().join("corpus.tsv");
    let decoded = dir.path().join("decoded.jsonl");
    let report = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    run(&["synth", "--lexicon", s(&lex), "--size", "1000", "--seed", "3", "--out", s(&corpus), "--touches"]);
    let tsv = std::fs::read_to_string(&corpus).unwrap();
    assert_eq!(tsv.lines().count(), 1001, "header plus 1000 pairs");
    for backend in ["ngram", "bayes"] {
        run(&["decode", "--backend", backend, "--corpus", s(&corpus), "--out", s(&decoded), "--lexicon", s(&lex)]);
        assert_eq!(std::fs::read_to_string(&decoded).unwrap().lines().count(), 1000);
        run(&["eval", "--decoded", s(&decoded), "--corpus", s(&corpus), "--out", s(&report), "--csv", s(&csv)]);
        let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        let em = &r["report"]["overall"]["em"];
        let (e1, e5) = (em["1"].as_f64().unwrap(), em["5"].as_f64().unwrap());
        assert!(0.5 < e1 && e1 <= e5 && e5 <= 1.0, "{backend}: EM@1 {e1}, EM@5 {e5}");
        assert!(std::fs::read_to_string(&csv).unwrap().starts_with("table,group,n,em1,em2,em3,em5,avg_ed"));
    }
}

#[test]
fn interval_study_on_the_two_user_fixture() {
    let out = run(&["interval-study", "--logs", s(&data("fixtures/intervals.jsonl")), "--reps", "2000"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["fraction"].as_f64().unwrap(), 3.0 / 9.0);
    assert_eq!(v["result"]["gaps"], 9);
}

#[test]
fn simulated_eligible_trace_matches_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eligible.jsonl");
    run(&["simulate", "eligible", "--out", s(&out)]);
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(data("fixtures/eligible.jsonl")).unwrap());
}
