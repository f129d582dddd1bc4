use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const P3_ENDS: &str = r#"{"n_bound":3,"nodes":3,"edges":[{"u":0,"pu":0,"v":1,"pv":0},{"u":1,"pu":1,"v":2,"pv":0}],"occupied":[0,2]}"#;
const K2_BOTH: &str = r#"{"n_bound":2,"nodes":2,"edges":[{"u":0,"pu":0,"v":1,"pv":0}],"occupied":[0,1]}"#;
const RING3: &str = r#"{"n_bound":3,"nodes":3,"edges":[{"u":0,"pu":0,"v":1,"pv":1},{"u":1,"pu":0,"v":2,"pv":1},{"u":2,"pu":0,"v":0,"pv":1}],"occupied":[0,1,2]}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_anonelect"));
    c.env_remove("ANONELECT_BUDGET");
    c
}

fn graph(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn check_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let ring = graph(dir.path(), "ring.json", RING3);
    assert_eq!(json(&bin().arg("check").arg(&p3).output().unwrap())["verdict"], "eligible");
    let r = json(&bin().arg("check").arg(&ring).output().unwrap());
    assert_eq!(r["verdict"], "not-eligible");
    assert_eq!(r["clause_alpha"], false);
}

#[test]
fn text_format_is_plain() {
    let dir = tempfile::tempdir().unwrap();
    let ring = graph(dir.path(), "ring.json", RING3);
    let out = bin().args(["--format", "text", "check"]).arg(&ring).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("not-eligible\n"));
}

#[test]
fn views_lists_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let r = json(&bin().arg("views").arg(&p3).args(["--depth", "1"]).output().unwrap());
    let nodes = r["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 3);
    // the ends reach the middle through different ports
    assert_eq!(nodes[0]["code"], "(1,0,0,0,0,0)");
    assert_eq!(nodes[2]["code"], "(1,0,1,0,1,0)");
    assert!(nodes[1]["code"].as_str().unwrap().starts_with("(2,"));
    assert_ne!(nodes[0]["enhanced_class"], nodes[1]["enhanced_class"]);
}

#[test]
fn elect_agrees_or_diagnoses() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let k2 = graph(dir.path(), "k2.json", K2_BOTH);
    let r = json(&bin().arg("elect").arg(&p3).output().unwrap());
    assert_eq!(r["consistent"], true);
    assert_eq!(r["agents"][0]["leader_node"], r["agents"][1]["leader_node"]);
    let r = json(&bin().arg("elect").arg(&k2).output().unwrap());
    assert_eq!(r["consistent"], false);
    assert_eq!(r["diagnosis"], "duplicate complete identifiers");
}

#[test]
fn simulate_with_zero_budget_only_wakes() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let trace = dir.path().join("trace.jsonl");
    let r = json(&bin().arg("simulate").arg(&p3).args(["--max-ticks", "0", "--trace-out"]).arg(&trace).output().unwrap());
    assert_eq!(r["status"], "budget-stopped");
    let lines: Vec<Value> =
        std::fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l["schema"] == 1));
    assert_eq!(lines[0]["event"], "wake");
    assert_eq!(lines[2]["event"], "stopped");
}

#[test]
fn simulate_elects_on_two_nodes_and_traces_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = graph(dir.path(), "k2.json", K2_BOTH);
    let run = |name: &str| {
        let trace = dir.path().join(name);
        let r = json(
            &bin().arg("simulate").arg(&k2).args(["--scheduler", "random", "--seed", "3", "--trace-out"]).arg(&trace).output().unwrap(),
        );
        (r, std::fs::read(&trace).unwrap())
    };
    let (a, ta) = run("a.jsonl");
    let (b, tb) = run("b.jsonl");
    assert_eq!(a["status"], "elected");
    // twins cannot agree on a leader
    assert_eq!(a["consistent"], false);
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn budget_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let r = json(&bin().arg("simulate").arg(&p3).env("ANONELECT_BUDGET", "max_ticks=5").output().unwrap());
    assert_eq!(r["ticks"], 5);
    let r = json(
        &bin().arg("simulate").arg(&p3).args(["--max-ticks", "7"]).env("ANONELECT_BUDGET", "max_ticks=5").output().unwrap(),
    );
    assert_eq!(r["ticks"], 7);
    let out = bin().arg("simulate").arg(&p3).env("ANONELECT_BUDGET", "ticks=5").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = graph(dir.path(), "bad.json", r#"{"n_bound":2,"nodes":2,"edges":[],"occupied":[0]}"#);
    assert_eq!(bin().arg("check").arg(&bad).output().unwrap().status.code(), Some(2));
    let p3 = graph(dir.path(), "p3.json", P3_ENDS);
    let out = bin().arg("simulate").arg(&p3).args(["--scheduler", "fair"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corpus_streams_documents() {
    let lines = |args: &[&str]| {
        let out = bin().arg("corpus").args(args).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).count()
    };
    assert_eq!(lines(&["--max-nodes", "2"]), 2);
    assert_eq!(lines(&["--max-nodes", "2", "--no-dedup"]), 3);
    assert_eq!(lines(&["--max-nodes", "2", "--min-agents", "2"]), 1);
    let out = bin().args(["corpus", "--max-nodes", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_on_three_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["verify", "--max-nodes", "3", "--repro-dir"]).arg(dir.path().join("repro")).output().unwrap();
    let r = json(&out);
    assert!(r["counterexamples"].as_array().unwrap().is_empty());
    assert!(r["configurations"].as_u64().unwrap() > 10);
    assert!(!dir.path().join("repro").exists());
}
