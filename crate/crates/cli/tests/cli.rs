use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mxdag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mxdag")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_library(dir: &Path) {
    let o = mxdag(&["scenarios", "--write", dir.to_str().unwrap()]);
    assert!(o.status.success());
}

fn edit(src: &Path, dst: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(src).unwrap()).unwrap();
    f(&mut v);
    fs::write(dst, v.to_string()).unwrap();
}

#[test]
fn validate_accepts_written_library() {
    let dir = tempfile::tempdir().unwrap();
    write_library(dir.path());
    let mut count = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let o = mxdag(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 6);
}

#[test]
fn validate_rejects_cycle_and_oversized_unit() {
    let dir = tempfile::tempdir().unwrap();
    write_library(dir.path());
    let base = dir.path().join("fig1-coschedule.json");

    let cyclic = dir.path().join("cyclic.json");
    edit(&base, &cyclic, |v| v["jobs"][0]["edges"].as_array_mut().unwrap().push(serde_json::json!(["b", "f1"])));
    let o = mxdag(&["validate", cyclic.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("cycle"));

    let unit = dir.path().join("unit.json");
    edit(&base, &unit, |v| v["jobs"][0]["tasks"][0]["unit"] = serde_json::json!(5.0));
    assert_eq!(mxdag(&["validate", unit.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn validate_reports_parse_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"name\": 1\n}\n").unwrap();
    let o = mxdag(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn run_fig1_under_principle1_reports_jct_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let o = mxdag(&["run", "fig1-coschedule", "--policy", "principle1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("X: JCT 3\n"));
    let text = fs::read_to_string(&out).unwrap();
    let (_, trace) = mxdag::io::read_trace(&text).unwrap();
    assert_eq!(trace.jct("X"), Some(3.0));
}

#[test]
fn repeated_runs_write_identical_traces() {
    let lib = tempfile::tempdir().unwrap();
    write_library(lib.path());
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a.jsonl"), out.path().join("b.jsonl"));
    for entry in fs::read_dir(lib.path()).unwrap() {
        let scenario = entry.unwrap().path();
        for p in [&a, &b] {
            let o = mxdag(&["run", scenario.to_str().unwrap(), "--seedless", "--out", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}", scenario.display());
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{}", scenario.display());
    }
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let o = mxdag(&["run", "fig1-coschedule", "--policy", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(mxdag(&["run"]).status.code(), Some(2));
}

#[test]
fn critpath_of_pipelining_scenario_goes_through_a_b_c() {
    let o = mxdag(&["critpath", "fig3-pipelining"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "X: A -> flow1 -> B -> flow2 -> C (length 12)\n");
}

#[test]
fn whatif_pipelining_flow4_changes_nothing() {
    let o = mxdag(&["whatif", "fig3-pipelining", "--pipeline", "flow4"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().find(|l| l.starts_with("X ")).unwrap().to_string();
    let delta: f64 = row.split_whitespace().last().unwrap().parse().unwrap();
    assert_eq!(delta, 0.0);
}

#[test]
fn whatif_rejects_non_pipelineable_task() {
    let o = mxdag(&["whatif", "fig3-pipelining", "--pipeline", "flow2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_coflow_groupings_against_per_flow_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let o = mxdag(&[
        "compare",
        "fig2",
        "--policies",
        "optimal,coflow-b1,coflow-b2,coflow-b3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("best: optimal"));
    let rows: Vec<(String, f64)> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    let optimal = rows[0].1;
    assert!(rows[1..].iter().all(|(_, j)| *j > optimal));
}

#[test]
fn straggler_flag_slows_the_job() {
    let base = stdout(&mxdag(&["run", "fig1-coschedule"]));
    let slow = mxdag(&["run", "fig1-coschedule", "--straggler", "b:2"]);
    assert!(slow.status.success());
    assert_ne!(base, stdout(&slow));
    assert_eq!(mxdag(&["run", "fig1-coschedule", "--straggler", "b:0.5"]).status.code(), Some(2));
    assert_eq!(mxdag(&["run", "fig1-coschedule", "--straggler", "nope:2"]).status.code(), Some(2));
}

#[test]
fn auto_pipelining_picks_the_helpful_choice() {
    let o = mxdag(&["run", "fig3-pipelining", "--pipeline", "auto"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("X: JCT 10\n"));
}
