//! End-to-end runs of the `pricewars` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pricewars"));
    c.env_remove("PRICEWARS_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example3(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("example3.json");
    let o = run(&["gen", "example3", "-o", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

fn edit(path: &Path, out: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(out, v.to_string()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_example3_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let first = std::fs::read_to_string(&path).unwrap();
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["grid"], json!({"denom": 2, "price_cap_units": 10}));
    assert_eq!(v["buyer"]["marginals_units"], json!([10, 10, 6, 2]));
    // re-serializing the parsed file changes nothing
    let copy = dir.path().join("copy.json");
    edit(&path, &copy, |_| {});
    let o = run(&["simulate", s(&copy), "--rounds", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout_gen = stdout(&run(&["gen", "example3"]));
    assert_eq!(stdout_gen, first);
}

#[test]
fn simulate_alternating_finds_cycle_with_quantity_three() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let trace = dir.path().join("trace.jsonl");
    let plot = dir.path().join("plot.csv");
    let summary = dir.path().join("summary.json");
    let o = run(&[
        "simulate",
        s(&path),
        "--schedule",
        "alternating",
        "--rounds",
        "100",
        "--trace",
        s(&trace),
        "--plot",
        s(&plot),
        "--summary",
        s(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(v["version"].as_str().unwrap().starts_with("pricewars "));
    assert_eq!(v["grid"]["denom"], 2);
    assert_eq!(v["cycle"]["verified"], true);
    assert_eq!(v["steady"]["min_quantity"], 3);
    assert_eq!(v["steady"]["max_quantity"], 3);
    assert_eq!(v["ewg"]["within_bound"], true);
    assert_eq!(v["optimal_welfare_units"], 28);

    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len() as u64, v["steps"].as_u64().unwrap());
    assert_eq!(lines[0]["mover"], 1);
    assert_eq!(lines[1]["mover"], 0);

    let csv = std::fs::read_to_string(&plot).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("t,mover,max_price_units,quantity,welfare_units"));
    assert_eq!(rows.count(), lines.len());
}

#[test]
fn nash_on_example3_reports_none() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let o = run(&["nash", s(&path)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no pure Nash equilibrium"), "{}", stdout(&o));

    let o = run(&["nash", s(&path), "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["equilibria"], json!([]));
}

#[test]
fn increasing_marginals_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let bad = dir.path().join("bad.json");
    edit(&path, &bad, |v| {
        v["sellers"] = json!([{"supply": 1}, {"supply": 1}]);
        v["buyer"]["marginals_units"] = json!([3, 5]);
    });
    let o = run(&["simulate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("marginals not non-increasing"), "{}", stderr(&o));
}

#[test]
fn priors_not_summing_to_one_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let prior = |second: &str| json!([{"valuation": 0, "probability": "1/2"}, {"valuation": 1, "probability": second}]);
    let with = |second: &str, out: &Path| {
        edit(&path, out, |v| {
            v["buyer"] = json!({"model": "homogeneous"});
            v["beliefs"] = json!({
                "valuations": [[10, 10, 6, 2], [8, 8, 4, 2]],
                "priors": [prior(second), prior(second)],
            });
            v["true_valuation"] = json!(0);
        })
    };
    let bad = dir.path().join("bad.json");
    with("49/100", &bad);
    let o = run(&["simulate", s(&bad), "--rounds", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sum to 99/100"), "{}", stderr(&o));

    let good = dir.path().join("good.json");
    with("1/2", &good);
    let o = run(&["simulate", s(&good), "--rounds", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn malformed_json_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"grid": {"denom": "two"}}"#).unwrap();
    let o = run(&["simulate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.denom"), "{}", stderr(&o));
}

#[test]
fn verify_main_ewg_passes() {
    let o = run(&["verify", "main-ewg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS [3] main-ewg"), "{}", stdout(&o));
}

#[test]
fn unknown_suite_and_bad_args_exit_two() {
    assert_eq!(run(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn env_seed_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let args = ["simulate", s(&path), "--schedule", "random", "--seed", "5", "--rounds", "3"];
    let o = bin().args(args).env("PRICEWARS_SEED", "77").output().unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 77);
    assert_eq!(v["scheduler"]["seed"], 77);

    let o = run(&args);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 5);

    let o = bin().args(args).env("PRICEWARS_SEED", "abc").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_trace() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let go = |name: &str| {
        let t = dir.path().join(name);
        let o = run(&["simulate", s(&path), "--schedule", "random", "--seed", "9", "--rounds", "6", "--trace", s(&t)]);
        assert!(o.status.success());
        std::fs::read_to_string(t).unwrap()
    };
    assert_eq!(go("a.jsonl"), go("b.jsonl"));
}

#[test]
fn ewg_reports_within_bound() {
    let dir = TempDir::new().unwrap();
    let path = example3(&dir);
    let o = run(&["ewg", s(&path), "--random", "2", "--initials", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["report"]["quantity_floor"], 3);
}

#[test]
fn gen_accepts_parameters() {
    let o = run(&["gen", "lower-bound", "--supplies", "8,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["grid"]["denom"], 60);
    let o = run(&["gen", "theta-n", "--n", "8", "--delta", "1/10"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["beliefs"]["priors"][0][0]["probability"], "1/10");
}
