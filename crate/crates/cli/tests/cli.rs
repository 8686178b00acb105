use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gwrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwrk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(text: &[u8]) -> Value {
    serde_json::from_slice(text).expect("valid JSON")
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "one-line error, got {s:?}");
    s.trim_end().to_string()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_tree_happy_path() {
    let o = gwrk(&["sample-tree", "--lambda", "1.2", "--mu", "1", "--ancestors", "3", "--ceiling", "2", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    assert_eq!(v["a"].as_f64(), Some(2.0));
    assert_eq!(v["roots"].as_array().unwrap().len(), 3);
    for (i, n) in v["nodes"].as_array().unwrap().iter().enumerate() {
        assert_eq!(n["id"].as_u64(), Some(i as u64));
        assert!(n["death"].as_f64().unwrap() <= 2.0);
    }
}

#[test]
fn supercritical_without_ceiling_is_rejected() {
    let o = gwrk(&["sample-path", "--lambda", "1", "--mu", "2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr_line(&o).starts_with("gwrk: error[validation]:"));
}

#[test]
fn discrete_check_with_defaults() {
    let o = gwrk(&["verify-rk-discrete", "--replicas", "1000", "--assert", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o.stdout);
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["replicas"].as_u64(), Some(1000));
}

#[test]
fn usage_errors_exit_one() {
    let o = gwrk(&["sample-path", "--lambada", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr_line(&o).starts_with("gwrk: error[usage]:"));
    assert_eq!(code(&gwrk(&["frobnicate"])), 1);
    assert_eq!(code(&gwrk(&["to-tree"])), 1);
    assert_eq!(code(&gwrk(&["--help"])), 0);
    let help = gwrk(&["verify-rk-limit", "--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("Feller"));
}

#[test]
fn path_and_forest_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let f = dir.path().join("f.json");
    let q = dir.path().join("q.csv");
    let o = gwrk(&["sample-path", "--lambda", "1", "--mu", "1", "--ceiling", "3", "--ancestors", "4", "--seed", "11", "--out", arg(&p)]);
    assert_eq!(code(&o), 0);
    let side = json(&std::fs::read(dir.path().join("p.json")).unwrap());
    assert_eq!(side["m"].as_u64(), Some(4));
    assert_eq!(side["seed"].as_u64(), Some(11));
    assert_eq!(side["a"].as_f64(), Some(3.0));
    assert_eq!(side["p"].as_f64(), Some(2.0));

    assert_eq!(code(&gwrk(&["to-tree", "--input", arg(&p), "--out", arg(&f)])), 0);
    let forest = json(&std::fs::read(&f).unwrap());
    assert_eq!(forest["roots"].as_array().unwrap().len(), 4);

    assert_eq!(code(&gwrk(&["to-path", "--input", arg(&f), "--out", arg(&q)])), 0);
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    let side_q = json(&std::fs::read(dir.path().join("q.json")).unwrap());
    assert_eq!(side_q["m"], side["m"]);
    assert_eq!(side_q["seed"], Value::Null);

    let text = String::from_utf8(std::fs::read(&p).unwrap()).unwrap();
    assert!(text.starts_with("time,height\n0.0000000000000000e0,0.0000000000000000e0\n"));
}

#[test]
fn corrupt_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    std::fs::write(&p, "time,height\n0,0\n1,2\n2,0\n").unwrap();
    // no sidecar
    let o = gwrk(&["to-tree", "--input", arg(&p)]);
    assert_eq!(code(&o), 2);
    assert!(stderr_line(&o).starts_with("gwrk: error[io]:"));
    std::fs::write(dir.path().join("p.json"), r#"{"p": 2.0, "a": null, "m": 1, "seed": null, "params": {}}"#).unwrap();
    assert_eq!(code(&gwrk(&["to-tree", "--input", arg(&p)])), 0);
    std::fs::write(&p, "time,height\n0,0\n1,2\n2,1\n").unwrap();
    assert_eq!(code(&gwrk(&["to-tree", "--input", arg(&p)])), 2);
}

#[test]
fn other_samplers_write_csv() {
    let o = gwrk(&["population", "--big-n", "10", "--alpha", "1", "--beta", "0.5", "--horizon", "0.5", "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("time,count,x\n0.0000000000000000e0,10,1.0000000000000000e0\n"));
    let o = gwrk(&["feller", "--dt", "0.01", "--horizon", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 52);
    assert!(text.starts_with("time,value\n"));
    assert_eq!(code(&gwrk(&["feller", "--dt", "0.3", "--horizon", "1"])), 2);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"lambda": 1.3, "replicas": 50, "ceiling": 3.0, "seed": 4}"#).unwrap();
    let o = gwrk(&["verify-law", "--config", arg(&cfg), "--replicas", "60"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o.stdout);
    assert_eq!(r["replicas"].as_u64(), Some(60));
    assert_eq!(r["seed"].as_u64(), Some(4));
    let lambda = r["params"].as_array().unwrap().iter().find(|p| p["name"] == "lambda").unwrap();
    assert_eq!(lambda["value"].as_f64(), Some(1.3));

    std::fs::write(&cfg, r#"{"lambda": 1.3, "bogus": 1}"#).unwrap();
    assert_eq!(code(&gwrk(&["verify-law", "--config", arg(&cfg)])), 2);
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"verb": "verify-chop", "lambda": 0.8, "mu": 1.0, "ceiling": 3.0, "excise_at": 1.5, "replicas": 400, "seed": 9}"#,
    )
    .unwrap();
    let outs: Vec<_> = ["1", "1", "3"]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let out = dir.path().join(format!("r{i}.json"));
            let o = gwrk(&["verify-chop", "--config", arg(&cfg), "--threads", threads, "--out", arg(&out)]);
            assert_eq!(code(&o), 0);
            (std::fs::read(&out).unwrap(), std::fs::read(out.with_extension("csv")).unwrap())
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
    let csv = String::from_utf8(outs[0].1.clone()).unwrap();
    assert!(csv.starts_with("kind,name,n,mean,variance,se_mean,se_variance,distance,p_value,observed,expected,tolerance,relation,passed\n"));
    assert!(csv.lines().any(|l| l.starts_with("ks,duration,")));
}

#[test]
fn failed_assertion_exits_three_after_writing_the_report() {
    // a single ancestor (N = 1) gives lattice-valued local times, which the
    // KS test against the diffusion rejects
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = gwrk(&[
        "verify-rk-limit", "--big-n", "1", "--ceiling", "4", "--replicas", "2000", "--dt", "0.01", "--assert", "--out", arg(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr_line(&o).starts_with("gwrk: error[assertion]: verify-rk-limit failed:"));
    let r = json(&std::fs::read(&out).unwrap());
    assert_eq!(r["passed"], Value::Bool(false));
    // without --assert the same run succeeds
    assert_eq!(code(&gwrk(&["verify-rk-limit", "--big-n", "1", "--ceiling", "4", "--replicas", "200", "--dt", "0.01"])), 0);
}

#[test]
fn martingale_verb_runs() {
    let o = gwrk(&[
        "verify-martingale", "--big-n", "20", "--alpha", "1", "--beta", "0.5", "--ceiling", "4", "--replicas", "200", "--times", "0.25,0.5",
    ]);
    assert_eq!(code(&o), 0);
    let r = json(&o.stdout);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"mean M(0.25)"));
    assert!(names.contains(&"jump size relative error"));
}
