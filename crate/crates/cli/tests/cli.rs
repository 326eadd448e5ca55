use std::path::Path;
use std::process::{Command, Output};

fn starwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starwalk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn scatter_walsh_single_edge_weight() {
    let o = starwalk(&["scatter", "--n", "3", "--b", "1,0,0", "--a", "0", "--c", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("S = [[1,0,0],[2,-1,0],[2,0,-1]]"), "{s}");
    assert!(s.contains("det = 1\n"), "{s}");
}

#[test]
fn scatter_sticky_json_has_spectral_data() {
    let o = starwalk(&["scatter", "--b", "0.3125,0.3125", "--a", "0", "--c", "0.375", "--format", "json", "--k", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sticky = &v[0]["sticky"];
    // c/b_k = γ w_k with w_k = 1/2 gives γ = 0.6
    let gamma = 0.6;
    assert!((sticky["bound_state_energy"].as_f64().unwrap() + 4.0 / (gamma * gamma)).abs() < 1e-12);
    let want = -2.0 * gamma / (2.0 * (4.0 + 4.0 * gamma * gamma));
    assert!((sticky["time_delay"].as_f64().unwrap() - want).abs() < 1e-12);
    assert!((sticky["time_delay_fd"].as_f64().unwrap() - want).abs() < 1e-6);
}

#[test]
fn kernel_sticky_atom_column() {
    let o = starwalk(&["kernel", "--a", "0", "--c", "0.375", "--b", "0.3125,0.3125", "--t", "1", "--start", "vertex"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("t,edge,y,density,atom"));
    let gamma = 0.6;
    let atom = gamma * starwalk::special::g_0gamma(1.0, 0.0, gamma).unwrap();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let a: f64 = f[4].parse().unwrap();
        assert!((a - atom).abs() < 1e-14, "{line}");
    }
}

#[test]
fn kernel_json_mass_is_one_for_walsh() {
    let o = starwalk(&["kernel", "--b", "0.2,0.8", "--t", "0.5,2", "--start", "2:0.3", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for table in v.as_array().unwrap() {
        assert!((table["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(table["edges"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn resolvent_mode_header() {
    let o = starwalk(&["resolvent", "--b", "0.5,0.5", "--a", "0", "--lambda", "2", "--n-y", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("lambda,edge,y,density,atom\n"));
    assert_eq!(s.lines().count(), 1 + 2 * 3);
}

#[test]
fn simulate_csv_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    let args = |p: &Path| -> Vec<String> {
        ["simulate", "--b", "0.3,0.7", "--c", "0", "--a", "0", "--n-paths", "300", "--dt", "0.01", "--seed", "9", "--output"]
            .iter()
            .map(|s| s.to_string())
            .chain([p.display().to_string()])
            .collect()
    };
    let a1: Vec<String> = args(&p1);
    let o = starwalk(&a1.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    let a2: Vec<String> = args(&p2);
    let o = Command::new(env!("CARGO_BIN_EXE_starwalk"))
        .args(&a2)
        .env("STARWALK_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (b1, b2) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(b1, b2);
    let text = String::from_utf8(b1).unwrap();
    assert!(text.starts_with("path_id,time,edge,x,local_time,alive\n"));
    // 300 paths, 101 records each
    assert_eq!(text.lines().count(), 1 + 300 * 101);
    assert!(text.lines().last().unwrap().starts_with("299,"));
}

#[test]
fn simulate_json_terminal_states() {
    let o = starwalk(&[
        "simulate", "--b", "0.25,0.25", "--a", "0.5", "--c", "0", "--n-paths", "50", "--dt", "0.01", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), 50);
    for r in recs {
        assert_eq!(r["alive"].as_bool().unwrap(), r["lifetime"].is_null());
    }
}

#[test]
fn effective_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = starwalk(&["simulate", "--b", "0.2,0.3,0.5", "--c", "0.1", "--a", "0", "--dt", "0.002", "--start", "3:0.25", "--print-config"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = stdout(&o);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &first).unwrap();
    let o = starwalk(&["--config", path.to_str().unwrap(), "--print-config"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), first);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["run"]["mode"], "simulate");
    assert_eq!(v["graph"]["n_edges"], 3);
    assert_eq!(v["run"]["start"]["edge"], 3);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"graph": {"n_edges": 2}, "boundary": {"a": 0, "b": [0.5, 0.5], "c": 0}, "run": {"mode": "scatter", "lambda": [3]}}"#,
    )
    .unwrap();
    let o = starwalk(&["--config", path.to_str().unwrap(), "--run.lambda", "5", "--print-config"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["run"]["lambda"][0], 5.0);
    assert_eq!(v["run"]["mode"], "scatter");
}

#[test]
fn validation_errors_exit_one() {
    // unknown flag
    let o = starwalk(&["scatter", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    // weights do not sum to one
    let o = starwalk(&["scatter", "--b", "0.5,0.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("= 1 violated"), "{}", stderr(&o));
    // b length disagrees with n
    let o = starwalk(&["scatter", "--n", "3", "--b", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("graph.n_edges"));
    // start edge out of range
    let o = starwalk(&["kernel", "--b", "0.5,0.5", "--start", "3:1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("out of range"));
    // malformed config
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{not json").unwrap();
    let o = starwalk(&["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed config"));
    // unwritable output
    let o = starwalk(&["scatter", "--output", dir.path().join("missing/dir/out.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot write output"));
    // bad thread count
    let o = Command::new(env!("CARGO_BIN_EXE_starwalk")).args(["scatter"]).env("STARWALK_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let o = starwalk(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("--boundary.b"));
}

#[test]
fn verify_smoke_suite_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = starwalk(&["verify", "--suite", "smoke", "--seed", "42", "--output", path.to_str().unwrap()]);
    let table = stdout(&o);
    assert!(table.contains("criterion 11"), "{table}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let recs = v.as_array().unwrap();
    assert!(recs.len() > 20);
    let all_pass = recs.iter().all(|r| r["pass"].as_bool().unwrap());
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 2 }));
    for r in recs {
        assert!(r["name"].as_str().unwrap().starts_with("criterion "));
        assert!(r.get("statistic").is_some() && r.get("bound").is_some() && r.get("n_samples").is_some());
    }
}
