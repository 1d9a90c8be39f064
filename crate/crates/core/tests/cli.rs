use std::path::Path;
use std::process::{Command, Output};

fn erlangs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erlangs"))
        .args(args)
        .env_remove("ERLANGS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const OL: [&str; 12] = [
    "--lambda", "100", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1", "--c", "100",
];

#[test]
fn fixed_point_underloaded() {
    let o = erlangs(&[
        "fixed-point", "--lambda", "100", "--mu", "5", "--theta", "1", "--p", "0.1", "--gamma", "0.5", "--c", "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["q_star"], 20.0);
    assert_eq!(v["s_star"], 80.0);
    assert_eq!(v["regime"], "UL");
}

#[test]
fn missing_flag_prints_usage() {
    let o = erlangs(&["fixed-point", "--lambda", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_params_exit_two() {
    let o = erlangs(&[
        "fixed-point", "--lambda=-1", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1", "--c", "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}

#[test]
fn moments_json_round_trips() {
    let mut args = vec!["moments"];
    args.extend(OL);
    let o = erlangs(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["v_qq"], 100.0);
    assert!(!v["J"].is_null() && !v["Sigma"].is_null());
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, text);
}

#[test]
fn integrate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["integrate", "--horizon", "1", "--step", "0.25", "--output", "traj.csv"];
    args.extend(OL);
    args.extend(["--out-dir", dir.path().to_str().unwrap()]);
    let o = erlangs(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "t,q,s");
    assert_eq!(lines.len(), 6);
}

fn simulate_into(dir: &Path, reps: &str) -> Output {
    let mut args = vec![
        "simulate", "--customers", "3000", "--reps", reps, "--seed", "42", "--grid-dt", "0.5", "--output",
        "summary.json", "--trajectory", "traj.csv", "--events", "events.csv", "--out-dir",
    ];
    args.push(dir.to_str().unwrap());
    args.extend([
        "--lambda", "10", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1", "--c", "10",
    ]);
    erlangs(&args)
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(simulate_into(a.path(), "4").status.code(), Some(0));
    assert_eq!(simulate_into(b.path(), "4").status.code(), Some(0));
    for f in ["summary.json", "traj.csv", "events.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["runs"].as_array().unwrap().len(), 4);
    assert!(std::fs::read_to_string(a.path().join("events.csv")).unwrap().starts_with("t,event_tag,q,s\n"));
}

#[test]
fn single_replication_has_no_intervals() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate_into(dir.path(), "1").status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(v["summary"]["metrics"]["mean_q"]["half_width"].is_null(), "{}", v["summary"]["metrics"]);
    assert!(std::fs::read_to_string(dir.path().join("traj.csv")).unwrap().starts_with("t,q,s\n"));
}

#[test]
fn io_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let target = blocker.join("x.json");
    let mut args = vec!["moments", "--output", target.to_str().unwrap()];
    args.extend(OL);
    assert_eq!(erlangs(&args).status.code(), Some(3));
}

#[test]
fn staff_abandonment_row() {
    let base = [
        "staff", "--lambda", "80", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "10", "--target",
        "abandonment", "--epsilon", "0.1", "--method",
    ];
    let mut args = base.to_vec();
    args.push("implicit");
    let v: serde_json::Value = serde_json::from_str(&stdout(&erlangs(&args))).unwrap();
    assert!((v["c_real"].as_f64().unwrap() - 76.73).abs() < 0.01);
    let mut args = base.to_vec();
    args.push("fluid-bound");
    let v: serde_json::Value = serde_json::from_str(&stdout(&erlangs(&args))).unwrap();
    assert!((v["c_real"].as_f64().unwrap() - 75.6).abs() < 1e-9);
}

#[test]
fn table_benchmark_rows() {
    let o = erlangs(&["table", "--kind", "delay", "--benchmark", "--digits"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("80,1,1,0.5,0.1,0.05,,494.71,,516.04,,ok"), "{text}");
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn table_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "lambda = [80, 100]\nmu = 1\ntheta = 1\np = 0.5\ngamma = [0.1, 10]\nepsilon = 0.05\n",
    )
    .unwrap();
    let o = erlangs(&["table", "--kind", "abandonment", "--config", cfg.to_str().unwrap(), "--lambda", "120"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("120,")));
}

#[test]
fn bad_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "lamda = 3\n").unwrap();
    let o = erlangs(&["fixed-point", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_grid_exits_two() {
    assert_eq!(erlangs(&["table", "--kind", "delay", "--lambda", "80"]).status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let o = erlangs(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
}
