use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ldmcast"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("LDM_THREADS").output().expect("spawn ldmcast")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn small(dir: &TempDir) -> PathBuf {
    let cfg = config(dir, r#"{"n_bs":2,"n_users":2,"n_antennas":2,"bs_power_dbm":46,"backhaul_mbps":100,"seed":3}"#);
    let inst = dir.path().join("inst.json");
    let o = run(&["generate", s(&cfg), "-o", s(&inst)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    inst
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = small(&dir);
    let b = dir.path().join("again.json");
    assert_eq!(code(&run(&["generate", s(&dir.path().join("cfg.json")), "-o", s(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("other.json");
    assert_eq!(code(&run(&["generate", s(&dir.path().join("cfg.json")), "-o", s(&c), "--seed", "4"])), 0);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn generate_sizes_channels_from_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"n_bs":7,"n_users":10,"n_antennas":4,"bs_power_dbm":46,"backhaul_mbps":100,"seed":0}"#);
    let out = dir.path().join("inst.json");
    assert_eq!(code(&run(&["generate", s(&cfg), "-o", s(&out)])), 0);
    let v = json(&out);
    let ch = v["channels"].as_array().unwrap();
    assert_eq!(ch.len(), 10);
    assert!(ch.iter().all(|c| c.as_array().unwrap().len() == 28));
}

#[test]
fn missing_config_field_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"n_bs":2,"n_antennas":2,"bs_power_dbm":46,"backhaul_mbps":100,"seed":0}"#);
    let o = run(&["generate", s(&cfg), "-o", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_users"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["solve", "/nonexistent/inst.json", "--solver", "ccp"])), 3);
    let inst = small(&dir);
    assert_eq!(code(&run(&["solve", s(&inst), "--solver", "ccp", "--eta", "1.5"])), 1);
}

#[test]
fn ccp_result_validates() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let res = dir.path().join("res.json");
    let trace = dir.path().join("trace.csv");
    let o = run(&["solve", s(&inst), "--solver", "ccp", "-o", s(&res), "--trace", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&res);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["ccp_runs"].as_array().unwrap().len(), 3);
    assert!(v["objective_bps"].as_f64().unwrap() > 0.0);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("run_seed,stage,iteration,objective_bps"));

    let o = run(&["validate", s(&inst), s(&res)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["feasible"], true);
}

#[test]
fn tampered_result_fails_validation() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let res = dir.path().join("res.json");
    assert_eq!(code(&run(&["solve", s(&inst), "--solver", "ccp", "--restarts", "1", "-o", s(&res)])), 0);
    let mut v = json(&res);
    for r in v["solution"]["rates_bps_per_hz"].as_array_mut().unwrap() {
        *r = (r.as_f64().unwrap() + 50.0).into();
    }
    std::fs::write(&res, v.to_string()).unwrap();
    assert_eq!(code(&run(&["validate", s(&inst), s(&res)])), 2);
}

#[test]
fn bb_reports_its_gap() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let res = dir.path().join("res.json");
    let o = run(&["solve", s(&inst), "--solver", "bb", "--eps", "0.1", "-o", s(&res)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&res);
    let bb = &v["bb"];
    let gap = bb["gap_bps_per_hz"].as_f64().unwrap();
    assert!(bb["upper_bps"].as_f64().unwrap() >= bb["lower_bps"].as_f64().unwrap());
    assert_eq!(bb["termination"], "converged");
    assert!(gap <= 0.1 + 1e-9, "gap {gap}");
    assert_eq!(code(&run(&["validate", s(&inst), s(&res)])), 0);
}

#[test]
fn static_with_all_bss_serves_multicast_everywhere() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let res = dir.path().join("res.json");
    assert_eq!(code(&run(&["solve", s(&inst), "--solver", "static", "--cluster-size", "2", "-o", s(&res)])), 0);
    let v = json(&res);
    assert_eq!(v["multicast_cluster_size"].as_f64().unwrap(), 2.0);
    assert_eq!(code(&run(&["validate", s(&inst), s(&res)])), 0);
}

#[test]
fn tdm_rates_lie_on_the_time_share_segment() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let res = dir.path().join("res.json");
    assert_eq!(code(&run(&["solve", s(&inst), "--solver", "tdm", "--t-m", "0.25", "-o", s(&res)])), 0);
    let v = json(&res);
    let t = &v["tdm"];
    let (m, u) = (t["multicast_only_bps"].as_f64().unwrap(), t["unicast_only_bps"].as_f64().unwrap());
    assert!((v["multicast_rate_bps"].as_f64().unwrap() - 0.25 * m).abs() <= 1e-6 * m);
    assert!((v["unicast_rate_bps"].as_f64().unwrap() - 0.75 * u).abs() <= 1e-6 * u.max(1.0));
    assert_eq!(code(&run(&["validate", s(&inst), s(&res)])), 0);
}

#[test]
fn eta_sweep_covers_both_endpoints() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let out = dir.path().join("sweep.csv");
    let sum = dir.path().join("summary.csv");
    let svg = dir.path().join("plot.svg");
    let o = run(&[
        "sweep", "--instances", s(&inst), "--axis", "eta", "--values", "0,0.5,1", "--restarts", "1", "-o", s(&out),
        "--summary", s(&sum), "--svg", s(&svg),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let head: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    for col in ["axis", "value", "seed", "solver", "status", "objective_bps", "multicast_rate_bps", "unicast_rate_bps", "wall_time_s", "version"] {
        assert!(head.iter().any(|h| h == col), "missing column {col}");
    }
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let col = |name: &str| head.iter().position(|h| h == name).unwrap();
    assert!(rows.iter().all(|r| &r[col("status")] == "ok"));
    // eta = 0 carries no multicast, eta = 1 no unicast
    assert_eq!(rows[0][col("multicast_rate_bps")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[2][col("unicast_rate_bps")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(csv::Reader::from_path(&sum).unwrap().records().count(), 3);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn t_m_axis_rejects_other_solvers() {
    let dir = TempDir::new().unwrap();
    let inst = small(&dir);
    let o = run(&[
        "sweep", "--instances", s(&inst), "--axis", "t_m", "--values", "0,1", "--solvers", "ccp", "-o",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn backhaul_sweep_from_config_seeds() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, r#"{"n_bs":2,"n_users":1,"n_antennas":2,"bs_power_dbm":46,"backhaul_mbps":100,"seed":0}"#);
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep", "--config", s(&cfg), "--seeds", "0..2", "--axis", "backhaul", "--values", "10,50", "--solvers",
        "ccp,static", "--restarts", "1", "-o", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<csv::StringRecord> = csv::Reader::from_path(&out).unwrap().records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let keys: Vec<(String, String, String)> = rows.iter().map(|r| (r[1].into(), r[2].into(), r[4].into())).collect();
    assert_eq!(keys[0], ("10.0".into(), "0".into(), "ccp".into()));
    assert_eq!(keys[1], ("10.0".into(), "0".into(), "static".into()));
    assert_eq!(keys[7], ("50.0".into(), "1".into(), "static".into()));
}
