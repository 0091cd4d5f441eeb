use std::path::{Path, PathBuf};
use std::process::Command;

use ndde_cli::run;
use serde_json::Value;
use tempfile::TempDir;

fn run_to(dir: &TempDir, name: &str, args: &[&str]) -> (i32, PathBuf) {
    let out = dir.path().join(name);
    let mut argv = vec!["ndde"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    (run(argv), out)
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&read(p)).unwrap()
}

/// `# key: value` header lines of a CSV file.
fn header(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn neutral_jumps_halve_each_delay() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "n.csv", &["ndde", "--kind", "neutral", "--a", "0.5", "--horizon", "5"]);
    assert_eq!(code, 0);
    let text = read(&out);
    assert_eq!(text.lines().nth(3).map(|l| l.starts_with("# breaking_points: ")), Some(true));
    let bps: Value = serde_json::from_str(&header(&text, "breaking_points").unwrap()).unwrap();
    for n in 0..5 {
        let bp = bps.as_array().unwrap().iter().find(|b| b["t"] == n as f64).unwrap();
        let j = bp["jumps"][0].as_f64().unwrap();
        let expect = -(0.5f64).powi(n + 1);
        assert!((j - expect).abs() <= 1e-9, "t={n}: {j}");
    }
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1001);
    assert_eq!(rows[0].len(), 4);
    // Node values round-trip through the 17-digit format.
    let at_one = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 1.0).unwrap();
    let (l, r): (f64, f64) = (at_one[2].parse().unwrap(), at_one[3].parse().unwrap());
    assert!((r - l + 0.25).abs() <= 1e-9);
}

#[test]
fn doubleslit_reports_de_broglie_length() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "d.json", &["doubleslit", "--v3", "0.01"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["lambda_db"].as_f64().unwrap() - 18892.0).abs() <= 1.0);
    assert!((v["ratio_to_h_over_mv"].as_f64().unwrap() - 4.56).abs() <= 0.05);
    let bragg = v["bragg"].as_array().unwrap();
    assert!(bragg.iter().any(|b| b["n"] == 0 && b["theta_deg"] == 0.0));
    assert!(v["L"].as_f64().unwrap() <= 1e5);
    assert_eq!(v["meta"]["version"], ndde_cli::VERSION);
}

#[test]
fn config_file_then_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("slit.json");
    std::fs::write(&cfg, r#"{"a": 2e5, "v3": 0.02, "n_max": 2}"#).unwrap();
    let bragg = dir.path().join("bragg.csv");
    let (code, out) = run_to(
        &dir,
        "d.json",
        &["doubleslit", "--config", cfg.to_str().unwrap(), "--v3", "0.01", "--bragg-csv", bragg.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["meta"]["config"]["a"], 2e5);
    assert_eq!(v["meta"]["config"]["v3"], 0.01);
    assert_eq!(v["bragg"].as_array().unwrap().len(), 5);
    let rows = csv_rows(&read(&bragg));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2][0], "0");
}

#[test]
fn vonlaue_example() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "v.json", &["crystal", "vonlaue", "--L", "1", "--G", "2pi,0"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["delta_u"], serde_json::json!([1.0, 0.0, 0.0]));
    assert!(row["lattice_max_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(row["sites"], 400);

    let (code, out) = run_to(&dir, "all.json", &["crystal", "vonlaue", "--a2", "0.5,0.8", "--max-index", "2"]);
    assert_eq!(code, 0);
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r["lattice_max_error"].as_f64().unwrap() <= 1e-10));
}

#[test]
fn lightcone_uniform_example() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "l.json", &["lightcone", "--velocity", "0.5,0,0", "--t", "1.5"]);
    assert_eq!(code, 0);
    let hits = json(&out)["hits"].as_array().unwrap().clone();
    assert_eq!(hits[0]["branch"], "retarded");
    assert!((hits[0]["t_dev"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert!((hits[1]["t_dev"].as_f64().unwrap() - 3.0).abs() <= 1e-12);
}

#[test]
fn lightcone_out_of_domain_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "l.json", &["lightcone", "--t", "140"]);
    assert_eq!(code, 1);
    let v = json(&out);
    // The retarded hit at t=140/1.5 is kept; the advanced one leaves the domain.
    assert_eq!(v["hits"].as_array().unwrap().len(), 1);
    assert!(v["failure"]["error"].as_str().unwrap().contains("advanced"));
}

#[test]
fn sewing_static_pair_ladder() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "s.csv", &["sewing", "--scenario", "static", "--r", "3", "--steps", "20"]);
    assert_eq!(code, 0);
    let text = read(&out);
    assert_eq!(header(&text, "truncated").as_deref(), Some("false"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 21);
    for (g, r) in rows.iter().enumerate() {
        assert_eq!(r[0], g.to_string());
        assert_eq!(r[1], (g % 2).to_string());
        assert!((r[2].parse::<f64>().unwrap() - 3.0 * g as f64).abs() <= 1e-12);
    }
}

#[test]
fn sewing_central_and_file_scenarios() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "c.csv", &["sewing", "--scenario", "central", "--steps", "30", "--format", "json"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["columns"], serde_json::json!(["generation", "trajectory_id", "t"]));
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().skip(1).step_by(2).all(|r| r[1] == 2));

    let trajs = ndde_core::sewing::static_pair(2.0, -5.0, 100.0).unwrap();
    let list: Vec<Value> = trajs.iter().map(|t| serde_json::from_str(&t.to_json()).unwrap()).collect();
    let file = dir.path().join("trajs.json");
    std::fs::write(&file, serde_json::to_string(&list).unwrap()).unwrap();
    let (code, out) =
        run_to(&dir, "f.csv", &["sewing", "--scenario", "file", "--trajectories", file.to_str().unwrap(), "--steps", "4"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&read(&out));
    assert_eq!(rows[4][2].parse::<f64>().unwrap(), 8.0);
}

#[test]
fn field_probe_columns_and_trajectory_file() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "f.csv", &["field-probe", "--samples", "11"]);
    assert_eq!(code, 0);
    let text = read(&out);
    let cols = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(cols.starts_with("t,x,y,z,ret_Ex,ret_Ey,ret_Ez,ret_Bx,ret_By,ret_Bz,adv_Ex"));
    assert_eq!(csv_rows(&text).len(), 11);

    // A polyline source radiates nothing.
    let traj = ndde_core::PiecewiseTrajectory::polyline(
        &[(-50.0, ndde_core::Vec3::ZERO), (0.0, ndde_core::Vec3::new(5.0, 0.0, 0.0)), (50.0, ndde_core::Vec3::ZERO)],
        1.0,
        -1.0,
    )
    .unwrap();
    let file = dir.path().join("t.json");
    std::fs::write(&file, traj.to_json()).unwrap();
    let (code, out) = run_to(&dir, "p.csv", &["field-probe", "--trajectory", file.to_str().unwrap(), "--t1", "5"]);
    assert_eq!(code, 0);
    for row in csv_rows(&read(&out)) {
        assert!(row[4..].iter().all(|c| c.parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn field_probe_partial_output_on_failure() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "f.csv", &["field-probe", "--t0", "150", "--t1", "250", "--samples", "11"]);
    assert_eq!(code, 1);
    let text = read(&out);
    let rows = csv_rows(&text);
    assert!(!rows.is_empty() && rows.len() < 11, "{}", rows.len());
    let failure: Value = serde_json::from_str(&header(&text, "failure").unwrap()).unwrap();
    assert_eq!(failure["rows_written"], rows.len());
}

#[test]
fn crystal_hamiltonian_output() {
    let dir = TempDir::new().unwrap();
    let (code, out) = run_to(&dir, "h.csv", &["crystal", "hamiltonian", "--t-end", "50", "--sample-every", "100"]);
    assert_eq!(code, 0);
    let text = read(&out);
    assert!(text.contains("\nt,x,y,px,py,H\n"));
    let h: Vec<f64> = csv_rows(&text).iter().map(|r| r[5].parse().unwrap()).collect();
    let drift = h.iter().map(|x| (x - h[0]).abs()).fold(0.0, f64::max) / h[0].abs();
    assert!(drift < 1e-5, "{drift}");
}

#[test]
fn crystal_blow_up_keeps_last_sample() {
    let dir = TempDir::new().unwrap();
    let (code, out) =
        run_to(&dir, "h.csv", &["crystal", "hamiltonian", "--epsilon", "1e300", "--v", "1e10", "--dt", "0.1", "--t-end", "1"]);
    assert_eq!(code, 1);
    let text = read(&out);
    assert_eq!(csv_rows(&text).len(), 1);
    assert!(header(&text, "failure").unwrap().contains("non-finite"));
}

#[test]
fn kick_sweep_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let args = ["crystal", "kick-sweep", "--runs", "24", "--seed", "7", "--t-end", "40"];
    let (c1, one) = run_to(&dir, "a.csv", &[&args[..], &["--workers", "1"]].concat());
    let (c2, four) = run_to(&dir, "b.csv", &[&args[..], &["--workers", "4"]].concat());
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(read(&one), read(&four));
    let rows = csv_rows(&read(&one));
    assert_eq!(rows.len(), 24);
    for r in rows {
        // Single ±G pair along x: the kick has no y component.
        assert_eq!(r[6].parse::<f64>().unwrap(), 0.0);
        if !r[8].is_empty() {
            assert!((r[8].parse::<f64>().unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn usage_and_validation_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(["ndde", "ndde", "--bogus"]), 2);
    assert_eq!(run(["ndde", "nothing"]), 2);
    assert_eq!(run(["ndde"]), 2);
    assert_eq!(run_to(&dir, "x", &["ndde", "--horizon", "-1"]).0, 2);
    assert_eq!(run_to(&dir, "x", &["doubleslit", "--v3", "1.5"]).0, 2);
    assert_eq!(run_to(&dir, "x", &["crystal", "vonlaue", "--L", "0"]).0, 2);
    assert_eq!(run_to(&dir, "x", &["crystal", "hamiltonian", "--g", "0,0"]).0, 2);
    assert_eq!(run_to(&dir, "x", &["sewing", "--scenario", "file"]).0, 2);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"horizon": 5, "typo": 1}"#).unwrap();
    assert_eq!(run_to(&dir, "x", &["ndde", "--config", cfg.to_str().unwrap()]).0, 2);
    assert_eq!(run_to(&dir, "x", &["ndde", "--config", "/nonexistent/cfg.json"]).0, 2);
    assert_eq!(run(["ndde", "--help"]), 0);
}

#[test]
fn binary_exit_codes_and_worker_env() {
    let bin = env!("CARGO_BIN_EXE_ndde");
    let status = Command::new(bin).args(["crystal", "kick-sweep", "--runs", "4"]).env("NDDE_NUM_WORKERS", "0").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let a = Command::new(bin).args(["crystal", "kick-sweep", "--runs", "6"]).env("NDDE_NUM_WORKERS", "3").output().unwrap();
    let b = Command::new(bin).args(["crystal", "kick-sweep", "--runs", "6"]).env_remove("NDDE_NUM_WORKERS").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(bin).args(["ndde", "--unknown-flag"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Usage"));
}
