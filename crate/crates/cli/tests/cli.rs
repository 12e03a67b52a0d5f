use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn heatdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatdg")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v.to_string()))
        .unwrap_or_else(|| panic!("{key} missing in {summary}"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn linear_heat_ten_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "run.cfg", "problem = linear_heat\nttol = 1e-3\nstol = 1e-3\np = 3\nr0 = 1\nk0 = 0.01\nsnapshot_every = 4\n");
    let o = heatdg(&["run", &cfg, "--max-steps", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = fs::read_to_string(out.join("steps.csv")).unwrap().lines().next().unwrap().to_string();
    let cols: Vec<&str> = header.split(',').collect();
    let rows = csv_rows(&out.join("steps.csv"));
    assert_eq!(rows.len(), 10);
    let col = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    for r in &rows {
        assert_eq!(r[col("delta")].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[col("theta")].parse::<f64>().unwrap(), 1.0);
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary_value(&summary, "N"), "10");
    assert_eq!(summary_value(&summary, "termination"), "max_steps");
    assert_eq!(String::from_utf8_lossy(&o.stdout), summary);
    for m in [0, 4, 8, 10] {
        assert!(out.join(format!("snapshots/step_{m:06}.mesh")).exists(), "{m}");
        assert!(out.join(format!("snapshots/step_{m:06}.field")).exists(), "{m}");
    }
    assert!(out.join("config.txt").exists());
}

#[test]
fn blowup_summary_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(dir.path(), "b.cfg", &format!("ttol = 1e-4\nstol = 1e-4\np = 6\nr0 = 2\nk0 = 0.01\nout = {}\n", out.display()));
    let o = heatdg(&["run", &cfg]);
    assert!(o.status.success());
    let summary = String::from_utf8_lossy(&o.stdout).to_string();
    assert_eq!(summary_value(&summary, "termination"), "no_root");
    let rows = csv_rows(&out.join("steps.csv"));
    let n = rows.len();
    let (t0, u0): (f64, f64) = (rows[n - 2][1].parse().unwrap(), rows[n - 2][5].parse().unwrap());
    let (t1, u1): (f64, f64) = (rows[n - 1][1].parse().unwrap(), rows[n - 1][5].parse().unwrap());
    let t_inf = (t1 * u1 - t0 * u0) / (u1 - u0);
    let reported: f64 = summary_value(&summary, "T_inf").parse().unwrap();
    assert!((t_inf - reported).abs() <= 1e-12 * reported);
    assert_eq!(summary_value(&summary, "N"), n.to_string());
    assert_eq!(summary_value(&summary, "t_N"), rows[n - 1][1]);
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "problem = cubic\nttol = 1e-4\nstol = 1e-4\np = 4\nmax_steps = 12\n");
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(heatdg(&["run", &cfg, "--out", out.to_str().unwrap()]).status.success());
        csvs.push(fs::read(out.join("steps.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn ttol_sweep_extends_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", "problem = quadratic_gaussian\np = 8\nr0 = 2\nk0 = 0.01\n");
    let mut t_n = Vec::new();
    for tol in ["1e-3", "1e-5", "1e-7"] {
        let out = dir.path().join(tol);
        let o = heatdg(&["run", &cfg, "--ttol", tol, "--stol", tol, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        t_n.push(summary_value(&String::from_utf8_lossy(&o.stdout), "t_N").parse::<f64>().unwrap());
    }
    assert!(t_n[0] < t_n[1] && t_n[1] < t_n[2], "{t_n:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "ttol: 1e-3\n");
    assert_eq!(heatdg(&["run", &bad, "--out", out]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "unk.cfg", "problem = nope\n");
    assert_eq!(heatdg(&["run", &unknown, "--out", out]).status.code(), Some(2));
    assert_eq!(heatdg(&["run", "/nonexistent/cfg", "--out", out]).status.code(), Some(2));
    let tight = write_config(dir.path(), "tight.cfg", "problem = linear_manufactured\nttol = 1e-300\nstol = 1e12\np = 2\nr0 = 0\nk0 = 0.1\n");
    let o = heatdg(&["run", &tight, "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("time_step_underflow"));
}

#[test]
fn hp_flag_sets_degree_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hp");
    let cfg = write_config(dir.path(), "hp.cfg", "ttol = 1e-4\nstol = 1e-4\np = 6\nr0 = 3\nk0 = 0.01\n");
    let o = heatdg(&["run", &cfg, "--hp", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&out.join("steps.csv"));
    let r: Vec<usize> = rows.iter().map(|row| row[3].parse().unwrap()).collect();
    assert_eq!(r[0], 3);
    assert!(r.windows(2).all(|w| w[1] <= w[0]));
    assert!(*r.last().unwrap() < 3);
    assert!(fs::read_to_string(out.join("config.txt")).unwrap().contains("sigma = 0.47"));
}

#[test]
fn verify_suites() {
    let o = heatdg(&["verify", "basis"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("criterion  1 PASS lifting_identity"), "{text}");
    assert_eq!(heatdg(&["verify", "nope"]).status.code(), Some(2));
}
