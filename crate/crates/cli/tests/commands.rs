use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coverage_core::sim::TrajectoryLog;
use tempfile::TempDir;

const UNIFORM_N2: &str = r#"{
    "region": {"inner": {"mean": 1.0}, "outer": {"mean": 2.0}},
    "density": {"kind": "uniform"},
    "agents": {"count": 2, "initial_phases": [0.0, 1.0],
               "initial_positions": [[1.5, 0.5], [-1.5, 0.0]]},
    "gains": {"kappa_phi": 0.03, "kappa_p": 0.1},
    "integrator": {"dt": 0.01, "t_end": 2.0, "log_stride": 10},
    "search": {"epsilon_p": 3.141592653589793, "t_epsilon": 5.0},
    "output": {"snapshot_times": [0.0, 1.0]}
}"#;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn coverage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverage"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_bundled_case_study() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let res = coverage(&["run", "--config", s(&scenario("case_study.json")), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 4 * 8 + 3);
    for group in ["phi", "px", "py", "m"] {
        assert_eq!(header.iter().filter(|h| h.starts_with(&format!("{group}_"))).count(), 8);
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
    for t in [0, 4, 8, 12, 100] {
        let svg = fs::read_to_string(out.join(format!("snapshot_t{t}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<line").count(), 8);
        assert_eq!(svg.matches("<circle").count(), 8);
    }
    assert!(out.join("config.json").exists());
}

#[test]
fn csv_cells_parse_back_exactly() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, UNIFORM_N2);
    let out = tmp.path().join("run");
    assert_eq!(code(&coverage(&["run", "--config", s(&config), "--out", s(&out)])), 0);
    let log = TrajectoryLog::from_json(&fs::read_to_string(out.join("trajectory.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    let r = log.last().unwrap();
    assert_eq!(last[0], r.t);
    assert_eq!(last[1..3], r.phases[..]);
    assert_eq!(last[3], r.positions[0].x);
    assert_eq!(last[last.len() - 3..], [r.v, r.j, r.h]);
}

#[test]
fn config_echo_replays_identically() {
    let tmp = TempDir::new().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let cfg = scenario("uniform_n2.json");
    assert_eq!(code(&coverage(&["run", "--config", s(&cfg), "--out", s(&out_a)])), 0);
    let echo = out_a.join("config.json");
    assert_eq!(code(&coverage(&["run", "--config", s(&echo), "--out", s(&out_b)])), 0);
    assert_eq!(
        fs::read(out_a.join("trajectory.csv")).unwrap(),
        fs::read(out_b.join("trajectory.csv")).unwrap()
    );
    assert_eq!(fs::read(&echo).unwrap(), fs::read(out_b.join("config.json")).unwrap());
}

#[test]
fn seed_override_changes_random_start() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario("uniform_n2.json");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let res = coverage(&["run", "--config", s(&cfg), "--out", s(dir), "--seed", seed, "--dt", "0.02"]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
    }
    let read = |d: &PathBuf| fs::read_to_string(d.join("config.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).contains("\"dt\": 0.02"));
}

#[test]
fn coincident_phases_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, &UNIFORM_N2.replace("[0.0, 1.0]", "[0.5, 0.5]"));
    let res = coverage(&["run", "--config", s(&config), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("initial phases not strictly separated"), "{}", stderr(&res));
}

#[test]
fn missing_density_kind_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, &UNIFORM_N2.replace(r#"{"kind": "uniform"}"#, "{}"));
    let res = coverage(&["run", "--config", s(&config), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("density"), "{}", stderr(&res));
}

#[test]
fn snapshot_beyond_horizon_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, &UNIFORM_N2.replace("[0.0, 1.0]}", "[0.0, 3.0]}"));
    let res = coverage(&["run", "--config", s(&config), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("snapshot time out of range"));
}

#[test]
fn search_runs_two_epochs_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, UNIFORM_N2);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let res = coverage(&["search", "--config", s(&config), "--out", s(dir)]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        assert!(String::from_utf8_lossy(&res.stdout).contains("k* = "));
    }
    let epochs = fs::read_to_string(a.join("epochs.csv")).unwrap();
    assert_eq!(epochs.lines().count(), 3);
    assert_eq!(epochs.lines().next().unwrap(), "k,anchor,J,gossip_rounds");
    assert_eq!(epochs, fs::read_to_string(b.join("epochs.csv")).unwrap());
    assert!(a.join("final.json").exists());
}

#[test]
fn search_k_star_overrides_epsilon() {
    let tmp = TempDir::new().unwrap();
    let text = UNIFORM_N2.replace("\"epsilon_p\"", "\"k_star\": 3, \"epsilon_p\"");
    let config = write_config(&tmp, &text);
    let out = tmp.path().join("o");
    assert_eq!(code(&coverage(&["search", "--config", s(&config), "--out", s(&out)])), 0);
    assert_eq!(fs::read_to_string(out.join("epochs.csv")).unwrap().lines().count(), 4);
}

#[test]
fn search_requires_section() {
    let tmp = TempDir::new().unwrap();
    let text = UNIFORM_N2.replace(
        r#""search": {"epsilon_p": 3.141592653589793, "t_epsilon": 5.0},"#,
        "",
    );
    let config = write_config(&tmp, &text);
    let res = coverage(&["search", "--config", s(&config), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("search"));
}

#[test]
fn verify_case_study_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let res = coverage(&["verify", "--config", s(&scenario("case_study.json")), "--out", s(&out)]);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(code(&res), 0, "{report}");
    assert!(report.lines().all(|l| !l.contains("FAIL") && !l.contains("inconclusive")));
}

fn short_log(tmp: &TempDir) -> PathBuf {
    let config = write_config(
        tmp,
        &UNIFORM_N2
            .replace("\"t_end\": 2.0", "\"t_end\": 0.1")
            .replace("[0.0, 1.0]}", "[0.0]}"),
    );
    let out = tmp.path().join("short");
    assert_eq!(code(&coverage(&["run", "--config", s(&config), "--out", s(&out)])), 0);
    out.join("trajectory.json")
}

#[test]
fn verify_short_log_is_inconclusive() {
    let tmp = TempDir::new().unwrap();
    let log = short_log(&tmp);
    let out = tmp.path().join("v");
    let res = coverage(&["verify", "--log", s(&log), "--out", s(&out)]);
    assert_eq!(code(&res), 1);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for name in ["trend_phase_rate", "equitable_partition", "target_convergence"] {
        let line = report.lines().find(|l| l.starts_with(name)).unwrap();
        assert!(line.contains("inconclusive"), "{line}");
    }
}

#[test]
fn verify_forged_negative_workload_fails() {
    let tmp = TempDir::new().unwrap();
    let path = short_log(&tmp);
    let mut log = TrajectoryLog::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    log.records[1].workloads[0] = -1.0;
    fs::write(&path, log.to_json()).unwrap();
    let out = tmp.path().join("v");
    assert_eq!(code(&coverage(&["verify", "--log", s(&path), "--out", s(&out)])), 1);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("workload_positivity") && l.contains("FAIL")));
}

#[test]
fn verify_unreadable_log() {
    let tmp = TempDir::new().unwrap();
    let bogus = write_config(&tmp, "not json");
    let res = coverage(&["verify", "--log", s(&bogus), "--out", s(&tmp.path().join("v"))]);
    assert_eq!(code(&res), 2);
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&coverage(&["verify", "--log", s(&missing), "--out", s(&tmp.path().join("v"))])), 2);
}

#[test]
fn export_csv_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, UNIFORM_N2);
    let run = tmp.path().join("run");
    assert_eq!(code(&coverage(&["run", "--config", s(&config), "--out", s(&run)])), 0);
    let ex = tmp.path().join("ex");
    let log = run.join("trajectory.json");
    assert_eq!(code(&coverage(&["export", "--log", s(&log), "--format", "csv", "--out", s(&ex)])), 0);
    assert_eq!(fs::read(run.join("trajectory.csv")).unwrap(), fs::read(ex.join("trajectory.csv")).unwrap());
}

#[test]
fn export_snapshots() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, UNIFORM_N2);
    let run = tmp.path().join("run");
    assert_eq!(code(&coverage(&["run", "--config", s(&config), "--out", s(&run)])), 0);
    let log = run.join("trajectory.json");

    let beyond = coverage(&["export", "--log", s(&log), "--format", "svg-snapshots", "--out", s(&tmp.path().join("a")), "--times", "5"]);
    assert_eq!(code(&beyond), 2);
    assert!(stderr(&beyond).contains("snapshot time out of range"));

    let empty_dir = tmp.path().join("b");
    let empty = coverage(&["export", "--log", s(&log), "--format", "svg-snapshots", "--out", s(&empty_dir), "--times"]);
    assert_eq!(code(&empty), 0);
    let svgs = fs::read_dir(&empty_dir)
        .map(|d| d.filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count())
        .unwrap_or(0);
    assert_eq!(svgs, 0);

    let dir = tmp.path().join("c");
    let res = coverage(&["export", "--log", s(&log), "--format", "svg-snapshots", "--out", s(&dir), "--times", "0.5,2"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let last = fs::read_to_string(dir.join("snapshot_t2.svg")).unwrap();
    assert!(last.contains("<title>t = 2</title>"), "{last}");
    assert!(dir.join("snapshot_t0.5.svg").exists());
}

#[test]
fn export_default_times_match_run() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(&tmp, UNIFORM_N2);
    let run = tmp.path().join("run");
    assert_eq!(code(&coverage(&["run", "--config", s(&config), "--out", s(&run)])), 0);
    let ex = tmp.path().join("ex");
    let log = run.join("trajectory.json");
    assert_eq!(code(&coverage(&["export", "--log", s(&log), "--format", "svg-snapshots", "--out", s(&ex)])), 0);
    for t in [0, 1] {
        let name = format!("snapshot_t{t}.svg");
        assert_eq!(fs::read(run.join(&name)).unwrap(), fs::read(ex.join(&name)).unwrap());
    }
}

#[test]
fn malformed_export_log() {
    let tmp = TempDir::new().unwrap();
    let bogus = write_config(&tmp, "{\"records\": 3}");
    let res = coverage(&["export", "--log", s(&bogus), "--format", "csv", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 2);
}
