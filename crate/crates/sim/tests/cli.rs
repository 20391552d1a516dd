use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ibvs_sim::scenario_file::{read_scenario, write_scenario};
use tempfile::TempDir;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn ibvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibvs")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn nominal_run_passes_and_writes_files() {
    let dir = TempDir::new().unwrap();
    let nominal = scenarios().join("nominal.json");
    let out = ibvs(&["run", path(&nominal), "--out", path(dir.path()), "--plots"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
    for f in ["nominal.csv", "nominal.report", "nominal_position.svg", "nominal_velocity.svg", "nominal_features.svg", "nominal_flow.svg"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let report = fs::read_to_string(dir.path().join("nominal.report")).unwrap();
    assert!(report.starts_with("name\tvalue\tthreshold\tresult\n"));
    assert!(!report.contains("FAIL"));
}

#[test]
fn plots_are_byte_stable() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let s = scenarios().join("crossing.json");
    for d in [&a, &b] {
        let out = ibvs(&["run", path(&s), "--out", path(d.path()), "--plots"]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    }
    for f in ["crossing_position.svg", "crossing_flow.svg", "crossing.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let nominal = fs::read_to_string(scenarios().join("nominal.json")).unwrap();
    let broken = nominal.replacen("\"mass\": 1.676,", "", 1);
    assert_ne!(broken, nominal);
    let file = dir.path().join("broken.json");
    fs::write(&file, broken).unwrap();
    let out = ibvs(&["run", path(&file), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("vehicle.mass"), "{}", text(&out.stderr));
}

#[test]
fn invalid_value_names_the_field() {
    let dir = TempDir::new().unwrap();
    let mut file = read_scenario(&scenarios().join("nominal.json")).unwrap();
    file.vehicle.mass = -1.0;
    let p = dir.path().join("negative.json");
    write_scenario(&file, &p).unwrap();
    let out = ibvs(&["validate-gains", path(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("vehicle.mass"), "{}", text(&out.stderr));
}

#[test]
fn no_checks_forces_success_but_keeps_report() {
    let dir = TempDir::new().unwrap();
    let mut file = read_scenario(&scenarios().join("nominal.json")).unwrap();
    file.sim.duration = 3.0;
    let p = dir.path().join("short.json");
    write_scenario(&file, &p).unwrap();

    let checked = ibvs(&["run", path(&p), "--out", path(dir.path())]);
    assert_eq!(checked.status.code(), Some(1));
    assert!(text(&checked.stderr).contains("crossing.completed"));

    fs::remove_file(dir.path().join("short.report")).unwrap();
    let unchecked = ibvs(&["run", path(&p), "--out", path(dir.path()), "--no-checks"]);
    assert_eq!(unchecked.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("short.report")).unwrap();
    assert!(report.contains("FAIL"));
}

#[test]
fn sweep_of_one_matches_run() {
    let dir = TempDir::new().unwrap();
    let nominal = scenarios().join("nominal.json");
    let sweep = dir.path().join("one.json");
    fs::write(&sweep, format!(r#"{{"base": {:?}, "starts": [[-2.0, 0.1, -1.82]]}}"#, path(&nominal))).unwrap();

    let run_dir = dir.path().join("run");
    let sweep_dir = dir.path().join("sweep");
    assert_eq!(ibvs(&["run", path(&nominal), "--out", path(&run_dir)]).status.code(), Some(0));
    let out = ibvs(&["sweep", path(&sweep), "--out", path(&sweep_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("# passed 1/1"));

    let a = fs::read(run_dir.join("nominal.csv")).unwrap();
    let b = fs::read(sweep_dir.join("run_000/run.csv")).unwrap();
    assert!(a == b, "sweep log differs from the single run");
    assert_eq!(
        fs::read_to_string(run_dir.join("nominal.report")).unwrap(),
        fs::read_to_string(sweep_dir.join("run_000/run.report")).unwrap()
    );
    assert!(sweep_dir.join("summary.tsv").is_file());
}

#[test]
fn sweep_rejects_start_in_front_of_the_wall() {
    let dir = TempDir::new().unwrap();
    let sweep = dir.path().join("bad.json");
    let nominal = scenarios().join("nominal.json");
    fs::write(&sweep, format!(r#"{{"base": {:?}, "starts": [[-2.0, 0.0, -1.8], [-0.5, 0.0, -1.8]]}}"#, path(&nominal))).unwrap();
    let out = ibvs(&["sweep", path(&sweep), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("starts[1]") && err.contains("d_o(0) > 0"), "{err}");
    assert!(!dir.path().join("run_000").exists());
}

#[test]
fn check_accepts_a_clean_log_and_rejects_a_corrupted_one() {
    let dir = TempDir::new().unwrap();
    let nominal = scenarios().join("nominal.json");
    assert_eq!(ibvs(&["run", path(&nominal), "--out", path(dir.path())]).status.code(), Some(0));
    let log = dir.path().join("nominal.csv");
    assert_eq!(ibvs(&["check", path(&log)]).status.code(), Some(0));

    // the vehicle teleports below the pad in one sample
    let original = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = original.lines().map(str::to_string).collect();
    let k = lines.len() / 2;
    let mut fields: Vec<String> = lines[k].split(',').map(str::to_string).collect();
    fields[4] = "5.0e0".into();
    fields[37] = "-5.0e0".into();
    lines[k] = fields.join(",");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = ibvs(&["check", path(&bad)]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("landing.min_d_t"), "{}", text(&out.stdout));

    // a truncated row is a format error
    lines[k].truncate(20);
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = ibvs(&["check", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains(&format!("line {}", k + 1)), "{}", text(&out.stderr));
}

#[test]
fn validate_gains_reports_the_window_condition() {
    let nominal = scenarios().join("nominal.json");
    let ok = ibvs(&["validate-gains", path(&nominal)]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(text(&ok.stdout).contains("PASS k_d²/k_p = 0.64 > 0.50"), "{}", text(&ok.stdout));

    let wide = ibvs(&["validate-gains", path(&nominal), "--r-w", "1.4"]);
    assert_eq!(wide.status.code(), Some(1));
    assert!(text(&wide.stdout).contains("FAIL k_d²/k_p = 0.64 ≤ 0.70 (requires k_d²/k_p > r_w/2"));
}

#[test]
fn validate_gains_uses_the_scenario_disturbance() {
    let out = ibvs(&["validate-gains", path(&scenarios().join("vertical_disturbance.json")), "--r-w", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("PASS φ*_t = 0.09 ≥ 0.07"), "{}", text(&out.stdout));
}

#[test]
fn flow_oracle_prints_the_error_line() {
    let out = ibvs(&["flow-oracle", "--trials", "3", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("relative error <= 2% in all trials: PASS"), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.ends_with("\tPASS")).count(), 3);

    let bad = ibvs(&["flow-oracle", "--cap-deg", "95"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_an_input_error() {
    assert_eq!(ibvs(&["fly"]).status.code(), Some(2));
    assert_eq!(ibvs(&["run", "/nonexistent/scenario.json"]).status.code(), Some(2));
}

#[test]
fn preset_round_trips_through_run() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("landing.json");
    assert_eq!(ibvs(&["preset", "landing", "--out", path(&p)]).status.code(), Some(0));
    let out = ibvs(&["run", path(&p), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert_eq!(ibvs(&["preset", "hover"]).status.code(), Some(2));
}
