use std::path::{Path, PathBuf};
use std::process::Command;

use nanoflow::io::output::{read_snapshot_csv, RunReport, RunStatus, TIMESERIES_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_nanoflow");

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn small_config(dir: &Path, tweak: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(shipped("regular_heterogeneous.toml")).unwrap();
    let text = text
        .replace("nx = 60", "nx = 12")
        .replace("ny = 20", "ny = 4")
        .replace("rate_pv_per_year = 0.1", "rate_pv_per_year = 1.0")
        .replace("dt_days = 0.025", "dt_days = 0.25");
    let path = dir.join("run.toml");
    std::fs::write(&path, tweak(text)).unwrap();
    path
}

fn run(args: &[&std::ffi::OsStr]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn run_writes_audited_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |t| t);
    let out = dir.path().join("out");
    let status = run(&[
        "run".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
        "--until-pvi".as_ref(),
        "0.01".as_ref(),
        "--snapshot-every-pvi".as_ref(),
        "0.005".as_ref(),
    ]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));

    let report = RunReport::read(&out.join("run_report.json")).unwrap();
    assert_eq!(report.status, RunStatus::Completed);
    for f in &report.files {
        assert!(out.join(&f.file).exists(), "{}", f.file);
    }

    // ledger identities hold on every row of the reread time series
    let text = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
    let cols: Vec<&str> = TIMESERIES_HEADER.split(',').collect();
    let at = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    let mut rows = 0;
    let mut last_time = 0.0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let water = v[at("water_in_place")] - v[at("water_initial")] - v[at("water_injected")]
            + v[at("water_produced")];
        assert!(water.abs() <= 1e-8 * v[at("water_initial")].max(v[at("water_injected")]));
        let particles = v[at("particles_suspended")]
            + v[at("particles_deposited")]
            + v[at("particles_entrapped")]
            + v[at("particles_produced")]
            - v[at("particles_injected")];
        assert!(particles.abs() <= 1e-6 * v[at("particles_injected")]);
        assert!(v[at("time_s")] > last_time);
        last_time = v[at("time_s")];
        rows += 1;
    }
    assert_eq!(rows, report.steps);

    let last = report.files.iter().filter(|f| f.file.ends_with(".csv") && f.file.starts_with("snapshot")).last().unwrap();
    let table = read_snapshot_csv(&out.join(&last.file)).unwrap();
    assert_eq!(table.ij.len(), 48);
    assert!(table.field("C").unwrap().iter().any(|&c| c > 0.0));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["run".as_ref(), "--out".as_ref(), "x".as_ref()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |t| t.replace("swr = 0.001", "swr = 0.6").replace("snr = 0.001", "snr = 0.6"));
    let out = run(&[
        "run".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out".as_ref(),
        dir.path().join("out").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("S_wr + S_nr < 1"));
}

#[test]
fn forced_non_convergence_exits_two_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |t| {
        t.replace("eps_s = 1e-4", "eps_s = 1e-30")
            .replace("max_outer_iterations = 50", "max_outer_iterations = 1")
    });
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out".as_ref(),
        out_dir.as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"outer_iterations\": 1"));
    let report = RunReport::read(&out_dir.join("run_report.json")).unwrap();
    assert_eq!(report.status, RunStatus::Failed);
}

#[test]
fn seed_override_changes_random_field_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("random.toml");
    let go = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "run".as_ref(),
            "--config".as_ref(),
            cfg.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
            "--until-pvi".as_ref(),
            "0".as_ref(),
            "--seed".as_ref(),
            seed.as_ref(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        RunReport::read(&out.join("run_report.json")).unwrap()
    };
    let (a, b, c) = (go("a", "1"), go("b", "1"), go("c", "2"));
    assert_eq!(a.steps, 0);
    assert_eq!(a.checksums(), b.checksums());
    assert_ne!(a.checksums(), c.checksums());
}
