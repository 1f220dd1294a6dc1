use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amphisim_core::sim::dominant_frequency;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amphisim"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn hover_run_writes_one_row_per_stride() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hover.csv");
    let cfg = scenario("hover.toml");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--set",
        "integrator.duration=2",
        "--set",
        "output.stride=20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header.len(), 28);
    assert_eq!(rows.len(), 2000 / 20 + 1);
}

#[test]
fn missing_config_is_an_io_error() {
    let o = run(&["run", "does/not/exist.toml"]);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("does/not/exist.toml"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn bad_override_is_a_config_error_and_divergence_exits_3() {
    let cfg = scenario("hover.toml");
    let o = run(&["run", cfg.to_str().unwrap(), "--set", "integrator.dt=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["run", cfg.to_str().unwrap(), "--set", "no_such_section.x=1"]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = scenario("flapping_test1.toml");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--set",
        "integrator.duration=1",
        "--set",
        "integrator.max_velocity=1e-3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("divergence"));
}

#[test]
fn amplitude_override_reaches_the_wings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flap.csv");
    let cfg = scenario("flapping_test1.toml");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--set",
        "cpg.R=0.2",
        "--set",
        "integrator.duration=4",
        "--set",
        "output.stride=1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    let t = column(&header, &rows, "t");
    for w in ["theta_w1", "theta_w2", "theta_w3"] {
        let th = column(&header, &rows, w);
        let peak = t
            .iter()
            .zip(&th)
            .filter(|(t, _)| **t >= 3.0)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        assert!((peak - 0.2).abs() < 1e-3, "{w} peak {peak}");
    }
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("flapping_test2.toml");
    let paths: Vec<_> = (0..2)
        .map(|i| dir.path().join(format!("r{i}.csv")))
        .collect();
    for p in &paths {
        let o = run(&[
            "run",
            cfg.to_str().unwrap(),
            "-o",
            p.to_str().unwrap(),
            "--set",
            "integrator.duration=3",
        ]);
        assert!(o.status.success());
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn empty_grid_gives_an_empty_summary() {
    let cfg = scenario("hover.toml");
    let o = run(&["sweep", cfg.to_str().unwrap(), "--grid", ""]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("point,status,mean_surge"));
}

#[test]
fn frequency_grid_writes_one_csv_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("flapping_test1.toml");
    let o = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--grid",
        "cpg.f=2.0,3.0",
        "-o",
        dir.path().to_str().unwrap(),
        "--jobs",
        "2",
        "--set",
        "integrator.duration=12",
        "--set",
        "output.stride=5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (i, f) in [2.0, 3.0].into_iter().enumerate() {
        let (header, rows) = read_csv(&dir.path().join(format!("point_{i:04}.csv")));
        let t = column(&header, &rows, "t");
        let th = column(&header, &rows, "theta_w1");
        let start = t.iter().position(|&x| x >= 2.0).unwrap();
        let (peak, res) = dominant_frequency(&th[start..], t[1] - t[0]).unwrap();
        assert!(
            (peak - f).abs() <= res,
            "point {i}: {peak} Hz vs {f} Hz (bin {res})"
        );
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn tail_phase_grid_orders_speed_and_pitch() {
    let cfg = scenario("flapping_test1.toml");
    let o = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--grid",
        "cpg.tail_phase=0,pi",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[3].parse().unwrap(), c[4].parse().unwrap())
        })
        .collect();
    assert!(rows[0].0 > rows[1].0, "speeds {rows:?}");
    assert!(rows[0].1 < rows[1].1, "pitch ranges {rows:?}");
}

#[test]
fn presets_lists_every_behavior() {
    let o = run(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "forward",
        "forward_antiphase",
        "roll",
        "pitch",
        "yaw_pos",
        "yaw_neg",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn validate_passes_clean_and_with_flipped_gyroscopic_sign() {
    let o = run(&["validate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(&["validate", "--set", "vehicle.gyroscopic_sign=-1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("gyroscopic_sign -1"));
}

#[test]
fn validate_names_the_broken_table_invariant() {
    let cfg = scenario("vectored.toml");
    let o = run(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "fluid.water.analytic.cd0=-0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("FAIL")).unwrap();
    assert!(
        line.contains("coefficient_table_water") && line.contains("negative drag"),
        "{line}"
    );
}
