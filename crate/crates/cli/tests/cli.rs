use std::path::Path;
use std::process::{Command, Output};

fn isarsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isarsim")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = isarsim(&["simulate", "--out", p(&dir.path().join("x.bin"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--model"));
}

#[test]
fn offset_beyond_spacing_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("x.bin");
    let out = isarsim(&["simulate", "--model", "builtin:cube", "--radars", "4", "--offset", "90", "--out", p(&bin)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("offset must be < 90"), "{}", stderr(&out));
    assert!(!bin.exists());
}

#[test]
fn simulate_cube_writes_one_noise_free_channel() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("cube.bin");
    let out = isarsim(&[
        "simulate", "--model", "builtin:cube", "--radars", "1", "--offset", "0", "--elevation", "15", "--snr", "201", "--out",
        p(&bin), "--rays", "16",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["channels"], 1);
    assert_eq!(std::fs::metadata(&bin).unwrap().len(), 28 + 19 + 54 * 54 * 8 + 4);
}

#[test]
fn simulate_png_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("tri.bin");
    let out = isarsim(&[
        "simulate", "--model", "builtin:trihedral", "--radars", "1", "--offset", "45", "--elevation", "30", "--snr", "100",
        "--seed", "9", "--out", p(&bin), "--png", "--rays", "16",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["azimuths_deg"], serde_json::json!([45.0]));
    assert!(dir.path().join("tri_ch0.png").exists());

    let png = dir.path().join("render.png");
    let out = isarsim(&["render", "--input", p(&bin), "--out", p(&png)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(&std::fs::read(&png).unwrap()[1..4], b"PNG");
    let out = isarsim(&["render", "--input", p(&bin), "--channel", "5", "--out", p(&png)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn default_dry_run_counts() {
    let out = isarsim(&["dataset", "--standard", "--dry-run"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("15120 samples"));
    let v = stdout_json(&out);
    assert_eq!(v["samples"], 15120);
    assert_eq!(v["per_noise_level"]["100"], 5040);
}

#[test]
fn smoke_config_dry_run_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.json");
    std::fs::write(
        &cfg,
        r#"{"version": 1, "targets": [{"name": "F16", "model": "builtin:surrogate"}, {"name": "J11", "model": "builtin:surrogate"}],
            "radars": 2, "elevations_deg": [15], "noise_levels_db": [100]}"#,
    )
    .unwrap();
    let out = isarsim(&["dataset", "--config", p(&cfg), "--dry-run"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("360 samples"));
}

#[test]
fn invalid_config_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"version": 1, "targets": [{"name": "F16", "model": "builtin:cube"}], "radars": 9}"#).unwrap();
    let out = isarsim(&["dataset", "--config", p(&cfg), "--dry-run"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("radars"), "{}", stderr(&out));
}

#[test]
fn dataset_build_verify_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(
        &cfg,
        r#"{"version": 1, "targets": [{"name": "MIG29", "model": "builtin:trihedral"}],
            "radars": 8, "elevations_deg": [30], "noise_levels_db": [201], "master_seed": 5,
            "ray": {"rays_per_axis": 8, "max_bounces": 3, "wavelength_m": 0.03}}"#,
    )
    .unwrap();
    let mut bins = Vec::new();
    for w in ["1", "8"] {
        let out_dir = dir.path().join(format!("w{w}"));
        let out = isarsim(&["dataset", "--config", p(&cfg), "--out", p(&out_dir), "--workers", w]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert_eq!(stdout_json(&out)["samples"], 45);
        bins.push(std::fs::read(out_dir.join("dataset.bin")).unwrap());
    }
    assert_eq!(bins[0], bins[1]);

    let out = isarsim(&["info", "--dataset", p(&dir.path().join("w1")), "--verify"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["verified_samples"], 45);

    let png = dir.path().join("s0.png");
    let out = isarsim(&["render", "--input", p(&dir.path().join("w1")), "--index", "0", "--channel", "1", "--out", p(&png)]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn failed_dataset_run_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dark.json");
    // Cube faces are never specular from 15° elevation at these aspects.
    std::fs::write(
        &cfg,
        r#"{"version": 1, "targets": [{"name": "F15", "model": "builtin:cube"}],
            "radars": 8, "elevations_deg": [15], "noise_levels_db": [100],
            "ray": {"rays_per_axis": 8, "max_bounces": 1, "wavelength_m": 0.03}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = isarsim(&["dataset", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("zero energy"), "{}", stderr(&out));
    let left: Vec<_> = std::fs::read_dir(&out_dir).map(|d| d.filter_map(Result::ok).collect()).unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn validate_slicy_single_elevation() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = isarsim(&["validate-slicy", "--out", p(dir.path()), "--elevations", "15", "--report", p(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let pngs = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png")).count();
    assert_eq!(pngs, 8);
    assert!(dir.path().join("slicy_e15_r315.png").exists());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn make_model_exports_stl() {
    let dir = tempfile::tempdir().unwrap();
    let stl = dir.path().join("slicy.stl");
    let out = isarsim(&["make-model", "--name", "slicy", "--out", p(&stl)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["faces"], 6400);
    assert_eq!(std::fs::metadata(&stl).unwrap().len(), 84 + 50 * 6400);

    let out = isarsim(&["simulate", "--model", p(&stl), "--elevation", "30", "--rays", "16", "--out", p(&dir.path().join("s.bin"))]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = isarsim(&["make-model", "--name", "nope", "--out", p(&stl)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn info_prints_defaults() {
    let out = isarsim(&["info"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["image_size"], 54);
    assert_eq!(v["class_table"][6], "EF2000");
}
