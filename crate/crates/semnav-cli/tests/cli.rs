//! CLI contract tests: subcommands, artifacts, exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn semnav_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_semnav"))
}

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run_cli(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(semnav_bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("semnav binary runs")
}

#[test]
fn run_chair_scenario_produces_all_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("chair.json");
    let result = run_cli(
        &["run", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()],
        out.path(),
    );
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    for name in [
        "metric.pgm",
        "metric.json",
        "semantic.pgm",
        "semantic.json",
        "costmap.pgm",
        "costmap.json",
        "registry.json",
        "paths.csv",
        "report.json",
    ] {
        assert!(out.path().join(name).exists(), "{name} missing");
    }
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("COLLIDED"), "stdout: {stdout}");
    assert!(stdout.contains("collision-free"), "stdout: {stdout}");
}

#[test]
fn missing_scene_file_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "schema": 1,
        "scene": "nowhere/missing_scene.json",
        "seed": 1,
        "trajectory": { "waypoints": [ { "x": 0.5, "y": 0.5 } ] },
        "planner": { "start": [0.5, 0.5], "goal": [1.5, 0.5] }
    });
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, config.to_string()).unwrap();
    let result = run_cli(&["run", config_path.to_str().unwrap()], dir.path());
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("missing_scene.json"),
        "diagnostic must name the path, got: {stderr}"
    );
}

#[test]
fn fixed_seed_reruns_are_byte_identical() {
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("coffee_table.json");
    for out in [&out_a, &out_b] {
        let result = run_cli(
            &["run", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()],
            out.path(),
        );
        assert!(result.status.success());
    }
    let a = std::fs::read(out_a.path().join("registry.json")).unwrap();
    let b = std::fs::read(out_b.path().join("registry.json")).unwrap();
    assert_eq!(a, b, "registry.json differs across identical seeded runs");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("chair.json");
    let result = run_cli(
        &[
            "run",
            config.to_str().unwrap(),
            "--seed",
            "777",
            "--out",
            out.path().to_str().unwrap(),
        ],
        out.path(),
    );
    assert!(result.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["seed"], 777);
}

#[test]
fn eval_renders_a_table_and_csv() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("desk.json");
    assert!(run_cli(
        &["run", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()],
        out.path(),
    )
    .status
    .success());

    let report = out.path().join("report.json");
    let csv = out.path().join("eval.csv");
    let result = run_cli(
        &[
            "eval",
            report.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ],
        out.path(),
    );
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("desk"));
    assert!(stdout.contains("COLLIDED"));
    let csv_text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(csv_text.lines().count(), 2);

    // no reports: usage error
    let empty = run_cli(&["eval"], out.path());
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn render_map_writes_a_ppm_with_overlays() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("chair.json");
    assert!(run_cli(
        &["run", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()],
        out.path(),
    )
    .status
    .success());

    let image = out.path().join("costmap.ppm");
    let result = run_cli(
        &[
            "render-map",
            out.path().join("costmap.pgm").to_str().unwrap(),
            "-o",
            image.to_str().unwrap(),
            "--paths",
            out.path().join("paths.csv").to_str().unwrap(),
            "--registry",
            out.path().join("registry.json").to_str().unwrap(),
        ],
        out.path(),
    );
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let bytes = std::fs::read(&image).unwrap();
    assert!(bytes.starts_with(b"P6\n"));
    // both path colors present in the overlay
    let body = &bytes[b"P6\n160 120\n255\n".len()..];
    let has = |rgb: [u8; 3]| body.chunks(3).any(|px| px == rgb);
    assert!(has([220, 40, 40]), "metric path color missing");
    assert!(has([30, 120, 220]), "semantic path color missing");

    // corrupt raster: config error exit code
    let bad = out.path().join("bad.pgm");
    std::fs::write(&bad, b"P2\n1 1\n255\n0").unwrap();
    let result = run_cli(
        &["render-map", bad.to_str().unwrap(), "-o", image.to_str().unwrap()],
        out.path(),
    );
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn metric_only_run_skips_semantic_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("sofa.json");
    let result = run_cli(
        &[
            "run",
            config.to_str().unwrap(),
            "--metric-only",
            "--out",
            out.path().to_str().unwrap(),
        ],
        out.path(),
    );
    assert!(result.status.success());
    assert!(out.path().join("metric.pgm").exists());
    assert!(out.path().join("report.json").exists());
    assert!(!out.path().join("semantic.pgm").exists());
    assert!(!out.path().join("costmap.pgm").exists());
    assert!(!out.path().join("registry.json").exists());
}
