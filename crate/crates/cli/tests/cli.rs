use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use depthbox_core::fusion::SceneInstances;
use depthbox_core::projection::{Box3D, ObjectCloud, ObjectInstance};
use depthbox_core::scene_io::{read_ground_truth, write_instances};
use nalgebra::Vector3;

fn depthbox(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthbox"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = depthbox(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no '{key}' in {stdout}"))
        .trim()
        .to_string()
}

/// The three numbers on the table's mean row, in printed order.
fn mean_row(stdout: &str) -> Vec<f64> {
    let line = stdout
        .lines()
        .find(|l| l.starts_with("mean (mAP/50/25)"))
        .unwrap();
    line["mean (mAP/50/25)".len()..]
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect()
}

/// Writes the scene's ground truth as if it were a prediction, shifted by `offset`.
fn gt_as_prediction(scene: &Path, out: &Path, offset: f64, label: Option<&str>) {
    let gt = read_ground_truth(&scene.join("gt")).unwrap();
    let instances = gt
        .instances
        .iter()
        .map(|g| {
            let points: Vec<_> = g
                .points
                .iter()
                .map(|p| p + Vector3::new(offset, 0.0, 0.0))
                .collect();
            ObjectInstance {
                bbox: Box3D::from_points(&points).unwrap(),
                cloud: ObjectCloud {
                    points,
                    label: label.unwrap_or(&g.label).to_string(),
                    score: 1.0,
                    source_frames: BTreeSet::new(),
                },
            }
        })
        .collect();
    write_instances(&SceneInstances { instances }, out).unwrap();
}

#[test]
fn two_cube_scene_yields_two_instances() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    let out = ok(&["detect", "scene", "pred"], d);
    assert_eq!(field(&out, "detections in:"), "2");
    assert_eq!(field(&out, "instances out:"), "2");
    assert!(d.join("pred/boxes.json").is_file());
    assert!(d.join("pred/instance_000.ply").is_file() && d.join("pred/instance_001.ply").is_file());
}

#[test]
fn detect_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    ok(&["detect", "scene", "a"], d);
    ok(
        &[
            "detect",
            "scene",
            "b",
            "--tau",
            "2.0",
            "--merge-threshold",
            "0.8",
            "--voxel-size",
            "0.02",
        ],
        d,
    );
    for f in ["boxes.json", "instance_000.ply", "instance_001.ply"] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn no_detections_is_success() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("noise.toml"), "drop_prob = 1.0\n").unwrap();
    ok(
        &[
            "synth",
            "--preset",
            "two-cubes",
            "--out",
            "scene",
            "--noise",
            "noise.toml",
        ],
        d,
    );
    let out = ok(&["detect", "scene", "pred"], d);
    assert_eq!(field(&out, "instances out:"), "0");
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["detect", "scene", "pred", "--tau", "0"][..],
        &["detect", "scene", "pred", "--tau=-1"][..],
        &["detect", "scene", "pred", "--merge-threshold", "1.5"][..],
        &["bench", "scene", "--repeats", "0"][..],
    ] {
        let out = depthbox(args, d);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_supplies_and_checks_keys() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    fs::write(d.join("good.toml"), "tau = 3.0\nmerge_threshold = 0.9\n").unwrap();
    ok(&["detect", "scene", "pred", "--config", "good.toml"], d);
    fs::write(d.join("bad.toml"), "tau = -2.0\n").unwrap();
    let out = depthbox(&["detect", "scene", "pred", "--config", "bad.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
}

#[test]
fn invalid_scene_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = depthbox(&["detect", "missing", "pred"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn eval_identity_and_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    gt_as_prediction(&d.join("scene"), &d.join("same"), 0.0, None);
    gt_as_prediction(&d.join("scene"), &d.join("far"), 50.0, None);
    assert_eq!(
        mean_row(&ok(&["eval", "--pred", "same", "--gt", "scene"], d)),
        vec![100.0; 3]
    );
    assert_eq!(
        mean_row(&ok(&["eval", "--pred", "far", "--gt", "scene/gt"], d)),
        vec![0.0; 3]
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("same/report.json")).unwrap()).unwrap();
    assert_eq!(report["map"], 1.0);
    assert!(d.join("same/report.txt").is_file());
}

#[test]
fn eval_rejects_unknown_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    gt_as_prediction(&d.join("scene"), &d.join("pred"), 0.0, Some("sofa"));
    let out = depthbox(&["eval", "--pred", "pred", "--gt", "scene"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sofa"));
}

#[test]
fn degraded_predictions_print_ordered_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("noise.toml"),
        "seed = 5\nbox_jitter_px = 8.0\nmask_erode_px = 4\ndrop_prob = 0.6\nscore_sigma = 0.3\n",
    )
    .unwrap();
    ok(
        &[
            "synth",
            "--preset",
            "three-boxes",
            "--out",
            "scene",
            "--noise",
            "noise.toml",
        ],
        d,
    );
    ok(&["detect", "scene", "pred"], d);
    let m = mean_row(&ok(
        &[
            "eval", "--pred", "pred", "--gt", "scene", "--pred", "pred", "--gt", "scene",
        ],
        d,
    ));
    assert!(m[2] >= m[1] && m[1] >= m[0], "{m:?}");
}

#[test]
fn bench_prints_rows_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--preset", "two-cubes", "--out", "scene"], d);
    let out = ok(&["bench", "scene", "--repeats", "3"], d);
    let rows: Vec<&str> = out
        .lines()
        .filter(|l| l.starts_with(['1', '2', '3']) || l.starts_with("mean"))
        .collect();
    assert_eq!(rows.len(), 4, "{out}");
    // one view: per-scene equals per-view
    let cols: Vec<&str> = rows[3].split_whitespace().collect();
    assert_eq!(cols[1], cols[2]);
    assert!(out.contains("# hardware:"));
}

#[test]
fn navsim_targets_detected_box() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("boxes.json"),
        r#"{"instances": [{"label": "table", "score": 0.9, "min": [3.8, -0.2, 0.0], "max": [4.2, 0.2, 0.7], "point_count": 10}]}"#,
    )
    .unwrap();
    fs::write(
        d.join("world.json"),
        r#"{"obstacles": [{"type": "circle", "center": [2.0, 3.0], "radius": 0.3}], "target": [1.0, 1.0]}"#,
    )
    .unwrap();
    let out = ok(
        &[
            "navsim",
            "--world",
            "world.json",
            "--boxes",
            "boxes.json",
            "--label",
            "table",
            "--start",
            "0,0,0",
            "--out",
            "traj.csv",
        ],
        d,
    );
    assert_eq!(field(&out, "outcome:"), "reached");
    let csv = fs::read_to_string(d.join("traj.csv")).unwrap();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(((last[1] - 4.0).powi(2) + last[2].powi(2)).sqrt() <= 0.1);
    let missing = depthbox(
        &[
            "navsim",
            "--world",
            "world.json",
            "--boxes",
            "boxes.json",
            "--label",
            "sofa",
            "--out",
            "t.csv",
        ],
        d,
    );
    assert!(!missing.status.success());
}

#[test]
fn navsim_column_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &["navsim", "--scenario", "column", "--out", "traj.csv"],
        dir.path(),
    );
    assert_eq!(field(&out, "outcome:"), "reached");
}
