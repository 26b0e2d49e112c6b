use std::path::Path;
use std::process::Command;

fn sim(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_untangle-sim")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn run_into(dir: &Path) -> String {
    sim(&["run", "--tiers", "1-2", "--policies", "H,HLS", "--trials", "6", "--seed", "5", "--out", dir.to_str().unwrap()]);
    std::fs::read_to_string(dir.join("summary.csv")).unwrap()
}

#[test]
fn run_writes_reproducible_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let csv = run_into(a.path());
    assert_eq!(csv, run_into(b.path()));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let trials = std::fs::read_to_string(a.path().join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 2 * 2 * 6);
    for line in trials.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let frames = std::fs::read_dir(a.path().join("frames")).unwrap().count();
    assert!(frames > 0);
}

#[test]
fn rollout_writes_log_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    sim(&["rollout", "--template", "overhand", "--seed", "3", "--oracle", "--frames", "--out", out]);
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result["success"], true);
    let actions = std::fs::read_to_string(dir.path().join("actions.jsonl")).unwrap();
    let n = actions.lines().count();
    assert_eq!(result["total_actions"], n);
    let svgs = std::fs::read_dir(dir.path().join("frames")).unwrap().count();
    assert!(svgs >= n, "{svgs} frames for {n} actions");
}

#[test]
fn gen_crops_writes_images_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    sim(&["gen-crops", "--n", "4", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    for i in 0..4 {
        assert!(dir.path().join(format!("crop_{i:05}.pgm")).exists());
        let label: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("crop_{i:05}.json"))).unwrap()).unwrap();
        let theta = label["theta"].as_f64().unwrap();
        assert!((0.0..180.0).contains(&theta));
    }
}

#[test]
fn bad_tiers_are_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_untangle-sim")).args(["run", "--tiers", "0..7"]).output().unwrap();
    assert!(!out.status.success());
}
