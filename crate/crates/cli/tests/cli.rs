use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splatsched::scene::load_dataset;
use splatsched::CullingMode;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splatsched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn splatsched")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

/// Small aerial scene in `dir/scene`.
fn scene(dir: &Path, views: usize) -> PathBuf {
    let out = dir.join("scene");
    ok(&[
        "gen-scene", "aerial", "--points", "20000", "--views", &views.to_string(), "--seed", "3", "--out", p(&out),
    ]);
    out.join("dataset.json")
}

#[test]
fn gen_scene_writes_a_loadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(&["gen-scene", "aerial", "--points", "5000", "--views", "24", "--seed", "7", "--out", p(&out)]);
    assert!(out.join("points.bin").exists());
    assert!(out.join("config.json").exists());
    let d = load_dataset(&out.join("dataset.json")).unwrap();
    assert_eq!(d.cloud.len(), 5000);
    assert_eq!(d.views.len(), 24);
    assert!(!d.is_temporal());
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen-scene", "aerial", "--points", "100", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn temporal_kind_flag_gives_presence_and_spatiotemporal_culling() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    ok(&["gen-scene", "--kind", "temporal", "--points", "2000", "--views", "16", "--out", p(&out)]);
    let header = json(out.join("dataset.json"));
    assert_eq!(header["temporal"], true);
    assert_eq!(header["profile"]["culling_mode"], "SpatioTemporal");
    let d = load_dataset(&out.join("dataset.json")).unwrap();
    assert!(d.cloud.presence().is_some());
    assert_eq!(d.profile.culling_mode, CullingMode::SpatioTemporal);
}

#[test]
fn unknown_profile_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen-scene", "street", "--points", "100", "--views", "4", "--profile", "nope", "--out", p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_part_partition_has_no_cut() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 16);
    let out = dir.path().join("p");
    ok(&[
        "partition", "--dataset", p(&ds), "--machines", "1", "--gpus-per-machine", "1", "--group-size", "512",
        "--out", p(&out),
    ]);
    let q = json(out.join("quality.json"));
    assert_eq!(q["edge_cut"], 0);
    let csv = fs::read_to_string(out.join("partition.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("group_id,machine,gpu"));
    assert!(lines.all(|l| l.ends_with(",0,0")));
}

#[test]
fn partition_is_deterministic_and_balanced() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 32);
    let args = |out: &Path| {
        ok(&[
            "partition", "--dataset", p(&ds), "--machines", "2", "--gpus-per-machine", "2", "--group-size", "256",
            "--epsilon", "0.05", "--seed", "5", "--out", p(out),
        ]);
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    args(&a);
    args(&b);
    assert_eq!(
        fs::read(a.join("partition.csv")).unwrap(),
        fs::read(b.join("partition.csv")).unwrap()
    );
    let balance = json(a.join("quality.json"))["balance"].as_f64().unwrap();
    assert!(balance <= 1.05f64.powi(2) + 1e-12, "{balance}");
    assert_eq!(json(a.join("config.json"))["seed"], 5);
}

#[test]
fn config_file_is_used_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 16);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        serde_json::json!({
            "dataset": ds, "machines": 2, "gpus_per_machine": 2, "group_size": 256,
            "batch_size": 4, "strategy": "random", "seed": 1
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--config", p(&cfg), "--seed", "9", "--out", p(&out)]);
    let echoed = json(out.join("config.json"));
    assert_eq!(echoed["seed"], 9);
    assert_eq!(echoed["strategy"], "random");
    let report = json(out.join("report.json"));
    assert_eq!(report["strategy"], "random");
    assert_eq!(report["summary"]["iterations"], 4);
    let csv = fs::read_to_string(out.join("iterations.csv")).unwrap();
    assert!(csv.starts_with("iter,gpu,send_intra,send_inter,recv_intra,recv_inter,comp,est_time"));

    // rerunning from the echoed config alone reproduces the report
    let again = dir.path().join("again");
    ok(&["simulate", "--config", p(&out.join("config.json")), "--out", p(&again)]);
    assert_eq!(
        fs::read(out.join("report.json")).unwrap(),
        fs::read(again.join("report.json")).unwrap()
    );
}

#[test]
fn unknown_config_field_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"machine": 2}"#).unwrap();
    let out = run(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn indivisible_batch_is_a_constraint_error() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 16);
    let out = run(&["simulate", "--dataset", p(&ds), "--batch-size", "7", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(4));
    let missing = run(&["simulate", "--dataset", p(&dir.path().join("nope.json")), "--out", p(dir.path())]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn compare_reports_reduction_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 32);
    let out = dir.path().join("cmp");
    ok(&[
        "compare", "--dataset", p(&ds), "--machines", "2", "--gpus-per-machine", "2", "--group-size", "256",
        "--batch-size", "8", "--out", p(&out),
    ]);
    for sub in ["random", "locality_aware"] {
        assert!(out.join(sub).join("report.json").exists());
        assert!(out.join(sub).join("iterations.csv").exists());
    }
    let r = json(out.join("reduction.json"))["reduction_percent"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&r), "{r}");
}

#[test]
fn compare_on_one_gpu_reduces_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 16);
    let out = dir.path().join("cmp");
    ok(&[
        "compare", "--dataset", p(&ds), "--machines", "1", "--gpus-per-machine", "1", "--group-size", "512",
        "--batch-size", "4", "--out", p(&out),
    ]);
    let red = json(out.join("reduction.json"));
    assert_eq!(red["reduction_percent"].as_f64(), Some(0.0));
    assert_eq!(red["random_inter_points"], 0);
    assert_eq!(red["locality_aware_inter_points"], 0);
}

#[test]
fn place_replays_a_saved_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let ds = scene(dir.path(), 16);
    let first = dir.path().join("place");
    let topo = ["--machines", "2", "--gpus-per-machine", "2"];
    let mut args = vec!["place", "--dataset", p(&ds), "--group-size", "256", "--batch-size", "4", "--out", p(&first)];
    args.extend(topo);
    ok(&args);
    let objective = json(first.join("objective.json"));
    assert_eq!(objective["send"].as_array().unwrap().len(), 4);

    let replay = dir.path().join("replay");
    let access = first.join("access.json");
    let mut args = vec!["place", "--matrix", p(&access), "--out", p(&replay)];
    args.extend(topo);
    ok(&args);
    assert_eq!(
        fs::read(first.join("placement.csv")).unwrap(),
        fs::read(replay.join("placement.csv")).unwrap()
    );
    assert_eq!(json(replay.join("objective.json")), objective);

    let mut args = vec!["place", "--dataset", p(&ds), "--batch-size", "4", "--iteration", "99", "--out", p(&replay)];
    args.extend(topo);
    assert_eq!(run(&args).status.code(), Some(2));
}
