use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beatmotion_core::audio::{encode_wav_i16, FeaturesFile};
use beatmotion_core::choreo::ChoreographyFile;
use beatmotion_core::dataset::DatasetFile;
use beatmotion_core::mocap::parse_poses;
use beatmotion_core::nn::ModelFile;
use beatmotion_core::synth::{oscillation_movements, ClickTrack};

fn beatmotion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beatmotion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
fn ok(args: &[&str]) {
    let out = beatmotion(args);
    assert!(out.status.success(), "{args:?}: {}", stderr(&out));
}

#[track_caller]
fn fails(args: &[&str]) -> String {
    let out = beatmotion(args);
    assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
    stderr(&out)
}

fn write_wav(path: &Path, clip: &ClickTrack) {
    let sig = clip.render(0);
    fs::write(path, encode_wav_i16(sig.samples(), sig.sample_rate())).unwrap();
}

fn dataset(dir: &Path) -> PathBuf {
    let path = dir.join("dataset.json");
    let file = DatasetFile::from_movements(&oscillation_movements(100, 11)).unwrap();
    fs::write(&path, file.to_json()).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(beatmotion(&[]).status.code(), Some(2));
    assert_eq!(beatmotion(&["features"]).status.code(), Some(2));
    assert_eq!(beatmotion(&["train", "x.json", "-o", "m.json", "--epochs", "many"]).status.code(), Some(2));
    assert_eq!(beatmotion(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn features_command() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    let out = dir.path().join("features.json");
    write_wav(&wav, &ClickTrack::new(120.0, 6.0));
    ok(&["features", s(&wav), "-o", s(&out)]);
    let file = FeaturesFile::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let features = file.to_features().unwrap();
    assert!((file.bpm - 120.0).abs() < 2.0);
    assert_eq!(features.segments.len(), features.grid.len() - 1);

    let msg = fails(&["features", s(&dir.path().join("missing.wav")), "-o", s(&out)]);
    assert!(msg.contains("missing.wav"), "{msg}");

    let silent = dir.path().join("silent.wav");
    fs::write(&silent, encode_wav_i16(&vec![0.0; 22_050 * 3], 22_050)).unwrap();
    let msg = fails(&["features", s(&silent), "-o", s(&out)]);
    assert!(msg.contains("no beat detected"), "{msg}");
}

#[test]
fn capture_and_dataset_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["synth", "--bpm", "120", "--seconds", "12", "--audio", s(&p("clip.wav")), "--capture", s(&p("cap.jsonl"))]);
    ok(&["features", s(&p("clip.wav")), "-o", s(&p("features.json"))]);
    ok(&["capture", s(&p("cap.jsonl")), "--features", s(&p("features.json")), "-o", s(&p("poses.jsonl"))]);

    let features = FeaturesFile::from_json(&fs::read_to_string(p("features.json")).unwrap()).unwrap();
    let text = fs::read_to_string(p("poses.jsonl")).unwrap();
    let poses = parse_poses(&text).unwrap();
    assert_eq!(poses.len(), features.beats.len());
    assert_eq!(beatmotion_core::mocap::write_poses(&poses), text);

    fs::write(p("bad.conf"), "HeadYaw.min = 1.0\nHeadYaw.max = banana\n").unwrap();
    let msg = fails(&[
        "capture",
        s(&p("cap.jsonl")),
        "--features",
        s(&p("features.json")),
        "--limits",
        s(&p("bad.conf")),
        "-o",
        s(&p("x.jsonl")),
    ]);
    assert!(msg.contains("HeadYaw.max"), "{msg}");

    ok(&["dataset", s(&p("poses.jsonl")), "-o", s(&p("dataset.json"))]);
    let file = DatasetFile::from_json(&fs::read_to_string(p("dataset.json")).unwrap()).unwrap();
    assert_eq!(file.to_movements().unwrap().len(), poses.len() / 2);
}

#[test]
fn capture_reports_malformed_skeleton_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    write_wav(&p("clip.wav"), &ClickTrack::new(120.0, 4.0));
    ok(&["features", s(&p("clip.wav")), "-o", s(&p("features.json"))]);
    fs::write(p("cap.jsonl"), "{\"t\": 0.0, \"joints\": {}}\n").unwrap();
    let msg = fails(&["capture", s(&p("cap.jsonl")), "--features", s(&p("features.json")), "-o", s(&p("o.jsonl"))]);
    assert!(msg.contains("line 1"), "{msg}");
}

#[test]
fn train_writes_log_checkpoints_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let p = |n: &str| dir.path().join(n);

    ok(&["train", s(&data), "-o", s(&p("one.json")), "--epochs", "1"]);
    let rows = csv_rows(&p("one.loss.csv"));
    assert_eq!(rows[0], ["epoch", "reconstruction", "kl", "total"]);
    assert_eq!(rows.len(), 2, "exactly one loss record");
    assert!(p("one.epoch1.json").exists());

    for name in ["a.json", "b.json"] {
        ok(&["train", s(&data), "-o", s(&p(name)), "--epochs", "10", "--seed", "3", "--batch", "16"]);
    }
    assert_eq!(fs::read(p("a.json")).unwrap(), fs::read(p("b.json")).unwrap());
    let checkpoints: Vec<bool> = (1..=10).map(|e| p(&format!("a.epoch{e}.json")).exists()).collect();
    assert_eq!(
        checkpoints,
        [true, false, false, false, true, false, false, false, false, true]
    );
    let model = ModelFile::from_json(&fs::read_to_string(p("a.json")).unwrap()).unwrap();
    assert_eq!((model.epochs_trained, model.seed), (10, 3));

    ok(&["train", s(&data), "-o", s(&p("c.json")), "--epochs", "10", "--seed", "4", "--batch", "16"]);
    assert_ne!(fs::read(p("a.json")).unwrap(), fs::read(p("c.json")).unwrap());
}

#[test]
fn resumed_training_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let p = |n: &str| dir.path().join(n);
    ok(&["train", s(&data), "-o", s(&p("full.json")), "--epochs", "10", "--seed", "9"]);
    ok(&["train", s(&data), "-o", s(&p("half.json")), "--epochs", "5", "--seed", "9"]);
    ok(&[
        "train",
        s(&data),
        "-o",
        s(&p("half.json")),
        "--epochs",
        "5",
        "--seed",
        "9",
        "--resume",
        s(&p("half.epoch5.json")),
    ]);
    assert_eq!(fs::read(p("full.json")).unwrap(), fs::read(p("half.json")).unwrap());
    // the log kept growing across the two runs
    assert_eq!(csv_rows(&p("half.loss.csv")), csv_rows(&p("full.loss.csv")));
}

#[test]
fn train_rejects_bad_config_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let out = dir.path().join("m.json");
    let msg = fails(&["train", s(&data), "-o", s(&out), "--epochs", "0"]);
    assert!(msg.contains("epochs"), "{msg}");
    fails(&["train", s(&data), "-o", s(&out), "--split", "1.5"]);
    fs::write(dir.path().join("tiny.json"), DatasetFile::from_movements(&oscillation_movements(2, 1)).unwrap().to_json())
        .unwrap();
    fails(&["train", s(&dir.path().join("tiny.json")), "-o", s(&out)]);
}

#[test]
fn generate_command() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let p = |n: &str| dir.path().join(n);
    ok(&["train", s(&data), "-o", s(&p("model.json")), "--epochs", "3"]);
    write_wav(&p("clip.wav"), &ClickTrack::new(120.0, 6.0).with_accents(vec![1.0, 0.4, 0.7]));
    ok(&["features", s(&p("clip.wav")), "-o", s(&p("features.json"))]);
    ok(&["generate", "--model", s(&p("model.json")), s(&p("clip.wav")), "-o", s(&p("choreo.json"))]);

    let features = FeaturesFile::from_json(&fs::read_to_string(p("features.json")).unwrap()).unwrap();
    let file = ChoreographyFile::from_json(&fs::read_to_string(p("choreo.json")).unwrap()).unwrap();
    assert_eq!(file.moves.len(), features.beats.len() - 1);
    for (m, w) in file.moves.iter().zip(features.beats.windows(2)) {
        assert_eq!((m.t_start, m.t_end), (w[0], w[1]));
    }
    assert_eq!(file.joint_order.len(), 10);

    fs::write(p("corrupt.json"), "{\n  \"input_dim\": 20,\n  \"latent_dim\": oops\n}").unwrap();
    let msg = fails(&["generate", "--model", s(&p("corrupt.json")), s(&p("clip.wav")), "-o", s(&p("x.json"))]);
    assert!(msg.contains("line 3"), "{msg}");

    let mut short = ClickTrack::new(120.0, 0.4);
    short.offset = 0.1;
    write_wav(&p("short.wav"), &short);
    let msg = fails(&["generate", "--model", s(&p("model.json")), s(&p("short.wav")), "-o", s(&p("x.json"))]);
    assert!(msg.contains("beat"), "{msg}");
}

#[test]
fn eval_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let p = |n: &str| dir.path().join(n);
    ok(&["train", s(&data), "-o", s(&p("model.json")), "--seed", "1"]);
    write_wav(&p("clip.wav"), &ClickTrack::new(100.0, 10.0).with_accents(vec![1.0, 0.2, 0.6, 0.9, 0.4]));

    let epochs = [1, 5, 10, 15, 20, 25];
    let paths: Vec<PathBuf> = epochs.iter().map(|e| p(&format!("model.epoch{e}.json"))).collect();
    let (clip, report) = (p("clip.wav"), p("report.csv"));
    let mut args = vec!["eval", s(&clip)];
    args.extend(paths.iter().map(|x| s(x)));
    args.extend(["-o", s(&report)]);
    ok(&args);

    let rows = csv_rows(&p("report.csv"));
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0], ["joint", "epoch_1", "epoch_5", "epoch_10", "epoch_15", "epoch_20", "epoch_25"]);
    assert_eq!(rows[11][0], "mean");
    for col in 1..=6 {
        let joints: Vec<f64> = rows[1..11].iter().map(|r| r[col].parse().unwrap()).collect();
        assert!(joints.iter().all(|v| *v >= 0.0));
        let mean: f64 = rows[11][col].parse().unwrap();
        assert!((joints.iter().sum::<f64>() / 10.0 - mean).abs() < 1e-15);
    }

    ok(&["eval", s(&p("clip.wav")), s(&paths[0]), "-o", s(&p("single.csv"))]);
    let rows = csv_rows(&p("single.csv"));
    assert_eq!(rows[0], ["joint", "epoch_1"]);
    assert!(rows.iter().all(|r| r.len() == 2));

    assert_eq!(beatmotion(&["eval", s(&p("clip.wav")), "-o", s(&p("none.csv"))]).status.code(), Some(2));
}
