use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use beatmotion_core::audio::{analyze, decode_wav, encode_wav_i16, AnalysisConfig, AudioFeatures, FeaturesFile};
use beatmotion_core::choreo::{generate_sequence, ChoreographyFile};
use beatmotion_core::dataset::{
    build_movements, joint_variance, make_training_pairs, mean_variance, normalize_with, split, DatasetFile,
};
use beatmotion_core::mocap::{parse_poses, parse_skeleton, sample_on_beats, write_poses, write_skeleton, JointLimits, RobotJoint};
use beatmotion_core::nn::{elbo_loss, GaussianPrior, ModelFile, VaeConfig, VaeModel};
use beatmotion_core::optim::AdadeltaState;
use beatmotion_core::synth::{oscillation_capture, ClickTrack};
use beatmotion_core::train::{train as run_training, TrainConfig};

use crate::TrainArgs;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_limits(path: Option<&Path>) -> Result<JointLimits> {
    match path {
        None => Ok(JointLimits::default_table()),
        Some(p) => JointLimits::parse(&read_text(p)?).with_context(|| format!("invalid limits file {}", p.display())),
    }
}

fn load_audio_features(path: &Path) -> Result<AudioFeatures> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let signal = decode_wav(&bytes).with_context(|| format!("cannot decode {}", path.display()))?;
    analyze(&signal, &AnalysisConfig::default()).with_context(|| format!("cannot analyze {}", path.display()))
}

fn load_features_file(path: &Path) -> Result<FeaturesFile> {
    FeaturesFile::from_json(&read_text(path)?).with_context(|| format!("cannot parse features file {}", path.display()))
}

fn load_model_file(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&read_text(path)?).with_context(|| format!("cannot parse model file {}", path.display()))
}

fn load_model(path: &Path) -> Result<VaeModel> {
    load_model_file(path)?
        .to_model()
        .with_context(|| format!("invalid model file {}", path.display()))
}

pub fn features(audio: &Path, out: &Path) -> Result<()> {
    let features = load_audio_features(audio)?;
    eprintln!(
        "{}: {} beats, {:.2} BPM",
        audio.display(),
        features.grid.len(),
        features.grid.bpm().unwrap_or(0.0)
    );
    write_text(out, &FeaturesFile::from_features(&features).to_json())
}

pub fn capture(skeleton: &Path, features: &Path, limits: Option<&Path>, out: &Path) -> Result<()> {
    let limits = load_limits(limits)?;
    let frames = parse_skeleton(&read_text(skeleton)?).with_context(|| format!("invalid skeleton file {}", skeleton.display()))?;
    let features = load_features_file(features)?
        .to_features()
        .with_context(|| format!("invalid features file {}", features.display()))?;
    let poses = sample_on_beats(&frames, &features.grid, &limits)?;
    eprintln!("sampled {} poses from {} frames", poses.len(), frames.len());
    write_text(out, &write_poses(&poses))
}

pub fn dataset(poses: &Path, out: &Path) -> Result<()> {
    let poses: Vec<_> = parse_poses(&read_text(poses)?)
        .with_context(|| format!("invalid pose file {}", poses.display()))?
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let movements = build_movements(&poses)?;
    let file = DatasetFile::from_movements(&movements)?;
    eprintln!("{} movements, {} training pairs", movements.len(), movements.len() - 1);
    write_text(out, &file.to_json())
}

/// `<dir>/<stem>.epoch<N>.json` next to the final model.
fn checkpoint_path(out: &Path, epoch: u32) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    out.with_file_name(format!("{stem}.epoch{epoch}.json"))
}

fn default_loss_log(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    out.with_file_name(format!("{stem}.loss.csv"))
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        seed: args.seed,
        checkpoint_every: args.checkpoint_every,
    };
    config.validate()?;

    let file = DatasetFile::from_json(&read_text(&args.dataset)?)
        .with_context(|| format!("cannot parse dataset {}", args.dataset.display()))?;
    let movements = file.to_movements()?;
    let pairs = make_training_pairs(&movements)?;
    let (train_set, held_out) = split(&pairs, args.split, args.seed)?;
    let train_set = normalize_with(&train_set, file.norm.clone());
    let held_out = normalize_with(&held_out, file.norm.clone());

    let (mut model, mut optimizer) = match &args.resume {
        Some(path) => {
            let checkpoint = load_model_file(path)?;
            ensure!(
                checkpoint.norm == file.norm,
                "checkpoint {} was trained with different normalization statistics",
                path.display()
            );
            let model = checkpoint.to_model()?;
            let Some(optimizer) = checkpoint.optimizer else {
                bail!("checkpoint {} carries no optimizer state", path.display());
            };
            eprintln!("resuming from epoch {}", model.epochs_trained());
            (model, optimizer)
        }
        None => {
            let prior = match &args.prior_from {
                Some(path) => {
                    let s = load_features_file(path)?.summary;
                    GaussianPrior::new(s.loudness_mean, s.variance_mean)
                        .with_context(|| format!("unusable prior from {}", path.display()))?
                }
                None => GaussianPrior::standard(),
            };
            let model = VaeModel::new(VaeConfig::default(), prior, file.norm.clone(), args.seed)?;
            let optimizer = AdadeltaState::new(model.num_params());
            (model, optimizer)
        }
    };

    let log_path = args.loss_log.clone().unwrap_or_else(|| default_loss_log(&args.out));
    let appending = args.resume.is_some() && log_path.exists();
    let log_file = fs::OpenOptions::new()
        .create(true)
        .append(appending)
        .write(true)
        .truncate(!appending)
        .open(&log_path)
        .with_context(|| format!("cannot open loss log {}", log_path.display()))?;
    let mut log = csv::WriterBuilder::new().has_headers(false).from_writer(log_file);
    if !appending {
        log.write_record(["epoch", "reconstruction", "kl", "total"])?;
        log.flush()?;
    }

    run_training::<anyhow::Error, _>(&mut model, &mut optimizer, &train_set, &config, |report, model, optimizer| {
        let l = report.loss;
        log.write_record([
            report.epoch.to_string(),
            l.reconstruction.to_string(),
            l.kl.to_string(),
            l.total.to_string(),
        ])?;
        log.flush()?;
        eprintln!(
            "epoch {:>3}: total {:.6} (reconstruction {:.6}, kl {:.6})",
            report.epoch, l.total, l.reconstruction, l.kl
        );
        if config.is_checkpoint_epoch(report.epoch) {
            let path = checkpoint_path(&args.out, report.epoch);
            write_text(&path, &ModelFile::from_model(model, Some(optimizer)).to_json())?;
        }
        Ok(())
    })?;

    // held-out loss with the noise fixed at the prior mean
    let prior = model.prior();
    let noise = vec![vec![prior.mean(); model.latent_dim()]; held_out.len()];
    let (held, _) = elbo_loss(&model, &held_out.inputs, &held_out.targets, &noise)?;
    eprintln!(
        "held-out ({} pairs): total {:.6} (reconstruction {:.6}, kl {:.6})",
        held_out.len(),
        held.total,
        held.reconstruction,
        held.kl
    );
    write_text(&args.out, &ModelFile::from_model(&model, Some(&optimizer)).to_json())
}

pub fn generate(model: &Path, audio: &Path, limits: Option<&Path>, out: &Path) -> Result<()> {
    let limits = load_limits(limits)?;
    let model = load_model(model)?;
    let features = load_audio_features(audio)?;
    let choreography = generate_sequence(&model, &features.segments, &features.summary, &features.grid, &limits)?;
    eprintln!("{} moves at {:.2} BPM", choreography.moves.len(), choreography.source_bpm);
    write_text(
        out,
        &ChoreographyFile::from_choreography(&choreography, &audio.display().to_string()).to_json(),
    )
}

pub fn eval(checkpoints: &[PathBuf], audio: &Path, limits: Option<&Path>, out: &Path) -> Result<()> {
    ensure!(!checkpoints.is_empty(), "at least one checkpoint is required");
    let limits = load_limits(limits)?;
    let features = load_audio_features(audio)?;

    let mut header = vec!["joint".to_string()];
    let mut columns = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let model = load_model(path)?;
        let c = generate_sequence(&model, &features.segments, &features.summary, &features.grid, &limits)
            .with_context(|| format!("generation with {} failed", path.display()))?;
        let per_joint = joint_variance(&c.poses())?;
        let mean = mean_variance(&per_joint);
        eprintln!("{}: epoch {}, mean variance {mean:.6}", path.display(), model.epochs_trained());
        header.push(format!("epoch_{}", model.epochs_trained()));
        columns.push((per_joint, mean));
    }

    let file = fs::File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&header)?;
    for joint in RobotJoint::ALL {
        let mut row = vec![joint.name().to_string()];
        row.extend(columns.iter().map(|(v, _)| v[joint.index()].to_string()));
        w.write_record(&row)?;
    }
    let mut row = vec!["mean".to_string()];
    row.extend(columns.iter().map(|(_, m)| m.to_string()));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

pub fn synth(bpm: f64, seconds: f64, seed: u64, audio: &Path, capture: Option<&Path>) -> Result<()> {
    ensure!(bpm > 0.0 && bpm.is_finite(), "bpm must be positive");
    ensure!(seconds > 0.0 && seconds.is_finite(), "seconds must be positive");
    let clip = ClickTrack::new(bpm, seconds)
        .with_accents(vec![1.0, 0.3, 0.6, 0.15, 0.9, 0.45, 0.2, 0.75])
        .with_noise(-50.0);
    let signal = clip.render(seed);
    fs::File::create(audio)
        .and_then(|mut f| f.write_all(&encode_wav_i16(signal.samples(), signal.sample_rate())))
        .with_context(|| format!("cannot write {}", audio.display()))?;
    if let Some(path) = capture {
        let frames = oscillation_capture(seconds, 30.0, 60.0 / bpm, seed);
        write_text(path, &write_skeleton(&frames))?;
    }
    Ok(())
}
