use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use guardline::config::EngineConfig;
use guardline::distancing::DistancingConfig;
use guardline::face::{BackendKind, Classifier, CropConfig};
use guardline::ingestion::{read_recorded_scores, DetectionReader, IngestedFrame, ReportHeader, FORMAT_VERSION};
use guardline::model::{HandLabel, MaskLabel};
use guardline::pipeline::Engine;
use guardline::report::{summarize_video, write_frame_report, write_report_header, VideoSummary};

use super::{create, images, open, ConfigArgs, UsageError};

/// Frames handed to the engine at once.
const BATCH: usize = 512;

#[derive(Debug, Args)]
pub(crate) struct RunArgs {
    /// Detection stream to assess.
    #[arg(long)]
    detections: PathBuf,
    /// Recorded classifier scores (recorded backend).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// ONNX mask classifier (interchange-model backend).
    #[arg(long)]
    mask_model: Option<PathBuf>,
    /// ONNX face-hand classifier (interchange-model backend).
    #[arg(long)]
    hand_model: Option<PathBuf>,
    /// Directory of frame images named `<frame_id>.png` (or jpg, bmp).
    #[arg(long)]
    images: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Distance coefficient; overrides the config.
    #[arg(long)]
    lambda: Option<f64>,
    /// Face crop margin fraction; overrides the config.
    #[arg(long)]
    margin: Option<f64>,
    /// Report file to write.
    #[arg(long)]
    out: PathBuf,
    /// Summary file; defaults to `<out>.summary.json`.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn classifiers(args: &RunArgs, cfg: &EngineConfig) -> Result<(Classifier<MaskLabel>, Classifier<HandLabel>)> {
    let mask_model = args.mask_model.clone().or_else(|| cfg.classifier.mask.model.clone());
    let hand_model = args.hand_model.clone().or_else(|| cfg.classifier.hand.model.clone());
    let use_models = args.mask_model.is_some()
        || args.hand_model.is_some()
        || (args.scores.is_none() && cfg.classifier.backend == BackendKind::InterchangeModel);

    if use_models {
        if args.scores.is_some() {
            return Err(UsageError("--scores cannot be combined with classifier models".into()).into());
        }
        let (Some(mask), Some(hand)) = (mask_model, hand_model) else {
            return Err(UsageError("the interchange-model backend needs both --mask-model and --hand-model".into()).into());
        };
        if args.images.is_none() {
            return Err(UsageError("the interchange-model backend needs --images".into()).into());
        }
        return interchange(&mask, &hand, cfg);
    }

    let Some(scores_path) = &args.scores else {
        return Err(UsageError("give --scores (recorded backend) or --mask-model and --hand-model".into()).into());
    };
    let scores = read_recorded_scores(open(scores_path, "scores")?)
        .with_context(|| format!("invalid scores file {}", scores_path.display()))?;
    let scores = Arc::new(scores);
    let mask = Classifier::new(cfg.classifier.mask.descriptor(BackendKind::Recorded)?, scores.clone())?;
    let hand = Classifier::new(cfg.classifier.hand.descriptor(BackendKind::Recorded)?, scores)?;
    Ok((mask, hand))
}

#[cfg(feature = "onnx")]
fn interchange(mask: &Path, hand: &Path, cfg: &EngineConfig) -> Result<(Classifier<MaskLabel>, Classifier<HandLabel>)> {
    use guardline::face::interchange::InterchangeModel;

    let kind = BackendKind::InterchangeModel;
    let mask_desc = cfg.classifier.mask.descriptor(kind)?;
    let hand_desc = cfg.classifier.hand.descriptor(kind)?;
    let mask_model = InterchangeModel::load(mask, &mask_desc, cfg.classifier.mask.normalization())?;
    let hand_model = InterchangeModel::load(hand, &hand_desc, cfg.classifier.hand.normalization())?;
    Ok((Classifier::new(mask_desc, Arc::new(mask_model))?, Classifier::new(hand_desc, Arc::new(hand_model))?))
}

#[cfg(not(feature = "onnx"))]
fn interchange(_: &Path, _: &Path, _: &EngineConfig) -> Result<(Classifier<MaskLabel>, Classifier<HandLabel>)> {
    anyhow::bail!("this build has no interchange-model support (enable the `onnx` feature)")
}

/// Runs one batch through the engine, writes its reports and returns their
/// summary.
fn flush(engine: &Engine, batch: &mut Vec<IngestedFrame>, images: Option<&Path>, out: &mut impl Write) -> Result<VideoSummary> {
    if let Some(dir) = images {
        for f in batch.iter_mut() {
            let img = images::load(dir, f.frame.frame_id, f.frame.geometry)?;
            f.frame.pixels = Some(Arc::new(img));
        }
    }
    let reports = engine.process_batch(batch)?;
    for r in &reports {
        write_frame_report(out, r)?;
    }
    batch.clear();
    Ok(summarize_video("", &reports))
}

pub(crate) fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = args.config.load()?;
    if let Some(l) = args.lambda {
        cfg.distancing.lambda = l;
    }
    if let Some(m) = args.margin {
        cfg.crop.margin = m;
    }
    let distancing: DistancingConfig = cfg.distancing_config()?;
    let crop: CropConfig = cfg.crop_config()?;
    let (mask, hand) = classifiers(&args, &cfg)?;
    let engine = Engine::new(distancing, crop, mask, hand);

    let mut reader = DetectionReader::new(open(&args.detections, "detections")?)
        .with_context(|| format!("invalid detections file {}", args.detections.display()))?;
    let header = reader.header().clone();
    let mut out = create(&args.out, "report")?;
    write_report_header(
        &mut out,
        &ReportHeader { format_version: FORMAT_VERSION, video_id: header.video_id.clone(), geometry: header.geometry },
    )?;

    let started = Instant::now();
    let mut summary = VideoSummary::empty(&header.video_id);
    let mut batch: Vec<IngestedFrame> = Vec::with_capacity(BATCH);
    for item in reader.by_ref() {
        let frame = item.with_context(|| format!("invalid detections file {}", args.detections.display()))?;
        batch.push(frame);
        if batch.len() == BATCH {
            summary = summary.merge(&flush(&engine, &mut batch, args.images.as_deref(), &mut out)?);
        }
    }
    summary = summary.merge(&flush(&engine, &mut batch, args.images.as_deref(), &mut out)?);
    out.flush()?;
    let summary = summary.with_timing(started.elapsed().as_secs_f64());

    let summary_path = args.summary.clone().unwrap_or_else(|| summary_path(&args.out));
    let mut s = create(&summary_path, "summary")?;
    serde_json::to_writer_pretty(&mut s, &summary)?;
    s.write_all(b"\n")?;
    s.flush()?;

    eprintln!(
        "{}: {} frames, {} violating pairs, {} warnings; report {}",
        summary.video_id,
        summary.frame_count,
        summary.violating_pair_total,
        summary.warning_total,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
