use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use guardline::evaluation::{evaluate_videos, EvaluationError, VideoInput};
use guardline::ingestion::read_ground_truth;
use guardline::report::read_reports;

use super::{create, open, ConfigArgs, MatchModeArg, UsageError};

#[derive(Debug, Args)]
pub(crate) struct EvaluateArgs {
    /// Report file; repeat once per video, in the same order as --ground-truth.
    #[arg(long = "report", required = true)]
    reports: Vec<PathBuf>,
    /// Ground-truth file; repeat once per video.
    #[arg(long = "ground-truth", required = true)]
    ground_truth: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Minimum IoU for a match; overrides the config.
    #[arg(long)]
    iou: Option<f64>,
    /// How detections are paired with annotations; overrides the config.
    #[arg(long, value_enum)]
    match_mode: Option<MatchModeArg>,
    /// Also write the table as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) fn run(args: EvaluateArgs) -> Result<ExitCode> {
    if args.reports.len() != args.ground_truth.len() {
        return Err(UsageError(format!(
            "got {} --report and {} --ground-truth files; they must pair up",
            args.reports.len(),
            args.ground_truth.len()
        ))
        .into());
    }
    let mut cfg = args.config.load()?;
    if let Some(iou) = args.iou {
        cfg.evaluation.iou_threshold = iou;
    }
    if let Some(m) = args.match_mode {
        cfg.evaluation.match_mode = m.into();
    }
    let matching = cfg.matching_config()?;

    let mut videos = Vec::new();
    for (rp, gp) in args.reports.iter().zip(&args.ground_truth) {
        let (rh, reports) =
            read_reports(open(rp, "report")?).with_context(|| format!("invalid report file {}", rp.display()))?;
        let (gh, truth) = read_ground_truth(open(gp, "ground-truth")?)
            .with_context(|| format!("invalid ground-truth file {}", gp.display()))?;
        if rh.video_id != gh.video_id {
            return Err(EvaluationError::VideoMismatch { report: rh.video_id, ground_truth: gh.video_id }.into());
        }
        videos.push((rh.video_id, reports, truth));
    }
    let inputs: Vec<VideoInput<'_>> = videos
        .iter()
        .map(|(id, r, g)| VideoInput { video_id: id, reports: r, ground_truth: g })
        .collect();
    let table = evaluate_videos(&inputs, &matching);

    print!("{table}");
    if let Some(path) = &args.out {
        let mut w = create(path, "evaluation")?;
        serde_json::to_writer_pretty(&mut w, &table)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}
