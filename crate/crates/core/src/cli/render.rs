use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use guardline::ingestion::{read_detection_stream, DrawCommandsHeader, FORMAT_VERSION};
use guardline::overlay::{emit_overlay_commands, render_frame, write_draw_commands};
use guardline::report::read_reports;
use rayon::prelude::*;

use super::{create, images, open, ConfigArgs, UsageError};

#[derive(Debug, Args)]
pub(crate) struct RenderArgs {
    /// Report written by `guardline run`.
    #[arg(long)]
    report: PathBuf,
    /// Detection stream the report came from; when given, its frames must
    /// match the report's.
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Directory of frame images named `<frame_id>.png` (or jpg, bmp).
    #[arg(long)]
    images: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write only the draw-command files.
    #[arg(long)]
    commands_only: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

pub(crate) fn run(args: RenderArgs) -> Result<ExitCode> {
    let style = args.config.load()?.overlay_style()?;
    let (header, reports) = read_reports(open(&args.report, "report")?)
        .with_context(|| format!("invalid report file {}", args.report.display()))?;

    if let Some(path) = &args.detections {
        let (dh, frames) = read_detection_stream(open(path, "detections")?)
            .with_context(|| format!("invalid detections file {}", path.display()))?;
        let detected: BTreeSet<u64> = frames.iter().map(|f| f.frame.frame_id).collect();
        let reported: BTreeSet<u64> = reports.iter().map(|r| r.frame_id).collect();
        if dh.video_id != header.video_id || detected != reported {
            bail!("report {} does not belong to detections {}", args.report.display(), path.display());
        }
    }

    let image_dir = if args.commands_only {
        None
    } else {
        let Some(dir) = args.images.clone() else {
            return Err(UsageError("--images is required unless --commands-only is given".into()).into());
        };
        for r in &reports {
            if images::find(&dir, r.frame_id).is_none() {
                bail!("no image for frame {} in {}", r.frame_id, dir.display());
            }
        }
        Some(dir)
    };

    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create directory {}", args.out.display()))?;
    reports.par_iter().try_for_each(|r| -> Result<()> {
        let commands = emit_overlay_commands(r, &style);
        let cmd_header = DrawCommandsHeader {
            format_version: FORMAT_VERSION,
            video_id: header.video_id.clone(),
            frame_id: r.frame_id,
            geometry: header.geometry,
        };
        let mut w = create(&args.out.join(format!("{}.commands.jsonl", r.frame_id)), "draw-command")?;
        write_draw_commands(&mut w, &cmd_header, &commands)?;
        w.flush()?;
        if let Some(dir) = &image_dir {
            let img = images::load(dir, r.frame_id, header.geometry)?;
            let out = render_frame(&img, header.geometry, r, &style)?;
            let path = args.out.join(format!("{}.png", r.frame_id));
            out.save(&path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    })?;
    eprintln!("rendered {} frames into {}", reports.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
