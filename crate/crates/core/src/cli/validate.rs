use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use guardline::config::EngineConfig;
use guardline::ingestion::{peek_header, DetectionReader, FileHeader, GroundTruthReader, IngestError, ScoresReader};
use guardline::overlay::read_draw_commands;
use guardline::report::{read_reports, FrameReport};

use super::open;

#[derive(Debug, Args)]
pub(crate) struct ValidateArgs {
    /// File to check: detections, scores, ground truth, report, draw
    /// commands, or a `.toml` engine config.
    path: PathBuf,
}

#[derive(Default)]
struct Findings {
    records: usize,
    warnings: Vec<String>,
    errors: Vec<String>,
}

impl Findings {
    fn error(&mut self, e: &IngestError) {
        self.errors.push(e.to_string());
    }

    fn collect<T>(&mut self, items: impl Iterator<Item = Result<T, IngestError>>, mut each: impl FnMut(&mut Self, T)) {
        for item in items {
            match item {
                Ok(v) => {
                    self.records += 1;
                    each(self, v);
                }
                // A broken stream cannot be read any further.
                Err(e @ IngestError::Io(_)) => {
                    self.error(&e);
                    break;
                }
                Err(e) => self.error(&e),
            }
        }
    }
}

fn check_report(r: &FrameReport, findings: &mut Findings) {
    let persons: HashSet<&str> = r.subject_statuses.iter().map(|s| s.person_id.as_str()).collect();
    for p in &r.pair_assessments {
        for id in [&p.person_a, &p.person_b] {
            if !persons.contains(id.as_str()) {
                findings.errors.push(format!("frame {}: pair names unknown person {id:?}", r.frame_id));
            }
        }
        if p.violation != (p.distance < p.threshold) {
            findings.errors.push(format!(
                "frame {}: pair ({}, {}) violation flag disagrees with distance {} and threshold {}",
                r.frame_id, p.person_a, p.person_b, p.distance, p.threshold
            ));
        }
    }
}

fn check(path: &Path) -> Result<(&'static str, Findings)> {
    let mut f = Findings::default();
    if path.extension().is_some_and(|e| e == "toml") {
        match EngineConfig::load(path).map_err(anyhow::Error::from).and_then(|c| Ok(c.validate()?)) {
            Ok(()) => f.records = 1,
            Err(e) => f.errors.push(format!("{e:#}")),
        }
        return Ok(("config", f));
    }
    let header = match peek_header(path) {
        Ok(h) => h,
        Err(IngestError::Io(e)) => return Err(anyhow::Error::new(e).context(format!("cannot read {}", path.display()))),
        Err(e) => {
            f.error(&e);
            return Ok(("unknown", f));
        }
    };
    let kind = header.kind();
    let reader = open(path, kind)?;
    match header {
        FileHeader::Detections(_) => {
            let r = DetectionReader::new(reader)?;
            f.collect(r, |f, frame| {
                f.warnings.extend(frame.warnings.iter().map(|w| format!("line {}: {w}", frame.line)));
            });
        }
        FileHeader::Scores(_) => f.collect(ScoresReader::new(reader)?, |_, _| ()),
        FileHeader::GroundTruth(_) => f.collect(GroundTruthReader::new(reader)?, |_, _| ()),
        FileHeader::Report(_) => match read_reports(reader) {
            Ok((_, reports)) => {
                f.records = reports.len();
                for r in &reports {
                    check_report(r, &mut f);
                }
            }
            Err(e) => f.error(&e),
        },
        FileHeader::DrawCommands(_) => match read_draw_commands(reader) {
            Ok((_, commands)) => f.records = commands.len(),
            Err(e) => f.error(&e),
        },
    }
    Ok((kind, f))
}

pub(crate) fn run(args: ValidateArgs) -> Result<ExitCode> {
    let (kind, f) = check(&args.path)?;
    for w in &f.warnings {
        println!("warning: {w}");
    }
    for e in &f.errors {
        println!("error: {e}");
    }
    println!(
        "{}: {kind} file, {} records, {} warnings, {} errors",
        args.path.display(),
        f.records,
        f.warnings.len(),
        f.errors.len()
    );
    Ok(if f.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
