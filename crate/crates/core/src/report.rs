//! Per-frame reports and per-video summaries.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distancing::{DistanceStatus, FrameDistancing, PairAssessment, SubjectDistanceStatus};
use crate::face::{FaceAssessment, FaceResults};
use crate::ingestion::{parse_record, read_header, write_record, FileHeader, IngestError, RecordLines, ReportHeader};
use crate::model::{Frame, HandLabel, MaskLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("frame {frame_id}: {kind} id {id:?} does not exist in the source frame")]
    IdMismatch { frame_id: u64, kind: &'static str, id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_id: u64,
    pub face_assessments: Vec<FaceAssessment>,
    pub pair_assessments: Vec<PairAssessment>,
    pub subject_statuses: Vec<SubjectDistanceStatus>,
    pub warnings: Vec<String>,
}

/// Assembles the report of one frame, checking that every id the
/// assessments mention exists in `frame`. Face errors and unassessed
/// persons become warnings.
pub fn build_frame_report(
    frame: &Frame,
    faces: FaceResults,
    distancing: FrameDistancing,
) -> Result<FrameReport, ReportError> {
    let mismatch = |kind, id: &str| ReportError::IdMismatch { frame_id: frame.frame_id, kind, id: id.to_string() };
    let face_ids: HashSet<&str> = frame.faces.iter().map(|f| f.id.as_str()).collect();
    let person_ids: HashSet<&str> = frame.persons.iter().map(|p| p.id.as_str()).collect();

    for a in &faces.assessments {
        if !face_ids.contains(a.face_id.as_str()) {
            return Err(mismatch("face", &a.face_id));
        }
    }
    for e in &faces.errors {
        if !face_ids.contains(e.face_id.as_str()) {
            return Err(mismatch("face", &e.face_id));
        }
    }
    for p in &distancing.pairs {
        for id in [&p.person_a, &p.person_b] {
            if !person_ids.contains(id.as_str()) {
                return Err(mismatch("person", id));
            }
        }
    }
    for s in &distancing.statuses {
        if !person_ids.contains(s.person_id.as_str()) {
            return Err(mismatch("person", &s.person_id));
        }
    }

    let mut warnings: Vec<String> = faces.errors.iter().map(|e| format!("face {}: {}", e.face_id, e.error)).collect();
    warnings.extend(distancing.statuses.iter().filter_map(|s| {
        s.reason.map(|r| format!("person {} unassessed: {}", s.person_id, r.describe()))
    }));

    Ok(FrameReport {
        frame_id: frame.frame_id,
        face_assessments: faces.assessments,
        pair_assessments: distancing.pairs,
        subject_statuses: distancing.statuses,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MaskCounts {
    pub no_mask: u64,
    pub mask: u64,
    pub improper_mask: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HandCounts {
    pub interaction: u64,
    pub no_interaction: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceCounts {
    pub keeps: u64,
    pub violates: u64,
    pub unassessed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummary {
    pub video_id: String,
    pub frame_count: u64,
    pub mask: MaskCounts,
    pub hand: HandCounts,
    pub distance: DistanceCounts,
    pub pair_total: u64,
    pub violating_pair_total: u64,
    pub warning_total: u64,
    pub max_persons_per_frame: u64,
    /// Wall-clock seconds spent producing the reports, when measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_per_second: Option<f64>,
}

impl VideoSummary {
    pub fn empty(video_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            frame_count: 0,
            mask: MaskCounts::default(),
            hand: HandCounts::default(),
            distance: DistanceCounts::default(),
            pair_total: 0,
            violating_pair_total: 0,
            warning_total: 0,
            max_persons_per_frame: 0,
            elapsed_seconds: None,
            frames_per_second: None,
        }
    }

    fn add(&mut self, r: &FrameReport) {
        self.frame_count += 1;
        for a in &r.face_assessments {
            match a.mask_label {
                MaskLabel::NoMask => self.mask.no_mask += 1,
                MaskLabel::Mask => self.mask.mask += 1,
                MaskLabel::ImproperMask => self.mask.improper_mask += 1,
            }
            match a.hand_label {
                HandLabel::Interaction => self.hand.interaction += 1,
                HandLabel::NoInteraction => self.hand.no_interaction += 1,
            }
        }
        for s in &r.subject_statuses {
            match s.status {
                DistanceStatus::Keeps => self.distance.keeps += 1,
                DistanceStatus::Violates => self.distance.violates += 1,
                DistanceStatus::Unassessed => self.distance.unassessed += 1,
            }
        }
        self.pair_total += r.pair_assessments.len() as u64;
        self.violating_pair_total += r.pair_assessments.iter().filter(|p| p.violation).count() as u64;
        self.warning_total += r.warnings.len() as u64;
        self.max_persons_per_frame = self.max_persons_per_frame.max(r.subject_statuses.len() as u64);
    }

    /// Records the wall-clock time spent and derives the frame rate.
    pub fn with_timing(mut self, elapsed_seconds: f64) -> Self {
        self.elapsed_seconds = Some(elapsed_seconds);
        self.frames_per_second = (elapsed_seconds > 0.0).then(|| self.frame_count as f64 / elapsed_seconds);
        self
    }

    /// Combines two partial summaries of the same video.
    pub fn merge(mut self, other: &VideoSummary) -> Self {
        self.frame_count += other.frame_count;
        self.mask.no_mask += other.mask.no_mask;
        self.mask.mask += other.mask.mask;
        self.mask.improper_mask += other.mask.improper_mask;
        self.hand.interaction += other.hand.interaction;
        self.hand.no_interaction += other.hand.no_interaction;
        self.distance.keeps += other.distance.keeps;
        self.distance.violates += other.distance.violates;
        self.distance.unassessed += other.distance.unassessed;
        self.pair_total += other.pair_total;
        self.violating_pair_total += other.violating_pair_total;
        self.warning_total += other.warning_total;
        self.max_persons_per_frame = self.max_persons_per_frame.max(other.max_persons_per_frame);
        match (self.elapsed_seconds, other.elapsed_seconds) {
            (Some(a), Some(b)) => self.with_timing(a + b),
            _ => {
                self.elapsed_seconds = None;
                self.frames_per_second = None;
                self
            }
        }
    }
}

pub fn summarize_video<'a>(video_id: &str, reports: impl IntoIterator<Item = &'a FrameReport>) -> VideoSummary {
    let mut s = VideoSummary::empty(video_id);
    for r in reports {
        s.add(r);
    }
    s
}

pub fn write_report_header<W: Write>(w: &mut W, header: &ReportHeader) -> io::Result<()> {
    write_record(w, &FileHeader::Report(header.clone()))
}

pub fn write_frame_report<W: Write>(w: &mut W, report: &FrameReport) -> io::Result<()> {
    write_record(w, report)
}

/// Reads a report file written by `guardline run`.
pub fn read_reports<R: BufRead>(reader: R) -> Result<(ReportHeader, Vec<FrameReport>), IngestError> {
    let mut lines = RecordLines::new(reader);
    let (line, header) = read_header(&mut lines)?;
    let FileHeader::Report(header) = header else {
        return Err(IngestError::WrongFormat { line, expected: "report", found: header.kind() });
    };
    let mut reports: Vec<FrameReport> = Vec::new();
    for item in lines {
        let (line, text) = item?;
        let r: FrameReport = parse_record(line, &text)?;
        if let Some(prev) = reports.last() {
            if r.frame_id <= prev.frame_id {
                return Err(IngestError::Ordering { line, previous: prev.frame_id, found: r.frame_id });
            }
        }
        reports.push(r);
    }
    Ok((header, reports))
}
