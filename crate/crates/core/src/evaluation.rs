//! Scores frame reports against ground-truth annotations.
//!
//! Ground-truth faces are matched to assessed faces and ground-truth persons
//! to assessed persons. Annotated subjects that no detection matches are
//! treated as missed detections and left out of every denominator, so a
//! detector miss never counts as a classification error. Per-video counts are
//! pooled into the total row (micro-average).

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distancing::DistanceStatus;
use crate::ingestion::{DistanceLabel, GroundTruthFrame};
use crate::model::BoundingBox;
use crate::report::FrameReport;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("IoU threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
    #[error("report video {report:?} does not match ground-truth video {ground_truth:?}")]
    VideoMismatch { report: String, ground_truth: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    ById,
    #[default]
    ByIou,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    iou_threshold: f64,
    mode: MatchMode,
}

impl MatchingConfig {
    pub fn new(iou_threshold: f64, mode: MatchMode) -> Result<Self, EvaluationError> {
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(EvaluationError::Threshold(iou_threshold));
        }
        Ok(Self { iou_threshold, mode })
    }

    pub fn by_id() -> Self {
        Self { iou_threshold: DEFAULT_IOU_THRESHOLD, mode: MatchMode::ById }
    }

    pub fn iou_threshold(&self) -> f64 {
        self.iou_threshold
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self { iou_threshold: DEFAULT_IOU_THRESHOLD, mode: MatchMode::ByIou }
    }
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectMatch {
    pub ground_truth_id: String,
    pub predicted_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Correspondence {
    pub faces: Vec<SubjectMatch>,
    pub persons: Vec<SubjectMatch>,
    /// Ground-truth ids with no matching detection; excluded from scoring.
    pub missing_faces: Vec<String>,
    pub missing_persons: Vec<String>,
}

fn match_entities(
    truth: &[(&str, Option<BoundingBox>)],
    predicted: &[(&str, BoundingBox)],
    config: &MatchingConfig,
) -> (Vec<SubjectMatch>, Vec<String>) {
    let mut matches = Vec::new();
    let mut matched_truth = vec![false; truth.len()];
    match config.mode {
        MatchMode::ById => {
            let by_id: HashMap<&str, ()> = predicted.iter().map(|(id, _)| (*id, ())).collect();
            for (i, (id, _)) in truth.iter().enumerate() {
                if by_id.contains_key(id) {
                    matched_truth[i] = true;
                    matches.push(SubjectMatch { ground_truth_id: id.to_string(), predicted_id: id.to_string(), iou: None });
                }
            }
        }
        MatchMode::ByIou => {
            let mut candidates = Vec::new();
            for (gi, (_, gb)) in truth.iter().enumerate() {
                let Some(gb) = gb else { continue };
                for (pi, (_, pb)) in predicted.iter().enumerate() {
                    let v = iou(gb, pb);
                    if v >= config.iou_threshold {
                        candidates.push((v, gi, pi));
                    }
                }
            }
            // Highest IoU first, ties by ground-truth id then predicted id.
            candidates.sort_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then_with(|| truth[a.1].0.cmp(truth[b.1].0))
                    .then_with(|| predicted[a.2].0.cmp(predicted[b.2].0))
            });
            let mut matched_pred = vec![false; predicted.len()];
            for (v, gi, pi) in candidates {
                if matched_truth[gi] || matched_pred[pi] {
                    continue;
                }
                matched_truth[gi] = true;
                matched_pred[pi] = true;
                matches.push(SubjectMatch {
                    ground_truth_id: truth[gi].0.to_string(),
                    predicted_id: predicted[pi].0.to_string(),
                    iou: Some(v),
                });
            }
        }
    }
    let missing = truth
        .iter()
        .zip(&matched_truth)
        .filter(|(_, m)| !**m)
        .map(|((id, _), _)| id.to_string())
        .collect();
    (matches, missing)
}

pub fn match_subjects(report: &FrameReport, truth: &GroundTruthFrame, config: &MatchingConfig) -> Correspondence {
    let gt_faces: Vec<_> = truth.faces.iter().map(|f| (f.id.as_str(), f.bbox)).collect();
    let pred_faces: Vec<_> = report.face_assessments.iter().map(|a| (a.face_id.as_str(), a.bbox)).collect();
    let gt_persons: Vec<_> = truth.persons.iter().map(|p| (p.id.as_str(), p.bbox)).collect();
    let pred_persons: Vec<_> = report.subject_statuses.iter().map(|s| (s.person_id.as_str(), s.bbox)).collect();

    let (faces, missing_faces) = match_entities(&gt_faces, &pred_faces, config);
    let (persons, missing_persons) = match_entities(&gt_persons, &pred_persons, config);
    Correspondence { faces, persons, missing_faces, missing_persons }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Mask,
    FaceHand,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskAccuracy {
    pub task: Task,
    pub correct: u64,
    pub scored: u64,
    /// `None` when nothing was scored.
    pub accuracy: Option<f64>,
}

impl TaskAccuracy {
    pub fn new(task: Task, correct: u64, scored: u64) -> Self {
        debug_assert!(correct <= scored);
        let accuracy = (scored > 0).then(|| correct as f64 / scored as f64);
        Self { task, correct, scored, accuracy }
    }

    pub fn empty(task: Task) -> Self {
        Self::new(task, 0, 0)
    }

    pub fn pooled(&self, other: &TaskAccuracy) -> Self {
        debug_assert_eq!(self.task, other.task);
        Self::new(self.task, self.correct + other.correct, self.scored + other.scored)
    }
}

/// Counts label agreement over the matched subjects of one frame. A subject
/// is scored only if the annotation carries a label for `task`; for the
/// distance task, unassessed predictions are skipped as well.
pub fn score_task(
    report: &FrameReport,
    truth: &GroundTruthFrame,
    correspondence: &Correspondence,
    task: Task,
) -> TaskAccuracy {
    let (mut correct, mut scored) = (0, 0);
    let mut tally = |agree: bool| {
        scored += 1;
        correct += u64::from(agree);
    };
    match task {
        Task::Mask | Task::FaceHand => {
            for m in &correspondence.faces {
                let gt = truth.faces.iter().find(|f| f.id == m.ground_truth_id);
                let pred = report.face_assessments.iter().find(|a| a.face_id == m.predicted_id);
                let (Some(gt), Some(pred)) = (gt, pred) else { continue };
                match task {
                    Task::Mask => {
                        if let Some(label) = gt.mask {
                            tally(label == pred.mask_label);
                        }
                    }
                    _ => {
                        if let Some(label) = gt.hand {
                            tally(label == pred.hand_label);
                        }
                    }
                }
            }
        }
        Task::Distance => {
            for m in &correspondence.persons {
                let gt = truth.persons.iter().find(|p| p.id == m.ground_truth_id);
                let pred = report.subject_statuses.iter().find(|s| s.person_id == m.predicted_id);
                let (Some(gt), Some(pred)) = (gt, pred) else { continue };
                let Some(label) = gt.distance else { continue };
                let predicted = match pred.status {
                    DistanceStatus::Keeps => DistanceLabel::Keeps,
                    DistanceStatus::Violates => DistanceLabel::Violates,
                    DistanceStatus::Unassessed => continue,
                };
                tally(label == predicted);
            }
        }
    }
    TaskAccuracy::new(task, correct, scored)
}

/// One row of the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAccuracy {
    pub video: String,
    pub frames: u64,
    /// Largest number of annotated subjects in any one frame (summed over
    /// videos in the total row).
    pub subjects: u64,
    pub mask: TaskAccuracy,
    pub face_hand: TaskAccuracy,
    pub distance: TaskAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub videos: Vec<VideoAccuracy>,
    pub total: VideoAccuracy,
}

/// Reports and annotations of one video.
#[derive(Debug, Clone, Copy)]
pub struct VideoInput<'a> {
    pub video_id: &'a str,
    pub reports: &'a [FrameReport],
    pub ground_truth: &'a [GroundTruthFrame],
}

pub fn evaluate_video(input: &VideoInput<'_>, config: &MatchingConfig) -> VideoAccuracy {
    let by_frame: HashMap<u64, &FrameReport> = input.reports.iter().map(|r| (r.frame_id, r)).collect();
    let mut mask = TaskAccuracy::empty(Task::Mask);
    let mut face_hand = TaskAccuracy::empty(Task::FaceHand);
    let mut distance = TaskAccuracy::empty(Task::Distance);
    let mut subjects = 0;
    for gt in input.ground_truth {
        subjects = subjects.max(gt.persons.len().max(gt.faces.len()) as u64);
        // A frame without a report has no detections at all.
        let Some(report) = by_frame.get(&gt.frame_id) else { continue };
        let corr = match_subjects(report, gt, config);
        mask = mask.pooled(&score_task(report, gt, &corr, Task::Mask));
        face_hand = face_hand.pooled(&score_task(report, gt, &corr, Task::FaceHand));
        distance = distance.pooled(&score_task(report, gt, &corr, Task::Distance));
    }
    VideoAccuracy {
        video: input.video_id.to_string(),
        frames: input.reports.len() as u64,
        subjects,
        mask,
        face_hand,
        distance,
    }
}

pub fn evaluate_videos(inputs: &[VideoInput<'_>], config: &MatchingConfig) -> AccuracyTable {
    let videos: Vec<VideoAccuracy> = inputs.iter().map(|v| evaluate_video(v, config)).collect();
    let mut total = VideoAccuracy {
        video: "Total".into(),
        frames: 0,
        subjects: 0,
        mask: TaskAccuracy::empty(Task::Mask),
        face_hand: TaskAccuracy::empty(Task::FaceHand),
        distance: TaskAccuracy::empty(Task::Distance),
    };
    for v in &videos {
        total.frames += v.frames;
        total.subjects += v.subjects;
        total.mask = total.mask.pooled(&v.mask);
        total.face_hand = total.face_hand.pooled(&v.face_hand);
        total.distance = total.distance.pooled(&v.distance);
    }
    AccuracyTable { videos, total }
}

fn percent(a: &TaskAccuracy) -> String {
    a.accuracy.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", v * 100.0))
}

impl fmt::Display for AccuracyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = ["Video", "# frames", "# subject", "Mask acc.", "Face-hand acc.", "Distance acc"];
        let mut rows: Vec<[String; 6]> = Vec::new();
        for v in self.videos.iter().chain(std::iter::once(&self.total)) {
            rows.push([
                v.video.clone(),
                v.frames.to_string(),
                v.subjects.to_string(),
                percent(&v.mask),
                percent(&v.face_hand),
                percent(&v.distance),
            ]);
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[&str], out: &mut String| {
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        };
        let mut out = String::new();
        line(&header, &mut out);
        let rule = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if i + 1 == n {
                out.push_str(&"-".repeat(rule));
                out.push('\n');
            }
            line(&r.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
        }
        f.write_str(&out)
    }
}
