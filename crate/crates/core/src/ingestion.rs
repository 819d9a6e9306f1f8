//! Line-delimited JSON file formats.
//!
//! Every file starts with a header record whose `format` field names the
//! file kind and whose `format_version` must equal [`FORMAT_VERSION`]. The
//! remaining lines hold one record each; blank lines are ignored. Readers are
//! streaming iterators that report problems with 1-based line numbers.
//!
//! | format         | records after the header                 |
//! |----------------|------------------------------------------|
//! | `detections`   | one [`FrameRecord`] per frame            |
//! | `scores`       | one [`RecordedScoresEntry`] per face     |
//! | `ground_truth` | one [`GroundTruthFrame`] per frame       |
//! | `report`       | one frame report per frame               |
//! | `draw_commands`| one draw command per detection           |

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::face::{check_distribution, RecordedScores};
use crate::model::{
    validate_frame, BoundingBox, FaceDetection, Frame, HandLabel, ImageGeometry, MaskLabel, ModelError,
    PersonDetection, Point2D,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("stream is empty; expected a header record")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected a `{expected}` file, found `{found}`")]
    WrongFormat { line: usize, expected: &'static str, found: &'static str },
    #[error("line {line}: unsupported format_version {found} (supported: {FORMAT_VERSION})")]
    Version { line: usize, found: u32 },
    #[error("line {line}: frame_id {found} does not increase on previous frame_id {previous}")]
    Ordering { line: usize, previous: u64, found: u64 },
    #[error("line {line}: {}", findings.join("; "))]
    Invalid { line: usize, findings: Vec<String> },
    #[error("line {line}: duplicate scores key (frame {frame_id}, face {face_id:?})")]
    DuplicateKey { line: usize, frame_id: u64, face_id: String },
    #[error("line {line}: {message}")]
    BadDistribution { line: usize, message: String },
    #[error("line {line}: {source}")]
    UnknownLabel { line: usize, source: ModelError },
}

impl IngestError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::Io(_) | IngestError::MissingHeader => None,
            IngestError::Parse { line, .. }
            | IngestError::WrongFormat { line, .. }
            | IngestError::Version { line, .. }
            | IngestError::Ordering { line, .. }
            | IngestError::Invalid { line, .. }
            | IngestError::DuplicateKey { line, .. }
            | IngestError::BadDistribution { line, .. }
            | IngestError::UnknownLabel { line, .. } => Some(*line),
        }
    }
}

// ---------------------------------------------------------------------------
// Headers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStreamHeader {
    pub format_version: u32,
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
    pub geometry: ImageGeometry,
}

impl DetectionStreamHeader {
    pub fn new(video_id: impl Into<String>, geometry: ImageGeometry) -> Self {
        Self { format_version: FORMAT_VERSION, video_id: video_id.into(), frame_rate: None, geometry }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresHeader {
    pub format_version: u32,
}

impl Default for ScoresHeader {
    fn default() -> Self {
        Self { format_version: FORMAT_VERSION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthHeader {
    pub format_version: u32,
    pub video_id: String,
}

impl GroundTruthHeader {
    pub fn new(video_id: impl Into<String>) -> Self {
        Self { format_version: FORMAT_VERSION, video_id: video_id.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format_version: u32,
    pub video_id: String,
    pub geometry: ImageGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawCommandsHeader {
    pub format_version: u32,
    pub video_id: String,
    pub frame_id: u64,
    pub geometry: ImageGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum FileHeader {
    Detections(DetectionStreamHeader),
    Scores(ScoresHeader),
    GroundTruth(GroundTruthHeader),
    Report(ReportHeader),
    DrawCommands(DrawCommandsHeader),
}

impl FileHeader {
    pub fn kind(&self) -> &'static str {
        match self {
            FileHeader::Detections(_) => "detections",
            FileHeader::Scores(_) => "scores",
            FileHeader::GroundTruth(_) => "ground_truth",
            FileHeader::Report(_) => "report",
            FileHeader::DrawCommands(_) => "draw_commands",
        }
    }

    pub fn format_version(&self) -> u32 {
        match self {
            FileHeader::Detections(h) => h.format_version,
            FileHeader::Scores(h) => h.format_version,
            FileHeader::GroundTruth(h) => h.format_version,
            FileHeader::Report(h) => h.format_version,
            FileHeader::DrawCommands(h) => h.format_version,
        }
    }
}

// ---------------------------------------------------------------------------
// Line plumbing
// ---------------------------------------------------------------------------

/// Non-blank lines of a stream paired with their 1-based line numbers.
pub struct RecordLines<R> {
    inner: io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> RecordLines<R> {
    pub fn new(reader: R) -> Self {
        Self { inner: reader.lines(), line_no: 0 }
    }
}

impl<R: BufRead> Iterator for RecordLines<R> {
    type Item = Result<(usize, String), IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.inner.next()?;
            self.line_no += 1;
            match line {
                Err(e) => return Some(Err(e.into())),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Some(Ok((self.line_no, l))),
            }
        }
    }
}

pub fn parse_record<T: for<'de> Deserialize<'de>>(line: usize, text: &str) -> Result<T, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::Parse { line, message: e.to_string() })
}

/// Reads and checks the header of any supported file.
pub fn read_header<R: BufRead>(lines: &mut RecordLines<R>) -> Result<(usize, FileHeader), IngestError> {
    let (line, text) = lines.next().ok_or(IngestError::MissingHeader)??;
    let header: FileHeader = parse_record(line, &text)?;
    if header.format_version() != FORMAT_VERSION {
        return Err(IngestError::Version { line, found: header.format_version() });
    }
    if let FileHeader::Detections(DetectionStreamHeader { geometry, .. })
    | FileHeader::Report(ReportHeader { geometry, .. })
    | FileHeader::DrawCommands(DrawCommandsHeader { geometry, .. }) = &header
    {
        if !geometry.is_valid() {
            return Err(IngestError::Invalid {
                line,
                findings: vec![format!("geometry {}x{} must be at least 1x1", geometry.width, geometry.height)],
            });
        }
    }
    Ok((line, header))
}

/// Reads the header of the file at `path` without consuming the rest.
pub fn peek_header(path: &Path) -> Result<FileHeader, IngestError> {
    let mut lines = RecordLines::new(BufReader::new(File::open(path)?));
    read_header(&mut lines).map(|(_, h)| h)
}

pub fn write_record<W: Write, T: Serialize>(w: &mut W, record: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, record).map_err(io::Error::other)?;
    w.write_all(b"\n")
}

// ---------------------------------------------------------------------------
// Detection stream
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: u64,
    #[serde(default)]
    pub persons: Vec<PersonDetection>,
    #[serde(default)]
    pub faces: Vec<FaceDetection>,
}

impl FrameRecord {
    pub fn from_frame(frame: &Frame) -> Self {
        Self { frame_id: frame.frame_id, persons: frame.persons.clone(), faces: frame.faces.clone() }
    }

    pub fn into_frame(self, geometry: ImageGeometry) -> Frame {
        Frame { frame_id: self.frame_id, geometry, persons: self.persons, faces: self.faces, pixels: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedFrame {
    pub frame: Frame,
    pub line: usize,
    /// Clamping notices; never fatal.
    pub warnings: Vec<String>,
}

fn clamp_value(v: &mut f64, hi: f64, what: impl FnOnce() -> String, warnings: &mut Vec<String>) {
    if !v.is_finite() {
        return;
    }
    let c = v.clamp(0.0, hi);
    if c != *v {
        warnings.push(format!("{}{} clamped to {}", what(), *v, c));
        *v = c;
    }
}

fn clamp_point(p: &mut Point2D, g: ImageGeometry, who: &str, warnings: &mut Vec<String>) {
    clamp_value(&mut p.x, f64::from(g.width), || format!("{who} x="), warnings);
    clamp_value(&mut p.y, f64::from(g.height), || format!("{who} y="), warnings);
}

fn clamp_box(b: &mut BoundingBox, g: ImageGeometry, who: &str, warnings: &mut Vec<String>) {
    let (w, h) = (f64::from(g.width), f64::from(g.height));
    clamp_value(&mut b.x_min, w, || format!("{who} x_min="), warnings);
    clamp_value(&mut b.y_min, h, || format!("{who} y_min="), warnings);
    clamp_value(&mut b.x_max, w, || format!("{who} x_max="), warnings);
    clamp_value(&mut b.y_max, h, || format!("{who} y_max="), warnings);
}

/// Pulls every box corner and keypoint into `[0, width] x [0, height]` and
/// describes each change.
pub fn clamp_frame(frame: &mut Frame) -> Vec<String> {
    let g = frame.geometry;
    let mut warnings = Vec::new();
    for p in &mut frame.persons {
        clamp_box(&mut p.bbox, g, &format!("person {} box", p.id), &mut warnings);
        if let Some(s) = &mut p.left_shoulder {
            clamp_point(s, g, &format!("person {} left_shoulder", p.id), &mut warnings);
        }
        if let Some(s) = &mut p.right_shoulder {
            clamp_point(s, g, &format!("person {} right_shoulder", p.id), &mut warnings);
        }
    }
    for f in &mut frame.faces {
        clamp_box(&mut f.bbox, g, &format!("face {} box", f.id), &mut warnings);
    }
    warnings
}

/// Streaming reader over a detection file.
///
/// Each frame is clamped to the image and then validated. Iteration continues
/// past bad records so that every problem can be reported; callers that need
/// all-or-nothing semantics stop at the first `Err`.
pub struct DetectionReader<R> {
    lines: RecordLines<R>,
    header: DetectionStreamHeader,
    last_frame_id: Option<u64>,
}

impl<R: BufRead> DetectionReader<R> {
    pub fn new(reader: R) -> Result<Self, IngestError> {
        let mut lines = RecordLines::new(reader);
        let (line, header) = read_header(&mut lines)?;
        let FileHeader::Detections(header) = header else {
            return Err(IngestError::WrongFormat { line, expected: "detections", found: header.kind() });
        };
        Ok(Self { lines, header, last_frame_id: None })
    }

    pub fn header(&self) -> &DetectionStreamHeader {
        &self.header
    }

    fn ingest(&mut self, line: usize, text: &str) -> Result<IngestedFrame, IngestError> {
        let record: FrameRecord = parse_record(line, text)?;
        if let Some(previous) = self.last_frame_id {
            if record.frame_id <= previous {
                return Err(IngestError::Ordering { line, previous, found: record.frame_id });
            }
        }
        self.last_frame_id = Some(record.frame_id);
        let mut frame = record.into_frame(self.header.geometry);
        let warnings = clamp_frame(&mut frame);
        let findings = validate_frame(&frame);
        if !findings.is_empty() {
            return Err(IngestError::Invalid { line, findings });
        }
        Ok(IngestedFrame { frame, line, warnings })
    }
}

impl<R: BufRead> Iterator for DetectionReader<R> {
    type Item = Result<IngestedFrame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        Some(self.ingest(line, &text))
    }
}

/// Reads a whole detection stream, failing on the first bad record.
pub fn read_detection_stream<R: BufRead>(
    reader: R,
) -> Result<(DetectionStreamHeader, Vec<IngestedFrame>), IngestError> {
    let mut r = DetectionReader::new(reader)?;
    let frames = r.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((r.header, frames))
}

pub fn write_detection_stream<'a, W: Write>(
    w: &mut W,
    header: &DetectionStreamHeader,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> io::Result<()> {
    write_record(w, &FileHeader::Detections(header.clone()))?;
    for f in frames {
        write_record(w, &FrameRecord::from_frame(f))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Recorded scores
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordedScoresEntry {
    pub frame_id: u64,
    pub face_id: String,
    /// Order: no_mask, mask, improper_mask.
    pub mask_scores: [f64; 3],
    /// Order: interaction, no_interaction.
    pub hand_scores: [f64; 2],
}

pub struct ScoresReader<R> {
    lines: RecordLines<R>,
    seen: HashSet<(u64, String)>,
}

impl<R: BufRead> ScoresReader<R> {
    pub fn new(reader: R) -> Result<Self, IngestError> {
        let mut lines = RecordLines::new(reader);
        let (line, header) = read_header(&mut lines)?;
        if !matches!(header, FileHeader::Scores(_)) {
            return Err(IngestError::WrongFormat { line, expected: "scores", found: header.kind() });
        }
        Ok(Self { lines, seen: HashSet::new() })
    }

    fn ingest(&mut self, line: usize, text: &str) -> Result<RecordedScoresEntry, IngestError> {
        let e: RecordedScoresEntry = parse_record(line, text)?;
        check_distribution::<MaskLabel>(&e.mask_scores)
            .and_then(|_| check_distribution::<HandLabel>(&e.hand_scores))
            .map_err(|err| IngestError::BadDistribution { line, message: err.to_string() })?;
        if !self.seen.insert((e.frame_id, e.face_id.clone())) {
            return Err(IngestError::DuplicateKey { line, frame_id: e.frame_id, face_id: e.face_id });
        }
        Ok(e)
    }
}

impl<R: BufRead> Iterator for ScoresReader<R> {
    type Item = Result<RecordedScoresEntry, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        Some(self.ingest(line, &text))
    }
}

/// Builds the `(frame_id, face_id)` score lookup; any bad record is fatal.
pub fn read_recorded_scores<R: BufRead>(reader: R) -> Result<RecordedScores, IngestError> {
    let mut store = RecordedScores::default();
    for entry in ScoresReader::new(reader)? {
        let e = entry?;
        store
            .insert(e.frame_id, &e.face_id, e.mask_scores, e.hand_scores)
            .expect("entries are checked by the reader");
    }
    Ok(store)
}

pub fn write_recorded_scores<W: Write>(w: &mut W, scores: &RecordedScores) -> io::Result<()> {
    write_record(w, &FileHeader::Scores(ScoresHeader::default()))?;
    for (frame_id, face_id, e) in scores.entries() {
        write_record(
            w,
            &RecordedScoresEntry {
                frame_id,
                face_id: face_id.to_string(),
                mask_scores: e.mask_scores,
                hand_scores: e.hand_scores,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceLabel {
    Keeps,
    Violates,
}

impl DistanceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceLabel::Keeps => "keeps",
            DistanceLabel::Violates => "violates",
        }
    }
}

impl FromStr for DistanceLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keeps" => Ok(DistanceLabel::Keeps),
            "violates" => Ok(DistanceLabel::Violates),
            _ => Err(ModelError::UnknownLabel { kind: "distance", value: s.to_string() }),
        }
    }
}

/// Annotation of one face. Absent labels are unannotated and never scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFace {
    pub id: String,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<HandLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPerson {
    pub id: String,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GroundTruthFrame {
    pub frame_id: u64,
    #[serde(default)]
    pub faces: Vec<GroundTruthFace>,
    #[serde(default)]
    pub persons: Vec<GroundTruthPerson>,
}

// Label fields are read as plain strings so that unknown values surface as
// `UnknownLabel` rather than a generic parse error.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundTruthFace {
    id: String,
    #[serde(rename = "box", default)]
    bbox: Option<BoundingBox>,
    #[serde(default)]
    mask: Option<String>,
    #[serde(default)]
    hand: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundTruthPerson {
    id: String,
    #[serde(rename = "box", default)]
    bbox: Option<BoundingBox>,
    #[serde(default)]
    distance: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundTruthFrame {
    frame_id: u64,
    #[serde(default)]
    faces: Vec<RawGroundTruthFace>,
    #[serde(default)]
    persons: Vec<RawGroundTruthPerson>,
}

fn label<T: FromStr<Err = ModelError>>(line: usize, raw: Option<String>) -> Result<Option<T>, IngestError> {
    raw.map(|s| s.parse().map_err(|source| IngestError::UnknownLabel { line, source })).transpose()
}

fn convert_ground_truth(line: usize, raw: RawGroundTruthFrame) -> Result<GroundTruthFrame, IngestError> {
    let faces = raw
        .faces
        .into_iter()
        .map(|f| {
            Ok(GroundTruthFace { id: f.id, bbox: f.bbox, mask: label(line, f.mask)?, hand: label(line, f.hand)? })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    let persons = raw
        .persons
        .into_iter()
        .map(|p| Ok(GroundTruthPerson { id: p.id, bbox: p.bbox, distance: label(line, p.distance)? }))
        .collect::<Result<Vec<_>, IngestError>>()?;
    let gt = GroundTruthFrame { frame_id: raw.frame_id, faces, persons };

    let mut findings = Vec::new();
    let mut face_ids = HashSet::new();
    for f in &gt.faces {
        if !face_ids.insert(f.id.as_str()) {
            findings.push(format!("duplicate face id {:?}", f.id));
        }
        check_gt_box(&mut findings, "face", &f.id, f.bbox);
    }
    let mut person_ids = HashSet::new();
    for p in &gt.persons {
        if !person_ids.insert(p.id.as_str()) {
            findings.push(format!("duplicate person id {:?}", p.id));
        }
        check_gt_box(&mut findings, "person", &p.id, p.bbox);
    }
    if findings.is_empty() {
        Ok(gt)
    } else {
        Err(IngestError::Invalid { line, findings })
    }
}

fn check_gt_box(findings: &mut Vec<String>, kind: &str, id: &str, bbox: Option<BoundingBox>) {
    if let Some(b) = bbox {
        if !b.is_finite() || !b.is_ordered() {
            findings.push(format!("box of {kind} {id} is not a finite ordered box"));
        }
    }
}

pub struct GroundTruthReader<R> {
    lines: RecordLines<R>,
    header: GroundTruthHeader,
    last_frame_id: Option<u64>,
}

impl<R: BufRead> GroundTruthReader<R> {
    pub fn new(reader: R) -> Result<Self, IngestError> {
        let mut lines = RecordLines::new(reader);
        let (line, header) = read_header(&mut lines)?;
        let FileHeader::GroundTruth(header) = header else {
            return Err(IngestError::WrongFormat { line, expected: "ground_truth", found: header.kind() });
        };
        Ok(Self { lines, header, last_frame_id: None })
    }

    pub fn header(&self) -> &GroundTruthHeader {
        &self.header
    }

    fn ingest(&mut self, line: usize, text: &str) -> Result<GroundTruthFrame, IngestError> {
        let raw: RawGroundTruthFrame = parse_record(line, text)?;
        if let Some(previous) = self.last_frame_id {
            if raw.frame_id <= previous {
                return Err(IngestError::Ordering { line, previous, found: raw.frame_id });
            }
        }
        self.last_frame_id = Some(raw.frame_id);
        convert_ground_truth(line, raw)
    }
}

impl<R: BufRead> Iterator for GroundTruthReader<R> {
    type Item = Result<GroundTruthFrame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next()? {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
        Some(self.ingest(line, &text))
    }
}

pub fn read_ground_truth<R: BufRead>(reader: R) -> Result<(GroundTruthHeader, Vec<GroundTruthFrame>), IngestError> {
    let mut r = GroundTruthReader::new(reader)?;
    let frames = r.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((r.header, frames))
}

pub fn write_ground_truth<'a, W: Write>(
    w: &mut W,
    header: &GroundTruthHeader,
    frames: impl IntoIterator<Item = &'a GroundTruthFrame>,
) -> io::Result<()> {
    write_record(w, &FileHeader::GroundTruth(header.clone()))?;
    for f in frames {
        write_record(w, f)?;
    }
    Ok(())
}
