//! C ABI over the guardline engine.
//!
//! Every function returns a [`GlStatus`]. On failure a message describing the
//! problem is kept per thread and can be read with [`gl_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Strings returned by the library are
//! NUL-terminated UTF-8 and must be released with [`gl_string_free`].
//!
//! Only the recorded-scores classifier backend is available through this
//! interface.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use guardline::config::EngineConfig;
use guardline::distancing::{assess_pair, DistanceStatus, DistancingConfig};
use guardline::face::{expand_crop, BackendKind, Classifier, CropConfig, RecordedScores};
use guardline::ingestion::{
    clamp_frame, read_recorded_scores, DetectionReader, IngestedFrame, ReportHeader, FORMAT_VERSION,
};
use guardline::model::{validate_frame, BoundingBox, FaceDetection, Frame, ImageGeometry, PersonDetection, Point2D};
use guardline::pipeline::Engine;
use guardline::report::{write_frame_report, write_report_header, FrameReport};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 3,
    /// An input document could not be parsed.
    ParseError = 4,
    /// The engine rejected the input while processing it.
    EngineError = 5,
    /// A person lacks a usable shoulder line.
    NotAssessable = 6,
    /// The library panicked; the call had no effect.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlPoint {
    pub x: f64,
    pub y: f64,
}

/// Axis-aligned box in pixels, `x_min <= x_max` and `y_min <= y_max`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlPairResult {
    pub distance: f64,
    pub threshold: f64,
    pub violation: bool,
}

/// Counts taken from one processed frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GlFrameSummary {
    pub frame_id: u64,
    pub face_count: u32,
    pub pair_count: u32,
    pub violating_pairs: u32,
    pub keeps: u32,
    pub violates: u32,
    pub unassessed: u32,
    pub warning_count: u32,
}

/// Opaque engine handle.
pub struct GlEngine {
    engine: Engine,
}

/// Opaque frame under construction.
pub struct GlFrame {
    frame: Frame,
}

struct Failure {
    status: GlStatus,
    message: String,
}

impl Failure {
    fn new(status: GlStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure or panic and turns the outcome into a code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GlStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(_) => {
            set_last_error("internal panic");
            GlStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers the C side promises are valid or NULL.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::new(GlStatus::NullPointer, format!("{what} is NULL")))
}

fn non_null_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as above, and the caller does not alias the pointee.
    unsafe { p.as_mut() }.ok_or_else(|| Failure::new(GlStatus::NullPointer, format!("{what} is NULL")))
}

fn string_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::new(GlStatus::NullPointer, format!("{what} is NULL")));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::new(GlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn optional_string_arg(p: *const c_char, what: &str) -> Result<Option<String>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        string_arg(p, what).map(Some)
    }
}

fn out_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let out = non_null_mut(out, "output string pointer")?;
    let c = CString::new(text).map_err(|_| Failure::new(GlStatus::EngineError, "output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::new(GlStatus::InvalidArgument, e.to_string())
}

fn to_box(b: GlBox) -> BoundingBox {
    BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
}

fn from_box(b: BoundingBox) -> GlBox {
    GlBox { x_min: b.x_min, y_min: b.y_min, x_max: b.x_max, y_max: b.y_max }
}

fn to_point(p: GlPoint) -> Point2D {
    Point2D::new(p.x, p.y)
}

/// Message of the most recent failed call on this thread, or NULL if none
/// has failed yet. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn gl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decides one pair of persons from their shoulder keypoints.
///
/// `lambda` scales the mean shoulder width into the distance threshold. A
/// shoulder line shorter than the engine's minimum width gives
/// `GL_STATUS_NOT_ASSESSABLE`.
#[no_mangle]
pub unsafe extern "C" fn gl_assess_shoulders(
    a_left: GlPoint,
    a_right: GlPoint,
    b_left: GlPoint,
    b_right: GlPoint,
    lambda: f64,
    out: *mut GlPairResult,
) -> GlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let cfg = DistancingConfig::new(lambda, DistancingConfig::default().min_shoulder_width()).map_err(invalid)?;
        let person = |id: &str, l: GlPoint, r: GlPoint| PersonDetection {
            id: id.into(),
            bbox: BoundingBox::new(0.0, 0.0, 0.0, 0.0),
            left_shoulder: Some(to_point(l)),
            right_shoulder: Some(to_point(r)),
            confidence: 1.0,
        };
        let pair = assess_pair(&person("a", a_left, a_right), &person("b", b_left, b_right), &cfg)
            .map_err(|e| Failure::new(GlStatus::NotAssessable, e.to_string()))?;
        *out = GlPairResult { distance: pair.distance, threshold: pair.threshold, violation: pair.violation };
        Ok(())
    })
}

/// Widens a face box by `margin` of its size on every side, optionally
/// clamped to a `width` x `height` image.
#[no_mangle]
pub unsafe extern "C" fn gl_expand_crop(
    face: GlBox,
    width: u32,
    height: u32,
    margin: f64,
    clamp_to_image: bool,
    out: *mut GlBox,
) -> GlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let geometry = ImageGeometry::new(width, height).map_err(invalid)?;
        let cfg = CropConfig::new(margin, clamp_to_image).map_err(invalid)?;
        let b = to_box(face);
        if !(b.is_finite() && b.is_ordered()) {
            return Err(invalid("face box must be finite and ordered"));
        }
        *out = from_box(expand_crop(&b, geometry, &cfg));
        Ok(())
    })
}

/// Creates an engine.
///
/// `config_toml` is the text of an engine configuration file, or NULL for
/// the defaults. `scores_jsonl` is the text of a recorded scores file, or
/// NULL for none, in which case every face is reported as a warning.
#[no_mangle]
pub unsafe extern "C" fn gl_engine_new(
    config_toml: *const c_char,
    scores_jsonl: *const c_char,
    out: *mut *mut GlEngine,
) -> GlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let cfg = match optional_string_arg(config_toml, "config_toml")? {
            Some(text) => EngineConfig::parse(&text).map_err(|e| Failure::new(GlStatus::ParseError, e))?,
            None => EngineConfig::default(),
        };
        if cfg.classifier.backend != BackendKind::Recorded {
            return Err(invalid("only the recorded classifier backend is available through the C interface"));
        }
        let scores = match optional_string_arg(scores_jsonl, "scores_jsonl")? {
            Some(text) => read_recorded_scores(text.as_bytes())
                .map_err(|e| Failure::new(GlStatus::ParseError, format!("scores: {e}")))?,
            None => RecordedScores::default(),
        };
        let scores = Arc::new(scores);
        let mask_desc = cfg.classifier.mask.descriptor(BackendKind::Recorded).map_err(invalid)?;
        let hand_desc = cfg.classifier.hand.descriptor(BackendKind::Recorded).map_err(invalid)?;
        let engine = Engine::new(
            cfg.distancing_config().map_err(invalid)?,
            cfg.crop_config().map_err(invalid)?,
            Classifier::new(mask_desc, scores.clone()).map_err(invalid)?,
            Classifier::new(hand_desc, scores).map_err(invalid)?,
        );
        *out = Box::into_raw(Box::new(GlEngine { engine }));
        Ok(())
    })
}

/// Destroys an engine. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gl_engine_free(engine: *mut GlEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Starts an empty frame of the given size.
#[no_mangle]
pub unsafe extern "C" fn gl_frame_new(frame_id: u64, width: u32, height: u32, out: *mut *mut GlFrame) -> GlStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let geometry = ImageGeometry::new(width, height).map_err(invalid)?;
        *out = Box::into_raw(Box::new(GlFrame { frame: Frame::new(frame_id, geometry) }));
        Ok(())
    })
}

/// Destroys a frame. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gl_frame_free(frame: *mut GlFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Adds a person. Either shoulder pointer may be NULL when the keypoint was
/// not detected, but not just one of them.
#[no_mangle]
pub unsafe extern "C" fn gl_frame_add_person(
    frame: *mut GlFrame,
    id: *const c_char,
    bbox: GlBox,
    left_shoulder: *const GlPoint,
    right_shoulder: *const GlPoint,
    confidence: f64,
) -> GlStatus {
    guard(|| {
        let frame = non_null_mut(frame, "frame")?;
        let id = string_arg(id, "id")?;
        frame.frame.persons.push(PersonDetection {
            id,
            bbox: to_box(bbox),
            left_shoulder: left_shoulder.as_ref().copied().map(to_point),
            right_shoulder: right_shoulder.as_ref().copied().map(to_point),
            confidence,
        });
        Ok(())
    })
}

/// Adds a face, optionally linked to a person id (NULL for none).
#[no_mangle]
pub unsafe extern "C" fn gl_frame_add_face(
    frame: *mut GlFrame,
    id: *const c_char,
    bbox: GlBox,
    confidence: f64,
    person_id: *const c_char,
) -> GlStatus {
    guard(|| {
        let frame = non_null_mut(frame, "frame")?;
        let id = string_arg(id, "id")?;
        let person_id = optional_string_arg(person_id, "person_id")?;
        frame.frame.faces.push(FaceDetection { id, bbox: to_box(bbox), confidence, person_id });
        Ok(())
    })
}

fn summarize(r: &FrameReport) -> GlFrameSummary {
    let n = |x: usize| u32::try_from(x).unwrap_or(u32::MAX);
    let status = |s| n(r.subject_statuses.iter().filter(|x| x.status == s).count());
    GlFrameSummary {
        frame_id: r.frame_id,
        face_count: n(r.face_assessments.len()),
        pair_count: n(r.pair_assessments.len()),
        violating_pairs: n(r.pair_assessments.iter().filter(|p| p.violation).count()),
        keeps: status(DistanceStatus::Keeps),
        violates: status(DistanceStatus::Violates),
        unassessed: status(DistanceStatus::Unassessed),
        warning_count: n(r.warnings.len()),
    }
}

/// Assesses a frame built with the `gl_frame_*` functions.
///
/// Coordinates outside the image are clamped first, as when reading a
/// detection file; a frame that is still malformed afterwards gives
/// `GL_STATUS_INVALID_ARGUMENT`. `summary` and `report_json` may each be
/// NULL. When given, `report_json` receives the frame report as one JSON
/// object, to be released with `gl_string_free`. The frame is not modified.
#[no_mangle]
pub unsafe extern "C" fn gl_engine_process_frame(
    engine: *const GlEngine,
    frame: *const GlFrame,
    summary: *mut GlFrameSummary,
    report_json: *mut *mut c_char,
) -> GlStatus {
    guard(|| {
        let engine = non_null(engine, "engine")?;
        let mut f = non_null(frame, "frame")?.frame.clone();
        let warnings = clamp_frame(&mut f);
        let problems = validate_frame(&f);
        if !problems.is_empty() {
            return Err(invalid(problems.join("; ")));
        }
        let report = engine
            .engine
            .process_ingested(&IngestedFrame { frame: f, line: 0, warnings })
            .map_err(|e| Failure::new(GlStatus::EngineError, e.to_string()))?;
        if let Some(s) = summary.as_mut() {
            *s = summarize(&report);
        }
        if !report_json.is_null() {
            let mut buf = Vec::new();
            write_frame_report(&mut buf, &report).map_err(|e| Failure::new(GlStatus::EngineError, e.to_string()))?;
            let text = String::from_utf8(buf).expect("reports serialize to UTF-8");
            out_string(report_json, text.trim_end().to_owned())?;
        }
        Ok(())
    })
}

/// Processes the text of a whole detection file and returns the report
/// file, byte for byte what the command-line `run` writes for the same
/// inputs.
#[no_mangle]
pub unsafe extern "C" fn gl_engine_process_detections(
    engine: *const GlEngine,
    detections_jsonl: *const c_char,
    report_jsonl: *mut *mut c_char,
) -> GlStatus {
    guard(|| {
        let engine = non_null(engine, "engine")?;
        let text = string_arg(detections_jsonl, "detections_jsonl")?;
        non_null_mut(report_jsonl, "report_jsonl")?;
        let parse = |e: guardline::ingestion::IngestError| Failure::new(GlStatus::ParseError, format!("detections: {e}"));
        let reader = DetectionReader::new(text.as_bytes()).map_err(parse)?;
        let header = reader.header().clone();
        let frames = reader.collect::<Result<Vec<_>, _>>().map_err(parse)?;
        let reports = engine.engine.process_batch(&frames).map_err(|e| Failure::new(GlStatus::EngineError, e.to_string()))?;

        let mut buf = Vec::new();
        let io = |e: std::io::Error| Failure::new(GlStatus::EngineError, e.to_string());
        write_report_header(
            &mut buf,
            &ReportHeader { format_version: FORMAT_VERSION, video_id: header.video_id, geometry: header.geometry },
        )
        .map_err(io)?;
        for r in &reports {
            write_frame_report(&mut buf, r).map_err(io)?;
        }
        out_string(report_jsonl, String::from_utf8(buf).expect("reports serialize to UTF-8"))
    })
}
