use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use guardline_ffi::*;

fn clip(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/clip").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = gl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    gl_string_free(s);
    out
}

fn pt(x: f64, y: f64) -> GlPoint {
    GlPoint { x, y }
}

#[test]
fn shoulder_pairs_follow_the_threshold_rule() {
    let mut out = GlPairResult { distance: 0.0, threshold: 0.0, violation: false };
    unsafe {
        let s = gl_assess_shoulders(pt(80.0, 0.0), pt(120.0, 0.0), pt(170.0, 0.0), pt(230.0, 0.0), 3.0, &mut out);
        assert_eq!(s, GlStatus::Ok);
        assert_eq!((out.distance, out.threshold, out.violation), (100.0, 150.0, true));
        let s = gl_assess_shoulders(pt(80.0, 0.0), pt(120.0, 0.0), pt(220.0, 0.0), pt(280.0, 0.0), 3.0, &mut out);
        assert_eq!(s, GlStatus::Ok);
        assert_eq!((out.distance, out.violation), (150.0, false));

        let s = gl_assess_shoulders(pt(5.0, 5.0), pt(5.0, 5.0), pt(0.0, 0.0), pt(10.0, 0.0), 3.0, &mut out);
        assert_eq!(s, GlStatus::NotAssessable);
        assert_eq!(gl_assess_shoulders(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 0.0), pt(1.0, 0.0), -1.0, &mut out), GlStatus::InvalidArgument);
        assert_eq!(gl_assess_shoulders(pt(0.0, 0.0), pt(9.0, 0.0), pt(0.0, 0.0), pt(9.0, 0.0), 3.0, ptr::null_mut()), GlStatus::NullPointer);
    }
    assert!(last_error().contains("out"));
}

#[test]
fn crops_expand_and_clamp() {
    let mut out = GlBox { x_min: 0.0, y_min: 0.0, x_max: 0.0, y_max: 0.0 };
    let b = GlBox { x_min: 100.0, y_min: 100.0, x_max: 200.0, y_max: 200.0 };
    unsafe {
        assert_eq!(gl_expand_crop(b, 1000, 1000, 0.2, true, &mut out), GlStatus::Ok);
        assert_eq!(out, GlBox { x_min: 80.0, y_min: 80.0, x_max: 220.0, y_max: 220.0 });
        assert_eq!(gl_expand_crop(b, 150, 150, 0.2, true, &mut out), GlStatus::Ok);
        assert_eq!(out, GlBox { x_min: 80.0, y_min: 80.0, x_max: 150.0, y_max: 150.0 });
        assert_eq!(gl_expand_crop(b, 0, 150, 0.2, true, &mut out), GlStatus::InvalidArgument);
        let flipped = GlBox { x_min: 5.0, y_min: 0.0, x_max: 1.0, y_max: 1.0 };
        assert_eq!(gl_expand_crop(flipped, 10, 10, 0.2, true, &mut out), GlStatus::InvalidArgument);
    }
}

#[test]
fn detection_file_round_trip_matches_the_library() {
    let (det, scores) = (clip("detections.jsonl"), clip("scores.jsonl"));
    let mut engine = ptr::null_mut();
    let mut report = ptr::null_mut();
    let text = unsafe {
        assert_eq!(gl_engine_new(ptr::null(), scores.as_ptr(), &mut engine), GlStatus::Ok);
        assert_eq!(gl_engine_process_detections(engine, det.as_ptr(), &mut report), GlStatus::Ok);
        gl_engine_free(engine);
        take(report)
    };

    let (header, frames) = guardline::ingestion::read_detection_stream(det.to_bytes()).unwrap();
    let recorded = std::sync::Arc::new(guardline::ingestion::read_recorded_scores(scores.to_bytes()).unwrap());
    let lib = guardline::pipeline::Engine::new(
        Default::default(),
        Default::default(),
        guardline::face::Classifier::new(guardline::face::ClassifierBackendDescriptor::recorded(), recorded.clone()).unwrap(),
        guardline::face::Classifier::new(guardline::face::ClassifierBackendDescriptor::recorded(), recorded).unwrap(),
    );
    let mut want = Vec::new();
    guardline::report::write_report_header(
        &mut want,
        &guardline::ingestion::ReportHeader { format_version: 1, video_id: header.video_id, geometry: header.geometry },
    )
    .unwrap();
    for r in lib.process_batch(&frames).unwrap() {
        guardline::report::write_frame_report(&mut want, &r).unwrap();
    }
    assert_eq!(text, String::from_utf8(want).unwrap());
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn frames_built_by_hand_are_assessed() {
    let scores = CString::new(concat!(
        "{\"format\":\"scores\",\"format_version\":1}\n",
        "{\"frame_id\":7,\"face_id\":\"f\",\"mask_scores\":[0.1,0.8,0.1],\"hand_scores\":[0.3,0.7]}\n",
    ))
    .unwrap();
    let (a, b, f) = (CString::new("a").unwrap(), CString::new("b").unwrap(), CString::new("f").unwrap());
    let body = GlBox { x_min: 0.0, y_min: 0.0, x_max: 10.0, y_max: 10.0 };
    unsafe {
        let mut engine = ptr::null_mut();
        assert_eq!(gl_engine_new(ptr::null(), scores.as_ptr(), &mut engine), GlStatus::Ok);
        let mut frame = ptr::null_mut();
        assert_eq!(gl_frame_new(7, 640, 480, &mut frame), GlStatus::Ok);
        let (al, ar, bl, br) = (pt(80.0, 50.0), pt(120.0, 50.0), pt(170.0, 50.0), pt(230.0, 50.0));
        assert_eq!(gl_frame_add_person(frame, a.as_ptr(), body, &al, &ar, 0.9), GlStatus::Ok);
        assert_eq!(gl_frame_add_person(frame, b.as_ptr(), body, &bl, &br, 0.9), GlStatus::Ok);
        assert_eq!(gl_frame_add_person(frame, CString::new("c").unwrap().as_ptr(), body, ptr::null(), ptr::null(), 0.5), GlStatus::Ok);
        // The right edge sits past the image and gets clamped.
        let face = GlBox { x_min: 600.0, y_min: 10.0, x_max: 650.0, y_max: 60.0 };
        assert_eq!(gl_frame_add_face(frame, f.as_ptr(), face, 0.95, a.as_ptr()), GlStatus::Ok);

        let mut summary = GlFrameSummary::default();
        let mut json = ptr::null_mut();
        assert_eq!(gl_engine_process_frame(engine, frame, &mut summary, &mut json), GlStatus::Ok);
        assert_eq!(
            summary,
            GlFrameSummary { frame_id: 7, face_count: 1, pair_count: 1, violating_pairs: 1, keeps: 0, violates: 2, unassessed: 1, warning_count: 2 }
        );
        let json = take(json);
        assert!(json.starts_with("{\"frame_id\":7"), "{json}");
        assert!(json.contains("\"mask_label\":\"mask\"") && json.contains("clamped to 640"), "{json}");
        assert!(!json.contains('\n'));

        // Summary only.
        assert_eq!(gl_engine_process_frame(engine, frame, &mut summary, ptr::null_mut()), GlStatus::Ok);

        // A lone shoulder is malformed.
        assert_eq!(gl_frame_add_person(frame, CString::new("d").unwrap().as_ptr(), body, &al, ptr::null(), 0.5), GlStatus::Ok);
        assert_eq!(gl_engine_process_frame(engine, frame, &mut summary, ptr::null_mut()), GlStatus::InvalidArgument);
        assert!(last_error().contains("unpaired shoulder"), "{}", last_error());

        gl_frame_free(frame);
        gl_engine_free(engine);
    }
}

#[test]
fn bad_inputs_give_codes_and_messages() {
    unsafe {
        let mut engine = ptr::null_mut();
        let bad = CString::new("[distancing]\nlambda = -2.0\n").unwrap();
        assert_eq!(gl_engine_new(bad.as_ptr(), ptr::null(), &mut engine), GlStatus::InvalidArgument);
        let garbled = CString::new("[distancing\n").unwrap();
        assert_eq!(gl_engine_new(garbled.as_ptr(), ptr::null(), &mut engine), GlStatus::ParseError);
        let interchange = CString::new("[classifier]\nbackend = \"interchange_model\"\n").unwrap();
        assert_eq!(gl_engine_new(interchange.as_ptr(), ptr::null(), &mut engine), GlStatus::InvalidArgument);
        assert!(last_error().contains("recorded"));
        assert_eq!(gl_engine_new(ptr::null(), ptr::null(), ptr::null_mut()), GlStatus::NullPointer);

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(gl_engine_new(not_utf8.as_ptr().cast(), ptr::null(), &mut engine), GlStatus::InvalidUtf8);

        assert_eq!(gl_engine_new(ptr::null(), ptr::null(), &mut engine), GlStatus::Ok);
        let mut report = ptr::null_mut();
        let wrong = clip("scores.jsonl");
        assert_eq!(gl_engine_process_detections(engine, wrong.as_ptr(), &mut report), GlStatus::ParseError);
        assert!(last_error().contains("expected a `detections` file"), "{}", last_error());
        assert!(report.is_null());
        assert_eq!(gl_engine_process_detections(ptr::null(), wrong.as_ptr(), &mut report), GlStatus::NullPointer);
        gl_engine_free(engine);

        let mut frame = ptr::null_mut();
        assert_eq!(gl_frame_new(1, 0, 0, &mut frame), GlStatus::InvalidArgument);
        gl_frame_free(ptr::null_mut());
        gl_engine_free(ptr::null_mut());
        gl_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_kept_per_thread() {
    unsafe {
        let mut out = GlBox { x_min: 0.0, y_min: 0.0, x_max: 0.0, y_max: 0.0 };
        let b = GlBox { x_min: 0.0, y_min: 0.0, x_max: 1.0, y_max: 1.0 };
        assert_eq!(gl_expand_crop(b, 0, 0, 0.2, true, &mut out), GlStatus::InvalidArgument);
    }
    let here = last_error();
    let there = std::thread::spawn(|| gl_last_error_message().is_null()).join().unwrap();
    assert!(there);
    assert_eq!(last_error(), here);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(gl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
