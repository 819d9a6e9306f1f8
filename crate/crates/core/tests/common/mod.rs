#![allow(dead_code)]

pub mod oracle;
pub mod videos;

use std::path::PathBuf;
use std::sync::Arc;

use guardline::distancing::{DistanceStatus, DistancingConfig};
use guardline::face::{Classifier, ClassifierBackendDescriptor, CropConfig, RecordedScores};
use guardline::ingestion::GroundTruthFrame;
use guardline::model::{BoundingBox, FaceDetection, Frame, ImageGeometry, PersonDetection, Point2D};
use guardline::pipeline::Engine;
use guardline::report::FrameReport;
use rand::Rng;

use oracle::{OracleEntity, OracleFrame};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn geometry() -> ImageGeometry {
    ImageGeometry::new(1920, 1080).unwrap()
}

/// A person whose shoulder line is centred on `(cx, cy)`, `width` long and
/// tilted by `angle` radians.
pub fn person_at(id: &str, cx: f64, cy: f64, width: f64, angle: f64) -> PersonDetection {
    let (s, c) = angle.sin_cos();
    let (hx, hy) = (c * width / 2.0, s * width / 2.0);
    PersonDetection {
        id: id.to_string(),
        bbox: BoundingBox::new(cx - width, cy - width / 2.0, cx + width, cy + 3.0 * width),
        left_shoulder: Some(Point2D::new(cx - hx, cy - hy)),
        right_shoulder: Some(Point2D::new(cx + hx, cy + hy)),
        confidence: 0.9,
    }
}

/// Random frame with `n` persons. Every person has both shoulders, widths
/// are in [10, 200) pixels and centres anywhere in a 1920x1080 image.
pub fn random_frame<R: Rng>(rng: &mut R, frame_id: u64, n: usize) -> Frame {
    let mut frame = Frame::new(frame_id, geometry());
    for i in 0..n {
        let cx = rng.gen_range(0.0..1920.0);
        let cy = rng.gen_range(0.0..1080.0);
        let w = rng.gen_range(10.0..200.0);
        let a = rng.gen_range(-0.6..0.6);
        frame.persons.push(person_at(&format!("p{i}"), cx, cy, w, a));
    }
    frame
}

/// Like [`random_frame`], but some persons lose a shoulder and some get a
/// shoulder width under one pixel.
pub fn random_messy_frame<R: Rng>(rng: &mut R, frame_id: u64, n: usize) -> Frame {
    let mut frame = random_frame(rng, frame_id, n);
    for p in &mut frame.persons {
        match rng.gen_range(0..10) {
            0 => p.left_shoulder = None,
            1 => p.right_shoulder = None,
            2 => {
                let s = p.left_shoulder.unwrap();
                p.right_shoulder = Some(Point2D::new(s.x + rng.gen_range(0.0..0.9), s.y));
            }
            _ => {}
        }
    }
    frame
}

pub fn transform_frame(frame: &Frame, f: impl Fn(Point2D) -> Point2D) -> Frame {
    let mut out = frame.clone();
    for p in &mut out.persons {
        p.left_shoulder = p.left_shoulder.map(&f);
        p.right_shoulder = p.right_shoulder.map(&f);
    }
    out
}

pub fn recorded_engine(scores: RecordedScores, distancing: DistancingConfig) -> Engine {
    let scores = Arc::new(scores);
    Engine::new(
        distancing,
        CropConfig::default(),
        Classifier::new(ClassifierBackendDescriptor::recorded(), scores.clone()).unwrap(),
        Classifier::new(ClassifierBackendDescriptor::recorded(), scores).unwrap(),
    )
}

/// Adds one face per person (above the shoulders) and a random score entry
/// for each.
pub fn add_faces<R: Rng>(rng: &mut R, frame: &mut Frame, scores: &mut RecordedScores) {
    let persons = frame.persons.clone();
    for (i, p) in persons.iter().enumerate() {
        let id = format!("f{i}");
        let b = p.bbox;
        frame.faces.push(FaceDetection {
            id: id.clone(),
            bbox: BoundingBox::new(b.x_min, b.y_min, b.x_min + 20.0, b.y_min + 24.0),
            confidence: 0.8,
            person_id: Some(p.id.clone()),
        });
        let m: [f64; 3] = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let ms: f64 = m.iter().sum();
        let h: f64 = rng.gen_range(0.0..1.0);
        scores.insert(frame.frame_id, &id, [m[0] / ms, m[1] / ms, 1.0 - m[0] / ms - m[1] / ms], [h, 1.0 - h]).unwrap();
    }
}

fn status_label(s: DistanceStatus) -> Option<String> {
    match s {
        DistanceStatus::Keeps => Some("keeps".into()),
        DistanceStatus::Violates => Some("violates".into()),
        DistanceStatus::Unassessed => None,
    }
}

/// Flattens a report into the oracle's view.
pub fn oracle_predicted(r: &FrameReport) -> OracleFrame {
    OracleFrame {
        frame_id: r.frame_id,
        mask: r
            .face_assessments
            .iter()
            .map(|f| OracleEntity { id: f.face_id.clone(), bbox: Some(f.bbox), label: Some(f.mask_label.as_str().into()) })
            .collect(),
        hand: r
            .face_assessments
            .iter()
            .map(|f| OracleEntity { id: f.face_id.clone(), bbox: Some(f.bbox), label: Some(f.hand_label.as_str().into()) })
            .collect(),
        distance: r
            .subject_statuses
            .iter()
            .map(|s| OracleEntity { id: s.person_id.clone(), bbox: Some(s.bbox), label: status_label(s.status) })
            .collect(),
    }
}

pub fn oracle_truth(g: &GroundTruthFrame) -> OracleFrame {
    OracleFrame {
        frame_id: g.frame_id,
        mask: g
            .faces
            .iter()
            .map(|f| OracleEntity { id: f.id.clone(), bbox: f.bbox, label: f.mask.map(|l| l.as_str().into()) })
            .collect(),
        hand: g
            .faces
            .iter()
            .map(|f| OracleEntity { id: f.id.clone(), bbox: f.bbox, label: f.hand.map(|l| l.as_str().into()) })
            .collect(),
        distance: g
            .persons
            .iter()
            .map(|p| OracleEntity { id: p.id.clone(), bbox: p.bbox, label: p.distance.map(|l| l.as_str().into()) })
            .collect(),
    }
}
