use guardline::distancing::{DistanceStatus, SubjectDistanceStatus, UnassessedReason};
use guardline::evaluation::{TaskAccuracy, VideoAccuracy, VideoInput};
use guardline::face::FaceAssessment;
use guardline::ingestion::{DistanceLabel, GroundTruthFace, GroundTruthFrame, GroundTruthPerson};
use guardline::model::{BoundingBox, HandLabel, MaskLabel};
use guardline::report::FrameReport;

use super::oracle::{oracle_accuracy, Counts, OracleRow};
use super::{oracle_predicted, oracle_truth};

use DistanceLabel as D;
use DistanceStatus as S;
use HandLabel::{Interaction as Touch, NoInteraction as NoTouch};
use MaskLabel::{ImproperMask as Improper, Mask, NoMask};

#[derive(Debug, Clone)]
pub struct Video {
    pub id: String,
    pub reports: Vec<FrameReport>,
    pub truth: Vec<GroundTruthFrame>,
}

impl Video {
    pub fn new(id: &str) -> Self {
        Self { id: id.into(), reports: vec![], truth: vec![] }
    }

    pub fn frame(&mut self) -> &mut Self {
        let frame_id = self.reports.len() as u64 + 1;
        self.reports.push(FrameReport {
            frame_id,
            face_assessments: vec![],
            pair_assessments: vec![],
            subject_statuses: vec![],
            warnings: vec![],
        });
        self.truth.push(GroundTruthFrame { frame_id, faces: vec![], persons: vec![] });
        self
    }

    /// Face `slot` of the current frame: predicted and annotated labels.
    pub fn face(&mut self, slot: u32, pred: (MaskLabel, HandLabel), gt: (Option<MaskLabel>, Option<HandLabel>)) -> &mut Self {
        let b = slot_box(slot);
        self.predicted_face(&format!("f{slot}"), b, pred);
        self.truth_face(&format!("f{slot}"), Some(b), gt)
    }

    pub fn predicted_face(&mut self, id: &str, bbox: BoundingBox, (mask, hand): (MaskLabel, HandLabel)) -> &mut Self {
        self.reports.last_mut().unwrap().face_assessments.push(FaceAssessment {
            face_id: id.into(),
            bbox,
            crop_box: bbox,
            mask_label: mask,
            mask_scores: one_hot3(mask),
            hand_label: hand,
            hand_scores: if hand == Touch { [1.0, 0.0] } else { [0.0, 1.0] },
        });
        self
    }

    pub fn truth_face(&mut self, id: &str, bbox: Option<BoundingBox>, (mask, hand): (Option<MaskLabel>, Option<HandLabel>)) -> &mut Self {
        self.truth.last_mut().unwrap().faces.push(GroundTruthFace { id: id.into(), bbox, mask, hand });
        self
    }

    pub fn person(&mut self, slot: u32, pred: DistanceStatus, gt: Option<DistanceLabel>) -> &mut Self {
        let b = slot_box(100 + slot);
        self.predicted_person(&format!("p{slot}"), b, pred);
        self.truth_person(&format!("p{slot}"), Some(b), gt)
    }

    pub fn predicted_person(&mut self, id: &str, bbox: BoundingBox, status: DistanceStatus) -> &mut Self {
        let reason = (status == S::Unassessed).then_some(UnassessedReason::MissingShoulders);
        self.reports.last_mut().unwrap().subject_statuses.push(SubjectDistanceStatus { person_id: id.into(), bbox, status, reason });
        self
    }

    pub fn truth_person(&mut self, id: &str, bbox: Option<BoundingBox>, distance: Option<DistanceLabel>) -> &mut Self {
        self.truth.last_mut().unwrap().persons.push(GroundTruthPerson { id: id.into(), bbox, distance });
        self
    }

    pub fn input(&self) -> VideoInput<'_> {
        VideoInput { video_id: &self.id, reports: &self.reports, ground_truth: &self.truth }
    }
}

pub fn one_hot3(m: MaskLabel) -> [f64; 3] {
    let mut s = [0.0; 3];
    s[match m {
        NoMask => 0,
        Mask => 1,
        Improper => 2,
    }] = 1.0;
    s
}

/// Non-overlapping 40x40 boxes on a grid.
pub fn slot_box(slot: u32) -> BoundingBox {
    let x = f64::from(slot % 20) * 50.0;
    let y = f64::from(slot / 20) * 50.0;
    BoundingBox::new(x, y, x + 40.0, y + 40.0)
}

pub fn shifted(b: BoundingBox, dx: f64) -> BoundingBox {
    BoundingBox::new(b.x_min + dx, b.y_min, b.x_max + dx, b.y_max)
}

/// Ten faces, of which the first `right` get the annotated mask label.
pub fn mask_video(id: &str, right: u32) -> Video {
    let mut v = Video::new(id);
    for frame in 0..2 {
        v.frame();
        for k in 0..5 {
            let slot = frame * 5 + k;
            let gt = if slot < right { Mask } else { NoMask };
            v.face(slot, (Mask, NoTouch), (Some(gt), Some(NoTouch)));
        }
    }
    v
}

/// The six-video set. Expected per-video tallies (correct/scored):
///
/// | video     | mask  | hand | distance |
/// |-----------|-------|------|----------|
/// | perfect   | 4/4   | 4/4  | 4/4      |
/// | one_wrong | 3/4   | 4/4  | 2/3      |
/// | mostly    | 9/10  | 10/10| -        |
/// | rarely    | 1/10  | 10/10| -        |
/// | missing   | 2/2   | 1/2  | 1/1      |
/// | shifted   | 2/3   | 2/2  | 1/2      |
pub fn six_videos() -> Vec<Video> {
    let mut perfect = Video::new("perfect");
    perfect
        .frame()
        .face(0, (Mask, NoTouch), (Some(Mask), Some(NoTouch)))
        .face(1, (NoMask, Touch), (Some(NoMask), Some(Touch)))
        .person(0, S::Violates, Some(D::Violates))
        .person(1, S::Violates, Some(D::Violates));
    perfect
        .frame()
        .face(0, (Improper, NoTouch), (Some(Improper), Some(NoTouch)))
        .face(1, (Mask, Touch), (Some(Mask), Some(Touch)))
        .person(0, S::Keeps, Some(D::Keeps))
        .person(1, S::Keeps, Some(D::Keeps));

    let mut one_wrong = Video::new("one_wrong");
    one_wrong
        .frame()
        .face(0, (Mask, NoTouch), (Some(Mask), Some(NoTouch)))
        .face(1, (NoMask, NoTouch), (Some(NoMask), Some(NoTouch)))
        .face(2, (Improper, NoTouch), (Some(Improper), Some(NoTouch)))
        .face(3, (Mask, NoTouch), (Some(NoMask), Some(NoTouch)))
        .person(0, S::Keeps, Some(D::Keeps))
        .person(1, S::Violates, Some(D::Violates))
        .person(2, S::Keeps, Some(D::Violates))
        .person(3, S::Unassessed, Some(D::Keeps));

    let mostly = mask_video("mostly", 9);
    let rarely = mask_video("rarely", 1);

    // Annotated subjects that no detection overlaps; they must not count.
    let mut missing = Video::new("missing");
    missing
        .frame()
        .face(0, (Mask, NoTouch), (Some(Mask), Some(NoTouch)))
        .face(1, (NoMask, NoTouch), (Some(NoMask), Some(Touch)))
        .truth_face("lost", Some(slot_box(300)), (Some(Improper), Some(Touch)))
        .person(0, S::Keeps, Some(D::Keeps))
        .truth_person("ghost", Some(slot_box(301)), Some(D::Violates));
    // A frame with annotations but no report record at all.
    missing.truth.push(GroundTruthFrame {
        frame_id: 99,
        faces: vec![GroundTruthFace { id: "gone".into(), bbox: Some(slot_box(302)), mask: Some(Mask), hand: Some(Touch) }],
        persons: vec![],
    });

    // Detections whose ids differ from the annotation ids and whose boxes are
    // shifted; only IoU matching pairs them up.
    let mut shifted_video = Video::new("shifted");
    shifted_video
        .frame()
        .predicted_face("d0", shifted(slot_box(0), 4.0), (Mask, NoTouch))
        .truth_face("g0", Some(slot_box(0)), (Some(Mask), Some(NoTouch)))
        .predicted_face("d1", shifted(slot_box(1), 8.0), (NoMask, Touch))
        .truth_face("g1", Some(slot_box(1)), (Some(Improper), None))
        // IoU of a 40-wide box shifted by 20 is 1/3: below threshold.
        .predicted_face("d2", shifted(slot_box(2), 20.0), (Mask, NoTouch))
        .truth_face("g2", Some(slot_box(2)), (Some(Mask), Some(NoTouch)))
        .predicted_person("q0", shifted(slot_box(100), 2.0), S::Violates)
        .truth_person("h0", Some(slot_box(100)), Some(D::Violates))
        .predicted_person("q1", shifted(slot_box(101), 3.0), S::Violates)
        .truth_person("h1", Some(slot_box(101)), Some(D::Keeps));
    shifted_video
        .frame()
        .predicted_face("d0", slot_box(5), (Improper, NoTouch))
        .truth_face("g0", Some(slot_box(5)), (Some(Improper), Some(NoTouch)))
        // No annotated box: cannot be matched by IoU.
        .truth_face("g9", None, (Some(Mask), Some(NoTouch)));

    vec![perfect, one_wrong, mostly, rarely, missing, shifted_video]
}

pub fn counts(a: &TaskAccuracy) -> Counts {
    Counts { correct: a.correct, scored: a.scored }
}

pub fn row(v: &VideoAccuracy) -> OracleRow {
    OracleRow { mask: counts(&v.mask), hand: counts(&v.face_hand), distance: counts(&v.distance) }
}

pub fn oracle_row(v: &Video, by_iou: Option<f64>) -> OracleRow {
    let predicted: Vec<_> = v.reports.iter().map(oracle_predicted).collect();
    let truth: Vec<_> = v.truth.iter().map(oracle_truth).collect();
    oracle_accuracy(&predicted, &truth, by_iou)
}

pub fn c(correct: u64, scored: u64) -> Counts {
    Counts { correct, scored }
}
