//! Face branch: margin-expanded crops and mask / face-hand classification.
//!
//! Classification goes through a [`ScoreSource`], which returns a
//! probability vector in the label type's canonical order. A [`Classifier`]
//! pairs a source with its [`ClassifierBackendDescriptor`] and turns the
//! scores into a label, breaking ties by the descriptor's class order.

use std::fmt;
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundingBox, ClassLabel, Frame, HandLabel, ImageGeometry, MaskLabel};

#[cfg(feature = "onnx")]
pub mod interchange;
pub mod recorded;

pub use recorded::RecordedScores;

pub const DEFAULT_MARGIN_FRACTION: f64 = 0.20;

/// Classifier input edges known to the engine (square inputs).
pub const SUPPORTED_INPUT_EDGES: [u32; 6] = [224, 240, 256, 260, 299, 300];

/// Tolerance on the sum of a probability vector.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropConfig {
    pub margin_fraction: f64,
    pub clamp_to_image: bool,
}

impl CropConfig {
    pub fn new(margin_fraction: f64, clamp_to_image: bool) -> Result<Self, ClassifyError> {
        if !(margin_fraction.is_finite() && margin_fraction >= 0.0) {
            return Err(ClassifyError::InvalidConfig(format!(
                "margin fraction must be non-negative, got {margin_fraction}"
            )));
        }
        Ok(Self { margin_fraction, clamp_to_image })
    }
}

impl Default for CropConfig {
    fn default() -> Self {
        Self { margin_fraction: DEFAULT_MARGIN_FRACTION, clamp_to_image: true }
    }
}

/// Grows `bbox` on every side by `margin_fraction` of the matching box
/// dimension: left and right by a fraction of the width, top and bottom by a
/// fraction of the height. With clamping on, the result is intersected with
/// the image rectangle.
pub fn expand_crop(bbox: &BoundingBox, geometry: ImageGeometry, config: &CropConfig) -> BoundingBox {
    let dx = config.margin_fraction * bbox.width();
    let dy = config.margin_fraction * bbox.height();
    let grown = BoundingBox::new(bbox.x_min - dx, bbox.y_min - dy, bbox.x_max + dx, bbox.y_max + dy);
    if config.clamp_to_image {
        let w = f64::from(geometry.width);
        let h = f64::from(geometry.height);
        BoundingBox::new(
            grown.x_min.max(0.0),
            grown.y_min.max(0.0),
            grown.x_max.min(w),
            grown.y_max.min(h),
        )
    } else {
        grown
    }
}

/// Integer pixel rectangle `(x, y, width, height)` covering `bbox`, rounded
/// outward and clipped to the image. `None` if nothing remains.
pub fn rasterize(bbox: &BoundingBox, geometry: ImageGeometry) -> Option<(u32, u32, u32, u32)> {
    let x0 = bbox.x_min.floor().max(0.0);
    let y0 = bbox.y_min.floor().max(0.0);
    let x1 = bbox.x_max.ceil().min(f64::from(geometry.width));
    let y1 = bbox.y_max.ceil().min(f64::from(geometry.height));
    if !(x1 > x0 && y1 > y0) {
        return None;
    }
    Some((x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("classifier backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no recorded scores for frame {frame_id} face {face_id}")]
    RecordedEntryMissing { frame_id: u64, face_id: String },
    #[error("{task} scores are not a probability distribution: {reason}")]
    BadDistribution { task: &'static str, reason: String },
    #[error("crop of face {face_id} is empty")]
    EmptyCrop { face_id: String },
    #[error("frame {frame_id} carries no pixels; the {backend} backend needs image data")]
    MissingPixels { frame_id: u64, backend: BackendKind },
    #[error("inference failed: {0}")]
    Inference(String),
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
}

/// Memory layout of the image tensor fed to an interchange model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TensorLayout {
    #[default]
    Nchw,
    Nhwc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputNormalization {
    pub layout: TensorLayout,
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for InputNormalization {
    fn default() -> Self {
        Self { layout: TensorLayout::Nchw, mean: [0.0; 3], std: [1.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Recorded,
    InterchangeModel,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Recorded => "recorded",
            BackendKind::InterchangeModel => "interchange-model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierBackendDescriptor<L: ClassLabel> {
    kind: BackendKind,
    input_edge: u32,
    class_order: Vec<L>,
}

impl<L: ClassLabel> ClassifierBackendDescriptor<L> {
    pub fn new(kind: BackendKind, input_edge: u32, class_order: Vec<L>) -> Result<Self, ClassifyError> {
        if !SUPPORTED_INPUT_EDGES.contains(&input_edge) {
            return Err(ClassifyError::InvalidConfig(format!(
                "input edge {input_edge} is not one of {SUPPORTED_INPUT_EDGES:?}"
            )));
        }
        let is_permutation = class_order.len() == L::ALL.len()
            && L::ALL.iter().all(|l| class_order.iter().filter(|c| *c == l).count() == 1);
        if !is_permutation {
            return Err(ClassifyError::InvalidConfig(format!(
                "{} class order {class_order:?} is not a permutation of {:?}",
                L::TASK,
                L::ALL
            )));
        }
        Ok(Self { kind, input_edge, class_order })
    }

    /// Canonical class order, 224 px input.
    pub fn recorded() -> Self {
        Self { kind: BackendKind::Recorded, input_edge: 224, class_order: L::ALL.to_vec() }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn input_edge(&self) -> u32 {
        self.input_edge
    }

    pub fn class_order(&self) -> &[L] {
        &self.class_order
    }
}

/// What a classifier sees of one face.
#[derive(Debug, Clone, Copy)]
pub struct FaceCrop<'a> {
    pub frame_id: u64,
    pub face_id: &'a str,
    pub crop_box: BoundingBox,
    pub geometry: ImageGeometry,
    pub pixels: Option<&'a RgbImage>,
}

/// Produces a probability vector in `L::ALL` order for one face crop.
pub trait ScoreSource<L: ClassLabel>: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Whether `scores` may be called from several threads at once.
    fn supports_concurrency(&self) -> bool;

    fn scores(&self, crop: &FaceCrop<'_>) -> Result<Vec<f64>, ClassifyError>;
}

/// Validates that `scores` is a distribution over `L::ALL`.
pub fn check_distribution<L: ClassLabel>(scores: &[f64]) -> Result<(), ClassifyError> {
    let bad = |reason: String| ClassifyError::BadDistribution { task: L::TASK, reason };
    if scores.len() != L::ALL.len() {
        return Err(bad(format!("expected {} values, got {}", L::ALL.len(), scores.len())));
    }
    if let Some(v) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(bad(format!("value {v} is negative or not finite")));
    }
    let sum: f64 = scores.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(bad(format!("values sum to {sum}")));
    }
    Ok(())
}

/// Highest-scoring label; on equal scores the label listed first in
/// `class_order` wins.
pub fn argmax_label<L: ClassLabel>(scores: &[f64], class_order: &[L]) -> L {
    let mut best = class_order[0];
    for &label in &class_order[1..] {
        if scores[label.index()] > scores[best.index()] {
            best = label;
        }
    }
    best
}

#[derive(Clone)]
pub struct Classifier<L: ClassLabel> {
    descriptor: ClassifierBackendDescriptor<L>,
    source: Arc<dyn ScoreSource<L>>,
}

impl<L: ClassLabel> fmt::Debug for Classifier<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Classifier").field("descriptor", &self.descriptor).finish_non_exhaustive()
    }
}

impl<L: ClassLabel> Classifier<L> {
    pub fn new(descriptor: ClassifierBackendDescriptor<L>, source: Arc<dyn ScoreSource<L>>) -> Result<Self, ClassifyError> {
        if descriptor.kind() != source.kind() {
            return Err(ClassifyError::InvalidConfig(format!(
                "descriptor is for the {} backend but the source is {}",
                descriptor.kind(),
                source.kind()
            )));
        }
        Ok(Self { descriptor, source })
    }

    pub fn descriptor(&self) -> &ClassifierBackendDescriptor<L> {
        &self.descriptor
    }

    pub fn supports_concurrency(&self) -> bool {
        self.source.supports_concurrency()
    }

    pub fn classify(&self, crop: &FaceCrop<'_>) -> Result<(L, Vec<f64>), ClassifyError> {
        if crop.crop_box.area() <= 0.0 {
            return Err(ClassifyError::EmptyCrop { face_id: crop.face_id.to_string() });
        }
        let scores = self.source.scores(crop)?;
        check_distribution::<L>(&scores)?;
        Ok((argmax_label(&scores, &self.descriptor.class_order), scores))
    }
}

pub fn classify_mask(crop: &FaceCrop<'_>, classifier: &Classifier<MaskLabel>) -> Result<(MaskLabel, [f64; 3]), ClassifyError> {
    let (label, s) = classifier.classify(crop)?;
    Ok((label, [s[0], s[1], s[2]]))
}

pub fn classify_hand(crop: &FaceCrop<'_>, classifier: &Classifier<HandLabel>) -> Result<(HandLabel, [f64; 2]), ClassifyError> {
    let (label, s) = classifier.classify(crop)?;
    Ok((label, [s[0], s[1]]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceAssessment {
    pub face_id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub crop_box: BoundingBox,
    pub mask_label: MaskLabel,
    pub mask_scores: [f64; 3],
    pub hand_label: HandLabel,
    pub hand_scores: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceError {
    pub face_id: String,
    pub error: ClassifyError,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaceResults {
    pub assessments: Vec<FaceAssessment>,
    pub errors: Vec<FaceError>,
}

/// Crops and classifies every face of the frame. Faces are independent of
/// the persons list; a face without a matching person is still assessed.
pub fn assess_faces(
    frame: &Frame,
    crop_config: &CropConfig,
    mask: &Classifier<MaskLabel>,
    hand: &Classifier<HandLabel>,
) -> FaceResults {
    let mut out = FaceResults::default();
    for face in &frame.faces {
        let crop = FaceCrop {
            frame_id: frame.frame_id,
            face_id: &face.id,
            crop_box: expand_crop(&face.bbox, frame.geometry, crop_config),
            geometry: frame.geometry,
            pixels: frame.pixels.as_deref(),
        };
        let result = classify_mask(&crop, mask).and_then(|m| classify_hand(&crop, hand).map(|h| (m, h)));
        match result {
            Ok(((mask_label, mask_scores), (hand_label, hand_scores))) => out.assessments.push(FaceAssessment {
                face_id: face.id.clone(),
                bbox: face.bbox,
                crop_box: crop.crop_box,
                mask_label,
                mask_scores,
                hand_label,
                hand_scores,
            }),
            Err(error) => out.errors.push(FaceError { face_id: face.id.clone(), error }),
        }
    }
    out
}
