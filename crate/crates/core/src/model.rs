//! Shared domain types.
//!
//! Pixel coordinates have their origin at the top-left corner of the image,
//! x grows rightward and y grows downward. Boxes use real-valued corners so
//! that margin expansion can produce fractional values before rasterization.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("image geometry must be at least 1x1, got {width}x{height}")]
    EmptyGeometry { width: u32, height: u32 },
    #[error("unknown {kind} label `{value}`")]
    UnknownLabel { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageGeometry {
    pub width: u32,
    pub height: u32,
}

impl ImageGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self, ModelError> {
        let geometry = Self { width, height };
        if geometry.is_valid() {
            Ok(geometry)
        } else {
            Err(ModelError::EmptyGeometry { width, height })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.width >= 1 && self.height >= 1
    }

    /// The full image rectangle `[0, width] x [0, height]`.
    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::new(0.0, 0.0, f64::from(self.width), f64::from(self.height))
    }

    pub fn contains_point(&self, p: Point2D) -> bool {
        (0.0..=f64::from(self.width)).contains(&p.x) && (0.0..=f64::from(self.height)).contains(&p.y)
    }

    pub fn contains_box(&self, b: &BoundingBox) -> bool {
        self.contains_point(Point2D::new(b.x_min, b.y_min))
            && self.contains_point(Point2D::new(b.x_max, b.y_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2D> for [f64; 2] {
    fn from(p: Point2D) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned box given by its two corners, serialized as
/// `[x_min, y_min, x_max, y_max]`.
///
/// Construction does not enforce `min <= max`; inverted boxes are reported
/// by [`validate_frame`] instead of being rejected at the type level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_ordered(&self) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max
    }

    pub fn is_finite(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let b = BoundingBox::new(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        );
        b.is_ordered().then_some(b)
    }
}

impl From<[f64; 4]> for BoundingBox {
    fn from([x_min, y_min, x_max, y_max]: [f64; 4]) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonDetection {
    pub id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_shoulder: Option<Point2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_shoulder: Option<Point2D>,
    pub confidence: f64,
}

impl PersonDetection {
    /// Both shoulder keypoints, if the person has a complete pose.
    pub fn shoulders(&self) -> Option<(Point2D, Point2D)> {
        self.left_shoulder.zip(self.right_shoulder)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDetection {
    pub id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person_id: Option<String>,
}

/// A label set produced by one of the face classifiers.
pub trait ClassLabel: Copy + Eq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Every label in canonical order. Score vectors are stored in this order.
    const ALL: &'static [Self];
    const TASK: &'static str;

    fn index(self) -> usize {
        Self::ALL.iter().position(|l| *l == self).expect("label listed in ALL")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskLabel {
    NoMask,
    Mask,
    ImproperMask,
}

impl ClassLabel for MaskLabel {
    const ALL: &'static [Self] = &[MaskLabel::NoMask, MaskLabel::Mask, MaskLabel::ImproperMask];
    const TASK: &'static str = "mask";
}

impl MaskLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskLabel::NoMask => "no_mask",
            MaskLabel::Mask => "mask",
            MaskLabel::ImproperMask => "improper_mask",
        }
    }
}

impl fmt::Display for MaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ModelError::UnknownLabel { kind: "mask", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandLabel {
    Interaction,
    NoInteraction,
}

impl ClassLabel for HandLabel {
    const ALL: &'static [Self] = &[HandLabel::Interaction, HandLabel::NoInteraction];
    const TASK: &'static str = "hand";
}

impl HandLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            HandLabel::Interaction => "interaction",
            HandLabel::NoInteraction => "no_interaction",
        }
    }
}

impl fmt::Display for HandLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HandLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HandLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ModelError::UnknownLabel { kind: "hand", value: s.to_string() })
    }
}

/// All detections of one video frame, plus the decoded pixels when they are
/// needed for cropping or rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: u64,
    pub geometry: ImageGeometry,
    pub persons: Vec<PersonDetection>,
    pub faces: Vec<FaceDetection>,
    pub pixels: Option<Arc<RgbImage>>,
}

impl Frame {
    pub fn new(frame_id: u64, geometry: ImageGeometry) -> Self {
        Self { frame_id, geometry, persons: Vec::new(), faces: Vec::new(), pixels: None }
    }

    pub fn person(&self, id: &str) -> Option<&PersonDetection> {
        self.persons.iter().find(|p| p.id == id)
    }

    pub fn face(&self, id: &str) -> Option<&FaceDetection> {
        self.faces.iter().find(|f| f.id == id)
    }
}

/// Checks every type invariant of `frame` and describes each breach.
///
/// Returns an empty list iff the frame is well formed.
pub fn validate_frame(frame: &Frame) -> Vec<String> {
    let mut out = Vec::new();
    let g = frame.geometry;
    if !g.is_valid() {
        out.push(format!("geometry {}x{} must be at least 1x1", g.width, g.height));
    }

    let mut seen = HashSet::new();
    let ids = frame
        .persons
        .iter()
        .map(|p| p.id.as_str())
        .chain(frame.faces.iter().map(|f| f.id.as_str()));
    for id in ids {
        if !seen.insert(id) {
            out.push(format!("duplicate subject id {id:?}"));
        }
    }

    for p in &frame.persons {
        let who = format!("person {}", p.id);
        check_box(&mut out, &who, &p.bbox, g);
        check_confidence(&mut out, &who, p.confidence);
        match (p.left_shoulder, p.right_shoulder) {
            (Some(_), None) => out.push(format!("unpaired shoulder for {who}: only left_shoulder present")),
            (None, Some(_)) => out.push(format!("unpaired shoulder for {who}: only right_shoulder present")),
            _ => {}
        }
        for (name, point) in [("left_shoulder", p.left_shoulder), ("right_shoulder", p.right_shoulder)] {
            let Some(point) = point else { continue };
            if !point.is_finite() {
                out.push(format!("{name} of {who} is not finite"));
            } else if g.is_valid() && !g.contains_point(point) {
                out.push(format!("{name} of {who} at ({}, {}) lies outside the image", point.x, point.y));
            }
        }
    }

    for f in &frame.faces {
        let who = format!("face {}", f.id);
        check_box(&mut out, &who, &f.bbox, g);
        check_confidence(&mut out, &who, f.confidence);
        if let Some(pid) = &f.person_id {
            if frame.person(pid).is_none() {
                out.push(format!("person_id {pid:?} of {who} does not name a person in the frame"));
            }
        }
    }
    out
}

fn check_box(out: &mut Vec<String>, who: &str, b: &BoundingBox, g: ImageGeometry) {
    if !b.is_finite() {
        out.push(format!("box of {who} is not finite"));
        return;
    }
    if b.x_min > b.x_max {
        out.push(format!("x_min>x_max for {who} ({} > {})", b.x_min, b.x_max));
    }
    if b.y_min > b.y_max {
        out.push(format!("y_min>y_max for {who} ({} > {})", b.y_min, b.y_max));
    }
    if g.is_valid() && !g.contains_box(b) {
        out.push(format!("box of {who} extends outside the {}x{} image", g.width, g.height));
    }
}

fn check_confidence(out: &mut Vec<String>, who: &str, c: f64) {
    if !(0.0..=1.0).contains(&c) {
        out.push(format!("confidence {c} of {who} is outside [0, 1]"));
    }
}
