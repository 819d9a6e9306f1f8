//! Shoulder-based social distance assessment.
//!
//! Every person is reduced to the midpoint and the length of their shoulder
//! line. For each unordered pair of persons the distance `D` between the two
//! midpoints is compared against an adaptive threshold
//! `T = lambda * (width_a + width_b) / 2`; the pair violates the distance rule
//! iff `D < T`. The shoulder width acts as a per-person pixel scale, so no
//! camera calibration is involved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundingBox, Frame, PersonDetection, Point2D};

pub const DEFAULT_LAMBDA: f64 = 3.0;
pub const DEFAULT_MIN_SHOULDER_WIDTH: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistancingError {
    #[error("person {person_id} has no shoulder keypoints")]
    MissingShoulders { person_id: String },
    #[error("person {person_id} has shoulder width {width} px, below the minimum {min} px")]
    DegenerateWidth { person_id: String, width: f64, min: f64 },
    #[error("invalid distancing config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancingConfig {
    lambda_coefficient: f64,
    min_shoulder_width: f64,
}

impl DistancingConfig {
    pub fn new(lambda_coefficient: f64, min_shoulder_width: f64) -> Result<Self, DistancingError> {
        if !(lambda_coefficient.is_finite() && lambda_coefficient > 0.0) {
            return Err(DistancingError::InvalidConfig(format!(
                "lambda coefficient must be positive, got {lambda_coefficient}"
            )));
        }
        if !(min_shoulder_width.is_finite() && min_shoulder_width > 0.0) {
            return Err(DistancingError::InvalidConfig(format!(
                "minimum shoulder width must be positive, got {min_shoulder_width}"
            )));
        }
        Ok(Self { lambda_coefficient, min_shoulder_width })
    }

    pub fn lambda_coefficient(&self) -> f64 {
        self.lambda_coefficient
    }

    pub fn min_shoulder_width(&self) -> f64 {
        self.min_shoulder_width
    }
}

impl Default for DistancingConfig {
    fn default() -> Self {
        Self { lambda_coefficient: DEFAULT_LAMBDA, min_shoulder_width: DEFAULT_MIN_SHOULDER_WIDTH }
    }
}

/// Decision for one unordered pair; ids are stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAssessment {
    pub person_a: String,
    pub person_b: String,
    pub distance: f64,
    pub threshold: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceStatus {
    Keeps,
    Violates,
    Unassessed,
}

impl DistanceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceStatus::Keeps => "keeps",
            DistanceStatus::Violates => "violates",
            DistanceStatus::Unassessed => "unassessed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnassessedReason {
    MissingShoulders,
    DegenerateWidth,
    /// No other assessable person shares the frame.
    NoPeer,
}

impl UnassessedReason {
    pub fn describe(self) -> &'static str {
        match self {
            UnassessedReason::MissingShoulders => "missing shoulders",
            UnassessedReason::DegenerateWidth => "degenerate shoulder width",
            UnassessedReason::NoPeer => "no other assessable person",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectDistanceStatus {
    pub person_id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub status: DistanceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<UnassessedReason>,
}

/// Output of [`assess_frame`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDistancing {
    pub pairs: Vec<PairAssessment>,
    pub statuses: Vec<SubjectDistanceStatus>,
}

fn shoulders_of(person: &PersonDetection) -> Result<(Point2D, Point2D), DistancingError> {
    person
        .shoulders()
        .ok_or_else(|| DistancingError::MissingShoulders { person_id: person.id.clone() })
}

fn norm(dx: f64, dy: f64) -> f64 {
    (dx * dx + dy * dy).sqrt()
}

/// Midpoint of the shoulder line.
pub fn shoulder_center(person: &PersonDetection) -> Result<Point2D, DistancingError> {
    let (l, r) = shoulders_of(person)?;
    Ok(Point2D::new((l.x + r.x) / 2.0, (l.y + r.y) / 2.0))
}

/// Length of the shoulder line in pixels.
pub fn shoulder_width(person: &PersonDetection) -> Result<f64, DistancingError> {
    let (l, r) = shoulders_of(person)?;
    Ok(norm(l.x - r.x, l.y - r.y))
}

pub fn pair_distance(a: &PersonDetection, b: &PersonDetection) -> Result<f64, DistancingError> {
    let ca = shoulder_center(a)?;
    let cb = shoulder_center(b)?;
    Ok(norm(ca.x - cb.x, ca.y - cb.y))
}

fn checked_width(person: &PersonDetection, config: &DistancingConfig) -> Result<f64, DistancingError> {
    let width = shoulder_width(person)?;
    if width < config.min_shoulder_width {
        return Err(DistancingError::DegenerateWidth {
            person_id: person.id.clone(),
            width,
            min: config.min_shoulder_width,
        });
    }
    Ok(width)
}

fn threshold_from_widths(width_a: f64, width_b: f64, lambda: f64) -> f64 {
    lambda * (width_a + width_b) / 2.0
}

/// Adaptive threshold for a pair: lambda times the mean shoulder width.
pub fn pair_threshold(
    a: &PersonDetection,
    b: &PersonDetection,
    config: &DistancingConfig,
) -> Result<f64, DistancingError> {
    let wa = checked_width(a, config)?;
    let wb = checked_width(b, config)?;
    Ok(threshold_from_widths(wa, wb, config.lambda_coefficient))
}

/// Per-person quantities reused by every pair the person takes part in.
#[derive(Debug, Clone, Copy)]
struct ShoulderLine {
    center: Point2D,
    width: f64,
}

impl ShoulderLine {
    fn of(person: &PersonDetection, config: &DistancingConfig) -> Result<Self, DistancingError> {
        Ok(Self { center: shoulder_center(person)?, width: checked_width(person, config)? })
    }
}

fn decide(a: &str, la: ShoulderLine, b: &str, lb: ShoulderLine, lambda: f64) -> PairAssessment {
    let (a, la, b, lb) = if a <= b { (a, la, b, lb) } else { (b, lb, a, la) };
    let distance = norm(la.center.x - lb.center.x, la.center.y - lb.center.y);
    let threshold = threshold_from_widths(la.width, lb.width, lambda);
    PairAssessment {
        person_a: a.to_string(),
        person_b: b.to_string(),
        distance,
        threshold,
        // D == T keeps the distance.
        violation: distance < threshold,
    }
}

pub fn assess_pair(
    a: &PersonDetection,
    b: &PersonDetection,
    config: &DistancingConfig,
) -> Result<PairAssessment, DistancingError> {
    let la = ShoulderLine::of(a, config)?;
    let lb = ShoulderLine::of(b, config)?;
    Ok(decide(&a.id, la, &b.id, lb, config.lambda_coefficient))
}

/// Assesses every unordered pair of persons that have a usable shoulder line
/// and rolls the pairs up into one status per person.
///
/// Pairs are sorted by `(person_a, person_b)`; statuses follow the order of
/// `frame.persons`. A person is `Violates` if any of its pairs violates,
/// `Keeps` if it has at least one pair and none violates, and `Unassessed`
/// otherwise.
pub fn assess_frame(frame: &Frame, config: &DistancingConfig) -> FrameDistancing {
    let lines: Vec<Result<ShoulderLine, UnassessedReason>> = frame
        .persons
        .iter()
        .map(|p| {
            ShoulderLine::of(p, config).map_err(|e| match e {
                DistancingError::DegenerateWidth { .. } => UnassessedReason::DegenerateWidth,
                _ => UnassessedReason::MissingShoulders,
            })
        })
        .collect();

    let assessable: Vec<(usize, ShoulderLine)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.as_ref().ok().map(|l| (i, *l)))
        .collect();

    let mut pairs = Vec::with_capacity(assessable.len() * assessable.len().saturating_sub(1) / 2);
    let mut violating = vec![false; frame.persons.len()];
    for (n, &(i, li)) in assessable.iter().enumerate() {
        for &(j, lj) in &assessable[n + 1..] {
            let pair = decide(&frame.persons[i].id, li, &frame.persons[j].id, lj, config.lambda_coefficient);
            if pair.violation {
                violating[i] = true;
                violating[j] = true;
            }
            pairs.push(pair);
        }
    }
    pairs.sort_by(|x, y| (&x.person_a, &x.person_b).cmp(&(&y.person_a, &y.person_b)));

    let has_peer = assessable.len() >= 2;
    let statuses = frame
        .persons
        .iter()
        .zip(&lines)
        .enumerate()
        .map(|(i, (p, line))| {
            let (status, reason) = match line {
                Err(reason) => (DistanceStatus::Unassessed, Some(*reason)),
                Ok(_) if !has_peer => (DistanceStatus::Unassessed, Some(UnassessedReason::NoPeer)),
                Ok(_) if violating[i] => (DistanceStatus::Violates, None),
                Ok(_) => (DistanceStatus::Keeps, None),
            };
            SubjectDistanceStatus { person_id: p.id.clone(), bbox: p.bbox, status, reason }
        })
        .collect();

    FrameDistancing { pairs, statuses }
}
