//! Replays classifier outputs that were computed ahead of time.

use std::collections::HashMap;

use thiserror::Error;

use super::{check_distribution, BackendKind, ClassifyError, FaceCrop, ScoreSource};
use crate::model::{HandLabel, MaskLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InsertError {
    #[error("duplicate recorded scores for frame {frame_id} face {face_id}")]
    Duplicate { frame_id: u64, face_id: String },
    #[error(transparent)]
    Distribution(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordedEntry {
    pub mask_scores: [f64; 3],
    pub hand_scores: [f64; 2],
}

/// Score lookup keyed by `(frame_id, face_id)`. Scores are stored in the
/// canonical label order of each task.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordedScores {
    by_frame: HashMap<u64, HashMap<String, RecordedEntry>>,
    len: usize,
}

impl RecordedScores {
    pub fn insert(
        &mut self,
        frame_id: u64,
        face_id: &str,
        mask_scores: [f64; 3],
        hand_scores: [f64; 2],
    ) -> Result<(), InsertError> {
        check_distribution::<MaskLabel>(&mask_scores)?;
        check_distribution::<HandLabel>(&hand_scores)?;
        let faces = self.by_frame.entry(frame_id).or_default();
        if faces.contains_key(face_id) {
            return Err(InsertError::Duplicate { frame_id, face_id: face_id.to_string() });
        }
        faces.insert(face_id.to_string(), RecordedEntry { mask_scores, hand_scores });
        self.len += 1;
        Ok(())
    }

    pub fn get(&self, frame_id: u64, face_id: &str) -> Option<&RecordedEntry> {
        self.by_frame.get(&frame_id)?.get(face_id)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All entries sorted by `(frame_id, face_id)`.
    pub fn entries(&self) -> Vec<(u64, &str, &RecordedEntry)> {
        let mut out: Vec<_> = self
            .by_frame
            .iter()
            .flat_map(|(f, faces)| faces.iter().map(move |(id, e)| (*f, id.as_str(), e)))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    fn entry(&self, crop: &FaceCrop<'_>) -> Result<&RecordedEntry, ClassifyError> {
        self.get(crop.frame_id, crop.face_id).ok_or_else(|| ClassifyError::RecordedEntryMissing {
            frame_id: crop.frame_id,
            face_id: crop.face_id.to_string(),
        })
    }
}

impl ScoreSource<MaskLabel> for RecordedScores {
    fn kind(&self) -> BackendKind {
        BackendKind::Recorded
    }

    fn supports_concurrency(&self) -> bool {
        true
    }

    fn scores(&self, crop: &FaceCrop<'_>) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.entry(crop)?.mask_scores.to_vec())
    }
}

impl ScoreSource<HandLabel> for RecordedScores {
    fn kind(&self) -> BackendKind {
        BackendKind::Recorded
    }

    fn supports_concurrency(&self) -> bool {
        true
    }

    fn scores(&self, crop: &FaceCrop<'_>) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.entry(crop)?.hand_scores.to_vec())
    }
}
