//! Per-frame engine: the face branch and the person branch run on the same
//! frame independently and their outputs are fused into one report.

use rayon::prelude::*;

use crate::distancing::{assess_frame, DistancingConfig};
use crate::face::{assess_faces, Classifier, CropConfig};
use crate::ingestion::IngestedFrame;
use crate::model::{Frame, HandLabel, MaskLabel};
use crate::report::{build_frame_report, FrameReport, ReportError};

#[derive(Debug, Clone)]
pub struct Engine {
    pub distancing: DistancingConfig,
    pub crop: CropConfig,
    pub mask: Classifier<MaskLabel>,
    pub hand: Classifier<HandLabel>,
}

impl Engine {
    pub fn new(
        distancing: DistancingConfig,
        crop: CropConfig,
        mask: Classifier<MaskLabel>,
        hand: Classifier<HandLabel>,
    ) -> Self {
        Self { distancing, crop, mask, hand }
    }

    pub fn process_frame(&self, frame: &Frame) -> Result<FrameReport, ReportError> {
        let faces = assess_faces(frame, &self.crop, &self.mask, &self.hand);
        let distancing = assess_frame(frame, &self.distancing);
        build_frame_report(frame, faces, distancing)
    }

    /// Like [`Engine::process_frame`], with the ingestion warnings of the
    /// frame placed ahead of the engine's own.
    pub fn process_ingested(&self, ingested: &IngestedFrame) -> Result<FrameReport, ReportError> {
        let mut report = self.process_frame(&ingested.frame)?;
        if !ingested.warnings.is_empty() {
            let mut warnings = ingested.warnings.clone();
            warnings.append(&mut report.warnings);
            report.warnings = warnings;
        }
        Ok(report)
    }

    /// Processes a batch, in parallel when both classifier backends allow
    /// it. Reports come back in input order.
    pub fn process_batch(&self, frames: &[IngestedFrame]) -> Result<Vec<FrameReport>, ReportError> {
        if self.mask.supports_concurrency() && self.hand.supports_concurrency() {
            frames.par_iter().map(|f| self.process_ingested(f)).collect()
        } else {
            frames.iter().map(|f| self.process_ingested(f)).collect()
        }
    }
}
