//! Classifier backend that runs an ONNX model on the face crop.
//!
//! The crop is cut from the frame pixels (rounded outward), resized to
//! `input_edge x input_edge` with bilinear filtering, scaled to `[0, 1]`,
//! normalized per channel and fed as a single-image batch. The model output
//! is read in the descriptor's class order.

use std::marker::PhantomData;
use std::path::Path;
use std::sync::Arc;

use image::imageops::{self, FilterType};
use tract_onnx::prelude::*;

pub use super::{InputNormalization, TensorLayout};
use super::{rasterize, BackendKind, ClassifierBackendDescriptor, ClassifyError, FaceCrop, ScoreSource};
use crate::model::ClassLabel;

/// Outputs that already sum to one within this slack are renormalized
/// instead of being passed through softmax.
const PROBABILITY_SLACK: f64 = 1e-3;

pub struct InterchangeModel<L: ClassLabel> {
    plan: Arc<TypedRunnableModel>,
    edge: u32,
    class_order: Vec<L>,
    norm: InputNormalization,
    _label: PhantomData<L>,
}

impl<L: ClassLabel> InterchangeModel<L> {
    pub fn load(
        path: impl AsRef<Path>,
        descriptor: &ClassifierBackendDescriptor<L>,
        norm: InputNormalization,
    ) -> Result<Self, ClassifyError> {
        let path = path.as_ref();
        if descriptor.kind() != BackendKind::InterchangeModel {
            return Err(ClassifyError::InvalidConfig(format!(
                "descriptor kind is {}, expected interchange-model",
                descriptor.kind()
            )));
        }
        if norm.std.iter().any(|s| *s <= 0.0 || !s.is_finite()) {
            return Err(ClassifyError::InvalidConfig(format!("normalization std {:?} must be positive", norm.std)));
        }
        let e = descriptor.input_edge() as usize;
        let shape = match norm.layout {
            TensorLayout::Nchw => [1, 3, e, e],
            TensorLayout::Nhwc => [1, e, e, 3],
        };
        let unavailable = |err: anyhow::Error| ClassifyError::BackendUnavailable(format!("{}: {err:#}", path.display()));
        let plan = tract_onnx::onnx()
            .model_for_path(path)
            .and_then(|m| m.with_input_fact(0, f32::fact(shape).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(unavailable)?;
        Ok(Self {
            plan,
            edge: descriptor.input_edge(),
            class_order: descriptor.class_order().to_vec(),
            norm,
            _label: PhantomData,
        })
    }

    fn input_tensor(&self, crop: &FaceCrop<'_>) -> Result<Tensor, ClassifyError> {
        let pixels = crop
            .pixels
            .ok_or(ClassifyError::MissingPixels { frame_id: crop.frame_id, backend: BackendKind::InterchangeModel })?;
        let (x, y, w, h) = rasterize(&crop.crop_box, crop.geometry)
            .ok_or_else(|| ClassifyError::EmptyCrop { face_id: crop.face_id.to_string() })?;
        let patch = imageops::crop_imm(pixels, x, y, w, h).to_image();
        let resized = imageops::resize(&patch, self.edge, self.edge, FilterType::Triangle);
        let e = self.edge as usize;
        let n = self.norm;
        let value = |px: usize, py: usize, c: usize| {
            let raw = f32::from(resized.get_pixel(px as u32, py as u32)[c]) / 255.0;
            (raw - n.mean[c]) / n.std[c]
        };
        let array = match n.layout {
            TensorLayout::Nchw => tract_ndarray::Array4::from_shape_fn((1, 3, e, e), |(_, c, py, px)| value(px, py, c)),
            TensorLayout::Nhwc => tract_ndarray::Array4::from_shape_fn((1, e, e, 3), |(_, py, px, c)| value(px, py, c)),
        };
        Ok(array.into())
    }
}

fn to_distribution(raw: &[f64]) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    if raw.iter().all(|v| *v >= 0.0) && (sum - 1.0).abs() <= PROBABILITY_SLACK {
        return raw.iter().map(|v| v / sum).collect();
    }
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / z).collect()
}

impl<L: ClassLabel> ScoreSource<L> for InterchangeModel<L> {
    fn kind(&self) -> BackendKind {
        BackendKind::InterchangeModel
    }

    fn supports_concurrency(&self) -> bool {
        true
    }

    fn scores(&self, crop: &FaceCrop<'_>) -> Result<Vec<f64>, ClassifyError> {
        let input = self.input_tensor(crop)?;
        let outputs = self
            .plan
            .run(tvec!(input.into()))
            .map_err(|e| ClassifyError::Inference(format!("{e:#}")))?;
        let view = outputs[0]
            .to_plain_array_view::<f32>()
            .map_err(|e| ClassifyError::Inference(format!("{e:#}")))?;
        let raw: Vec<f64> = view.iter().map(|v| f64::from(*v)).collect();
        if raw.len() != self.class_order.len() {
            return Err(ClassifyError::Inference(format!(
                "model emitted {} values, expected {}",
                raw.len(),
                self.class_order.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::Inference("model emitted a non-finite value".into()));
        }
        let probs = to_distribution(&raw);
        let mut canonical = vec![0.0; L::ALL.len()];
        for (label, p) in self.class_order.iter().zip(probs) {
            canonical[label.index()] = p;
        }
        Ok(canonical)
    }
}

#[cfg(test)]
mod tests {
    use super::to_distribution;

    #[test]
    fn probabilities_are_renormalized() {
        let p = to_distribution(&[0.2, 0.3, 0.5000001]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn logits_go_through_softmax() {
        let p = to_distribution(&[2.0, 0.0]);
        let expected = 2f64.exp() / (2f64.exp() + 1.0);
        assert!((p[0] - expected).abs() < 1e-12);
    }
}
