//! Engine configuration file (TOML).
//!
//! Every key is optional; omitted keys take the built-in defaults. Example:
//!
//! ```toml
//! [distancing]
//! lambda = 3.0
//! min_shoulder_width = 1.0
//!
//! [crop]
//! margin = 0.2
//! clamp_to_image = true
//!
//! [evaluation]
//! iou_threshold = 0.5
//! match_mode = "by_iou"
//!
//! [classifier]
//! backend = "recorded"
//!
//! [classifier.mask]
//! input_edge = 224
//! class_order = ["no_mask", "mask", "improper_mask"]
//!
//! [overlay]
//! keeps_color = [0, 200, 0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distancing::DistancingConfig;
use crate::evaluation::{MatchMode, MatchingConfig, DEFAULT_IOU_THRESHOLD};
use crate::face::{
    BackendKind, ClassifierBackendDescriptor, CropConfig, InputNormalization, TensorLayout, DEFAULT_MARGIN_FRACTION,
};
use crate::model::{ClassLabel, HandLabel, MaskLabel};
use crate::overlay::{Color, OverlayStyle};

/// Environment variable naming the config file used when no `--config` flag
/// is given.
pub const CONFIG_ENV: &str = "GUARDLINE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistancingSection {
    pub lambda: f64,
    pub min_shoulder_width: f64,
}

impl Default for DistancingSection {
    fn default() -> Self {
        let d = DistancingConfig::default();
        Self { lambda: d.lambda_coefficient(), min_shoulder_width: d.min_shoulder_width() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropSection {
    pub margin: f64,
    pub clamp_to_image: bool,
}

impl Default for CropSection {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN_FRACTION, clamp_to_image: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub iou_threshold: f64,
    pub match_mode: MatchMode,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { iou_threshold: DEFAULT_IOU_THRESHOLD, match_mode: MatchMode::ByIou }
    }
}

/// Settings of one classifier. `class_order` is the order of the model's
/// outputs and also the tie-break order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection<L> {
    pub input_edge: u32,
    pub class_order: Vec<L>,
    pub model: Option<PathBuf>,
    pub layout: TensorLayout,
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl<L: ClassLabel> Default for ClassifierSection<L> {
    fn default() -> Self {
        let n = InputNormalization::default();
        Self { input_edge: 224, class_order: L::ALL.to_vec(), model: None, layout: n.layout, mean: n.mean, std: n.std }
    }
}

impl<L: ClassLabel> ClassifierSection<L> {
    pub fn normalization(&self) -> InputNormalization {
        InputNormalization { layout: self.layout, mean: self.mean, std: self.std }
    }

    pub fn descriptor(&self, kind: BackendKind) -> Result<ClassifierBackendDescriptor<L>, ConfigError> {
        ClassifierBackendDescriptor::new(kind, self.input_edge, self.class_order.clone())
            .map_err(|e| ConfigError::Invalid(format!("{} classifier: {e}", L::TASK)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifiersSection {
    pub backend: BackendKind,
    pub mask: ClassifierSection<MaskLabel>,
    pub hand: ClassifierSection<HandLabel>,
}

impl Default for ClassifiersSection {
    fn default() -> Self {
        Self { backend: BackendKind::Recorded, mask: ClassifierSection::default(), hand: ClassifierSection::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlaySection {
    pub keeps_color: Color,
    pub violates_color: Color,
    pub unassessed_color: Color,
    pub thickness: u32,
}

impl Default for OverlaySection {
    fn default() -> Self {
        let s = OverlayStyle::default();
        Self {
            keeps_color: s.keeps_color(),
            violates_color: s.violates_color(),
            unassessed_color: s.unassessed_color(),
            thickness: s.thickness(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub distancing: DistancingSection,
    pub crop: CropSection,
    pub evaluation: EvaluationSection,
    pub classifier: ClassifiersSection,
    pub overlay: OverlaySection,
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.to_owned(), message })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn distancing_config(&self) -> Result<DistancingConfig, ConfigError> {
        DistancingConfig::new(self.distancing.lambda, self.distancing.min_shoulder_width)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn crop_config(&self) -> Result<CropConfig, ConfigError> {
        CropConfig::new(self.crop.margin, self.crop.clamp_to_image).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn matching_config(&self) -> Result<MatchingConfig, ConfigError> {
        MatchingConfig::new(self.evaluation.iou_threshold, self.evaluation.match_mode)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn overlay_style(&self) -> Result<OverlayStyle, ConfigError> {
        let o = &self.overlay;
        OverlayStyle::new(o.keeps_color, o.violates_color, o.unassessed_color, o.thickness)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Checks every section, returning the first problem found.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.distancing_config()?;
        self.crop_config()?;
        self.matching_config()?;
        self.overlay_style()?;
        self.classifier.mask.descriptor(self.classifier.backend)?;
        self.classifier.hand.descriptor(self.classifier.backend)?;
        Ok(())
    }
}
