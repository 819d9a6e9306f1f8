//! Compliance engine for mask wearing, face-hand contact and social
//! distancing, driven by recorded person and face detections.

pub mod distancing;
pub mod face;
pub mod ingestion;
pub mod model;
pub mod evaluation;
pub mod pipeline;
pub mod report;
pub mod overlay;
pub mod config;
