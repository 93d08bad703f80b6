//! Command-line pipeline around `impact-core`: configuration, JSON results
//! and SVG plots.

pub mod app;
pub mod config;
pub mod json;
pub mod locate;
pub mod plot;

pub use config::PipelineConfig;
pub use locate::{locate, ImpactResult, LocateReport};
