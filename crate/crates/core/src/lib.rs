//! Gaze, saliency and caption-attention analysis toolkit.

pub mod analysis;
pub mod attend;
pub mod cli;
pub mod domain;
pub mod grid;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod salmap;
pub mod temporal;
