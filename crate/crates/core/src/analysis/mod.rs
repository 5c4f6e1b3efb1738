//! Dataset-level statistics: attention allocation, noun order, fixation
//! durations, describe/fixate probabilities, cross-task IOC, encoder
//! agreement, spatial consistency and score correlation.

mod agreement;
mod dataset;
mod ioc;
mod regions;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Task;
use crate::grid::{Grid, Pixel};
use crate::metrics::{auc_judd, nss, shuffled_auc, spearman, MetricError};
use crate::salmap::SalmapError;

pub use agreement::{
    aggregate_agreement, encoder_agreement, AgreementResult, AgreementSummary, RegionAgreement, DEFAULT_NSS_THRESHOLD,
    DEFAULT_TOP_PERCENT,
};
pub use dataset::{Dataset, DescriptionSource, GazeCorpus, ImageGaze};
pub use ioc::{ioc_matrix, IocCell, IocImage, IocReport};
pub use regions::{
    allocation_table, attention_ratio, describe_fixate_probs, described_object_order, fixation_duration_stats,
    noun_order_allocation, partition_regions, unannotated_noun_tally, AllocationReport, AllocationRow, ClassRatios,
    DescribeFixateProbs, DurationStats, NounOrderEntry, NounOrderReport, RegionClass, RegionPartition,
    SessionAllocation, TableOptions, Weighting,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no fixations")]
    EmptyFixations,
    #[error("mask label {0} is not in the category table")]
    UnknownCategory(u32),
    #[error("no mask for image `{0}`")]
    MissingMask(String),
    #[error("no image size known for `{0}`")]
    MissingDims(String),
    #[error("no transcript for subject `{subject}` on image `{image}`")]
    MissingTranscript { image: String, subject: String },
    #[error("duplicate transcript for subject `{subject}` on image `{image}`")]
    DuplicateTranscript { image: String, subject: String },
    #[error("duplicate {task} session for subject `{subject}` on image `{image}`")]
    DuplicateSession { image: String, subject: String, task: Task },
    #[error("invalid session `{subject}` on `{image}`: {}", violations.join("; "))]
    InvalidSession { image: String, subject: String, violations: Vec<String> },
    #[error("no fixation falls on a {0}")]
    EmptyClass(&'static str),
    #[error("no {0} to condition on")]
    EmptyDenominator(&'static str),
    #[error("image `{image}` has no other subject in reference task {task}")]
    TooFewSubjects { image: String, task: Task },
    #[error("saliency map has no connected regions")]
    NoRegions,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Salmap(#[from] SalmapError),
}

/// Spatial agreement between a model map and human fixations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialConsistency {
    pub nss: f64,
    pub auc_judd: f64,
    pub shuffled_auc: f64,
}

pub fn spatial_consistency(
    map: &Grid,
    fixations: &[Pixel],
    negative_pool: &[Pixel],
    n_splits: usize,
    seed: u64,
) -> Result<SpatialConsistency, AnalysisError> {
    Ok(SpatialConsistency {
        nss: nss(map, fixations)?,
        auc_judd: auc_judd(map, fixations)?,
        shuffled_auc: shuffled_auc(map, fixations, negative_pool, n_splits, seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub n: usize,
    pub image_ids: Vec<String>,
}

/// Spearman correlation between per-image attention consistency and
/// caption score over the images present in both maps.
pub fn congruency_correlation(
    consistency: &BTreeMap<String, f64>,
    scores: &BTreeMap<String, f64>,
) -> Result<Correlation, AnalysisError> {
    let image_ids: Vec<String> = consistency.keys().filter(|k| scores.contains_key(*k)).cloned().collect();
    let xs: Vec<f64> = image_ids.iter().map(|k| consistency[k]).collect();
    let ys: Vec<f64> = image_ids.iter().map(|k| scores[k]).collect();
    let rho = spearman(&xs, &ys)?;
    Ok(Correlation { rho, n: image_ids.len(), image_ids })
}
