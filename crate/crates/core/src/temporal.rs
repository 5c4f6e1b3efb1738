//! Temporal attention sequences and their dynamic-time-warping distance.

use serde::Serialize;
use thiserror::Error;

use crate::domain::GazeSession;
use crate::grid::{FloatGridStack, GridError, SaliencyMap};
use crate::metrics::{sim_distance, MetricError};
use crate::salmap::{weighted_salmap, SalmapError};

pub const DEFAULT_BIN_MS: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("no fixations")]
    EmptyFixations,
    #[error("bin width must be positive, got {0}")]
    InvalidBin(f64),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("frames differ in size")]
    DimensionMismatch,
    #[error("frame {0}: {1}")]
    Frame(usize, GridError),
    #[error(transparent)]
    Salmap(#[from] SalmapError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// An ordered sequence of unit-sum attention maps of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSequence {
    frames: Vec<SaliencyMap>,
    /// Position of each frame in the source timeline: the time-bin index
    /// for human data, the word index for machine data.
    pub indices: Vec<usize>,
}

impl AttentionSequence {
    pub fn new(frames: Vec<SaliencyMap>, indices: Vec<usize>) -> Result<Self, TemporalError> {
        let first = frames.first().ok_or(TemporalError::EmptySequence)?;
        if frames.iter().any(|f| f.dims() != first.dims()) || indices.len() != frames.len() {
            return Err(TemporalError::DimensionMismatch);
        }
        Ok(Self { frames, indices })
    }

    /// One frame per grid, each normalized to unit sum.
    pub fn from_stack(stack: &FloatGridStack) -> Result<Self, TemporalError> {
        let frames = stack
            .grids()
            .enumerate()
            .map(|(i, g)| SaliencyMap::normalize(g).map_err(|e| TemporalError::Frame(i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        let n = frames.len();
        Self::new(frames, (0..n).collect())
    }

    pub fn frames(&self) -> &[SaliencyMap] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn to_stack(&self) -> FloatGridStack {
        let grids: Vec<_> = self.frames.iter().map(|f| f.as_grid().clone()).collect();
        FloatGridStack::from_grids(&grids).expect("frames share dimensions")
    }
}

/// Per-bin fixation weights: `weights[b]` lists `(fixation index, weight)`
/// for every fixation overlapping bin `b = [b·bin_ms, (b+1)·bin_ms)`.
///
/// A fixation's weight in a bin is the overlap divided by its duration, so
/// each fixation's weights sum to one. A zero-duration fixation puts its
/// whole weight in the bin containing its start.
pub fn bin_weights(session: &GazeSession, bin_ms: f64) -> Result<Vec<Vec<(usize, f64)>>, TemporalError> {
    if !(bin_ms > 0.0 && bin_ms.is_finite()) {
        return Err(TemporalError::InvalidBin(bin_ms));
    }
    if session.fixations.is_empty() {
        return Err(TemporalError::EmptyFixations);
    }
    let last_end = session.fixations.iter().map(|f| f.t_end.max(f.t_start)).fold(0.0, f64::max);
    let n_bins = ((last_end / bin_ms).ceil() as usize).max(1);
    let mut bins: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_bins];
    for (i, f) in session.fixations.iter().enumerate() {
        let duration = f.t_end - f.t_start;
        if duration <= 0.0 {
            let b = ((f.t_start / bin_ms).floor() as usize).min(n_bins - 1);
            bins[b].push((i, 1.0));
            continue;
        }
        let first = (f.t_start / bin_ms).floor() as usize;
        for (b, bin) in bins.iter_mut().enumerate().skip(first) {
            let lo = b as f64 * bin_ms;
            let hi = lo + bin_ms;
            if lo >= f.t_end {
                break;
            }
            let overlap = f.t_end.min(hi) - f.t_start.max(lo);
            if overlap > 0.0 {
                bin.push((i, overlap / duration));
            }
        }
    }
    Ok(bins)
}

/// Splits a session into `bin_ms` windows and renders each nonempty window
/// as a weighted Gaussian saliency map. Empty windows are dropped; the
/// surviving bin indices are kept in [`AttentionSequence::indices`].
pub fn bin_fixations(
    session: &GazeSession,
    bin_ms: f64,
    sigma: f64,
    width: usize,
    height: usize,
) -> Result<AttentionSequence, TemporalError> {
    let bins = bin_weights(session, bin_ms)?;
    let mut frames = Vec::new();
    let mut indices = Vec::new();
    for (b, members) in bins.iter().enumerate() {
        if members.iter().all(|&(_, w)| w <= 0.0) {
            continue;
        }
        let points: Vec<_> = members.iter().map(|&(i, w)| (session.fixations[i].pixel(), w)).collect();
        frames.push(weighted_salmap(&points, width, height, sigma)?);
        indices.push(b);
    }
    AttentionSequence::new(frames, indices)
}

/// How the accumulated DTW cost is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathNormalization {
    /// Divide by the number of aligned frame pairs on the path.
    #[default]
    AlignedPairs,
    /// Divide by the number of steps (pairs − 1, at least 1).
    Steps,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtwResult {
    pub distance: f64,
    pub total_cost: f64,
    /// Aligned `(i, j)` frame pairs from `(0, 0)` to the last frames.
    pub path: Vec<(usize, usize)>,
    /// Frame cost `1 − SIM` of every pair on the path.
    pub costs: Vec<f64>,
}

/// Frame cost matrix `1 − SIM(a_i, b_j)`, row-major over `i`; see
/// [`sim_distance`].
pub fn cost_matrix(a: &AttentionSequence, b: &AttentionSequence) -> Result<Vec<Vec<f64>>, TemporalError> {
    if a.dims() != b.dims() {
        return Err(TemporalError::DimensionMismatch);
    }
    a.frames()
        .iter()
        .map(|fa| {
            b.frames()
                .iter()
                .map(|fb| Ok(sim_distance(fa, fb)?.clamp(0.0, 1.0)))
                .collect::<Result<Vec<_>, TemporalError>>()
        })
        .collect()
}

/// Classic DTW with unit steps `(i−1, j)`, `(i, j−1)`, `(i−1, j−1)`.
/// Equal-cost predecessors are resolved diagonal first, then `(i−1, j)`.
pub fn dtw_distance(
    a: &AttentionSequence,
    b: &AttentionSequence,
    normalization: PathNormalization,
) -> Result<DtwResult, TemporalError> {
    if a.is_empty() || b.is_empty() {
        return Err(TemporalError::EmptySequence);
    }
    let cost = cost_matrix(a, b)?;
    Ok(dtw_from_costs(&cost, normalization))
}

/// DTW over a precomputed, nonempty cost matrix.
pub fn dtw_from_costs(cost: &[Vec<f64>], normalization: PathNormalization) -> DtwResult {
    let (n, m) = (cost.len(), cost[0].len());
    let mut acc = vec![vec![f64::INFINITY; m]; n];
    for i in 0..n {
        for j in 0..m {
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[i - 1][j - 1] } else { f64::INFINITY };
                let up = if i > 0 { acc[i - 1][j] } else { f64::INFINITY };
                let left = if j > 0 { acc[i][j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[i][j] = cost[i][j] + best_prev;
        }
    }

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        let diag = if i > 0 && j > 0 { acc[i - 1][j - 1] } else { f64::INFINITY };
        let up = if i > 0 { acc[i - 1][j] } else { f64::INFINITY };
        let left = if j > 0 { acc[i][j - 1] } else { f64::INFINITY };
        (i, j) = if diag <= up && diag <= left {
            (i - 1, j - 1)
        } else if up <= left {
            (i - 1, j)
        } else {
            (i, j - 1)
        };
        path.push((i, j));
    }
    path.reverse();

    let costs: Vec<f64> = path.iter().map(|&(i, j)| cost[i][j]).collect();
    let total_cost = acc[n - 1][m - 1];
    let denom = match normalization {
        PathNormalization::AlignedPairs => path.len(),
        PathNormalization::Steps => (path.len() - 1).max(1),
    };
    DtwResult { distance: total_cost / denom as f64, total_cost, path, costs }
}
