//! Saliency evaluation metrics (NSS, AUC-Judd, shuffled AUC, SIM) and
//! Spearman rank correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Grid, Pixel};

/// Default number of shuffled-AUC splits.
pub const DEFAULT_SAUC_SPLITS: usize = 100;

/// Maximum deviation from unit sum accepted by [`sim`].
pub const SIM_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("map has zero variance")]
    ZeroVariance,
    #[error("no fixations")]
    EmptyFixations,
    #[error("every pixel is fixated; no negatives remain")]
    AllPixelsFixated,
    #[error("negative pool is empty")]
    EmptyPool,
    #[error("n_splits must be at least 1")]
    NoSplits,
    #[error("maps differ in size")]
    DimensionMismatch,
    #[error("map sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooFew(usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("pixel {0:?} is outside the map")]
    OutOfBounds(Pixel),
}

fn check_points(map: &Grid, points: &[Pixel]) -> Result<(), MetricError> {
    if points.is_empty() {
        return Err(MetricError::EmptyFixations);
    }
    match points.iter().find(|p| !map.contains(**p)) {
        Some(&p) => Err(MetricError::OutOfBounds(p)),
        None => Ok(()),
    }
}

/// Population mean and standard deviation; `ZeroVariance` when the spread
/// is negligible relative to the values' magnitude.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), MetricError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !std.is_finite() || std <= 1e-12 * scale || std == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok((mean, std))
}

/// Normalized scanpath saliency: the mean z-scored map value at the
/// fixated pixels. Repeated fixations count every time.
pub fn nss(map: &Grid, fixations: &[Pixel]) -> Result<f64, MetricError> {
    check_points(map, fixations)?;
    let (mean, std) = mean_std(map.values())?;
    let total: f64 = fixations.iter().map(|&p| (map.get(p) - mean) / std).sum();
    Ok(total / fixations.len() as f64)
}

/// Trapezoidal ROC area where thresholds are the distinct positive values.
fn auc_from_values(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut pos = positives.to_vec();
    pos.sort_by(|a, b| b.total_cmp(a));
    let mut neg = negatives.to_vec();
    neg.sort_by(|a, b| b.total_cmp(a));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);

    let (mut area, mut prev_fp, mut prev_tp) = (0.0, 0.0, 0.0);
    let (mut ip, mut ineg) = (0usize, 0usize);
    while ip < pos.len() {
        let theta = pos[ip];
        while ip < pos.len() && pos[ip] >= theta {
            ip += 1;
        }
        while ineg < neg.len() && neg[ineg] >= theta {
            ineg += 1;
        }
        let tp = ip as f64 / np;
        let fp = ineg as f64 / nn;
        area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
        prev_fp = fp;
        prev_tp = tp;
    }
    area + (1.0 - prev_fp) * (1.0 + prev_tp) / 2.0
}

fn dedup_pixels(points: &[Pixel]) -> Vec<Pixel> {
    let mut v = points.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// AUC-Judd: fixated pixels (deduplicated) are positives, every other
/// pixel a negative.
pub fn auc_judd(map: &Grid, fixations: &[Pixel]) -> Result<f64, MetricError> {
    check_points(map, fixations)?;
    let positives = dedup_pixels(fixations);
    if positives.len() == map.len() {
        return Err(MetricError::AllPixelsFixated);
    }
    let mut is_pos = vec![false; map.len()];
    for &p in &positives {
        is_pos[map.index(p)] = true;
    }
    let pos: Vec<f64> = positives.iter().map(|&p| map.get(p)).collect();
    let neg: Vec<f64> = map.values().iter().zip(&is_pos).filter(|(_, &f)| !f).map(|(&v, _)| v).collect();
    Ok(auc_from_values(&pos, &neg))
}

/// Random stream for one shuffled-AUC split: ChaCha8 keyed by `seed`,
/// with the split index selecting the stream.
pub fn split_rng(seed: u64, split: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split as u64);
    rng
}

/// Draws `k` distinct indices from `0..n` by a partial Fisher-Yates shuffle.
pub fn sample_without_replacement(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let k = k.min(n);
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Shuffled AUC: per split, as many negatives as there are (deduplicated)
/// fixated pixels are drawn without replacement from `negative_pool`
/// (typically fixations on other images); the AUC is averaged over splits.
pub fn shuffled_auc(
    map: &Grid,
    fixations: &[Pixel],
    negative_pool: &[Pixel],
    n_splits: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    check_points(map, fixations)?;
    if negative_pool.is_empty() {
        return Err(MetricError::EmptyPool);
    }
    if let Some(&p) = negative_pool.iter().find(|p| !map.contains(**p)) {
        return Err(MetricError::OutOfBounds(p));
    }
    if n_splits == 0 {
        return Err(MetricError::NoSplits);
    }
    let positives: Vec<f64> = dedup_pixels(fixations).iter().map(|&p| map.get(p)).collect();
    let mut total = 0.0;
    for split in 0..n_splits {
        let mut rng = split_rng(seed, split);
        let chosen = sample_without_replacement(&mut rng, negative_pool.len(), positives.len());
        let negatives: Vec<f64> = chosen.iter().map(|&i| map.get(negative_pool[i])).collect();
        total += auc_from_values(&positives, &negatives);
    }
    Ok(total / n_splits as f64)
}

fn check_pair(a: &Grid, b: &Grid) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::DimensionMismatch);
    }
    for m in [a, b] {
        let s = m.sum();
        if !s.is_finite() || (s - 1.0).abs() > SIM_SUM_TOLERANCE {
            return Err(MetricError::NotNormalized(s));
        }
    }
    Ok(())
}

/// Histogram intersection of two unit-sum maps.
pub fn sim(a: &Grid, b: &Grid) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| x.min(*y)).sum())
}

/// `1 − SIM` computed as half the L1 distance, which is the same quantity
/// for unit-sum maps but exactly zero for identical ones.
pub fn sim_distance(a: &Grid, b: &Grid) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    Ok(0.5 * a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(MetricError::TooFew(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}
