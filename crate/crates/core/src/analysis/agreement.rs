use serde::Serialize;

use crate::grid::{FloatGridStack, Grid};
use crate::metrics::mean_std;
use crate::salmap::{connected_components, top_percent_mask};

use super::AnalysisError;

pub const DEFAULT_TOP_PERCENT: f64 = 5.0;
pub const DEFAULT_NSS_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionAgreement {
    pub label: usize,
    pub size: usize,
    /// Highest NSS over all usable activation grids.
    pub best_nss: Option<f64>,
    pub best_grid: Option<usize>,
    pub attended: bool,
    /// Grids skipped for zero variance.
    pub skipped_grids: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementResult {
    pub regions: Vec<RegionAgreement>,
    pub attended_fraction: f64,
    /// Mean of `best_nss` over regions that have one.
    pub mean_best_nss: Option<f64>,
    pub usable_grids: usize,
}

/// Checks which human-attended regions are also attended by a CNN layer.
///
/// Regions are the 8-connected blobs of the top `percent` of `human_map`.
/// Each activation grid is resized (bilinear) to the map size and
/// z-normalized over the whole grid; its NSS within a region is the mean
/// z-score over the region's pixels. A region is attended when its best
/// NSS exceeds `threshold`.
pub fn encoder_agreement(
    human_map: &Grid,
    activations: &FloatGridStack,
    percent: f64,
    threshold: f64,
) -> Result<AgreementResult, AnalysisError> {
    let regions = connected_components(&top_percent_mask(human_map, percent));
    if regions.is_empty() {
        return Err(AnalysisError::NoRegions);
    }
    let (w, h) = human_map.dims();

    // best (nss, grid index) per region
    let mut best: Vec<Option<(f64, usize)>> = vec![None; regions.len()];
    let mut usable = 0;
    for (gi, grid) in activations.grids().enumerate() {
        let grid = grid.resize_bilinear(w, h);
        let Ok((mean, std)) = mean_std(grid.values()) else { continue };
        usable += 1;
        for (slot, region) in best.iter_mut().zip(&regions) {
            let raw: f64 = region.pixels.iter().map(|&p| grid.get(p)).sum::<f64>() / region.pixels.len() as f64;
            let score = (raw - mean) / std;
            if slot.is_none_or(|(b, _)| score > b) {
                *slot = Some((score, gi));
            }
        }
    }
    let skipped = activations.count() - usable;

    let per_region: Vec<RegionAgreement> = regions
        .iter()
        .zip(&best)
        .map(|(r, b)| RegionAgreement {
            label: r.label,
            size: r.pixels.len(),
            best_nss: b.map(|x| x.0),
            best_grid: b.map(|x| x.1),
            attended: b.is_some_and(|x| x.0 > threshold),
            skipped_grids: skipped,
        })
        .collect();
    Ok(summarize(per_region, usable))
}

fn summarize(regions: Vec<RegionAgreement>, usable_grids: usize) -> AgreementResult {
    let attended = regions.iter().filter(|r| r.attended).count();
    let scored: Vec<f64> = regions.iter().filter_map(|r| r.best_nss).collect();
    AgreementResult {
        attended_fraction: attended as f64 / regions.len() as f64,
        mean_best_nss: (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64),
        regions,
        usable_grids,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementSummary {
    pub images: usize,
    pub regions: usize,
    pub attended_regions: usize,
    pub attended_fraction: f64,
    pub mean_best_nss: Option<f64>,
}

/// Pools regions across images: the fraction of all regions attended and
/// the mean best NSS over all scored regions.
pub fn aggregate_agreement<'a>(results: impl IntoIterator<Item = &'a AgreementResult>) -> AgreementSummary {
    let (mut images, mut regions, mut attended, mut nss_sum, mut nss_n) = (0, 0, 0, 0.0, 0usize);
    for r in results {
        images += 1;
        regions += r.regions.len();
        attended += r.regions.iter().filter(|x| x.attended).count();
        for b in r.regions.iter().filter_map(|x| x.best_nss) {
            nss_sum += b;
            nss_n += 1;
        }
    }
    AgreementSummary {
        images,
        regions,
        attended_regions: attended,
        attended_fraction: if regions > 0 { attended as f64 / regions as f64 } else { 0.0 },
        mean_best_nss: (nss_n > 0).then(|| nss_sum / nss_n as f64),
    }
}
