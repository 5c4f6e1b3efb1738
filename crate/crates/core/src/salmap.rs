//! Saliency maps from fixations, plus thresholding and blob extraction.

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Grid, GridError, Pixel, SaliencyMap};
use crate::ingest::write_pgm;

/// Gaussian sigma in pixels, about one degree of visual angle for a
/// 1920×1080 display viewed from 40 cm.
pub const DEFAULT_SIGMA_PX: f64 = 39.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SalmapError {
    #[error("no fixations")]
    EmptyFixations,
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("fixation {0:?} lies outside the {1}x{2} image")]
    OutOfBounds(Pixel, usize, usize),
    #[error("fixation weights must be finite, nonnegative and not all zero")]
    InvalidWeights,
    #[error("maps differ in size")]
    DimensionMismatch,
    #[error("no maps to average")]
    EmptyList,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Kernel half-width: the Gaussian is truncated at ⌈3σ⌉ pixels.
pub fn kernel_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Builds a saliency map by placing one unit impulse per fixation and
/// blurring with an isotropic Gaussian.
pub fn fixations_to_salmap(
    points: &[Pixel],
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<SaliencyMap, SalmapError> {
    let weighted: Vec<(Pixel, f64)> = points.iter().map(|&p| (p, 1.0)).collect();
    weighted_salmap(&weighted, width, height, sigma)
}

/// As [`fixations_to_salmap`] with a weight per impulse.
///
/// The kernel covers the `(2r+1)²` square around each impulse with
/// `r = ⌈3σ⌉`; mass falling outside the image is dropped and the result
/// renormalized to unit sum.
pub fn weighted_salmap(
    points: &[(Pixel, f64)],
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<SaliencyMap, SalmapError> {
    if points.is_empty() {
        return Err(SalmapError::EmptyFixations);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SalmapError::InvalidSigma(sigma));
    }
    if width == 0 || height == 0 {
        return Err(GridError::EmptyGrid.into());
    }
    if points.iter().any(|&(_, w)| !w.is_finite() || w < 0.0) || points.iter().all(|&(_, w)| w == 0.0) {
        return Err(SalmapError::InvalidWeights);
    }
    if let Some(&(p, _)) = points.iter().find(|(p, _)| p.x >= width || p.y >= height) {
        return Err(SalmapError::OutOfBounds(p, width, height));
    }

    let r = kernel_radius(sigma);
    let denom = 2.0 * sigma * sigma;
    let kernel: Vec<f64> = (0..=r).map(|d| (-((d * d) as f64) / denom).exp()).collect();

    let mut grid = Grid::zeros(width, height);
    let values = grid.values_mut();
    for &(p, w) in points {
        if w == 0.0 {
            continue;
        }
        let y0 = p.y.saturating_sub(r);
        let y1 = (p.y + r).min(height - 1);
        let x0 = p.x.saturating_sub(r);
        let x1 = (p.x + r).min(width - 1);
        for y in y0..=y1 {
            let gy = w * kernel[y.abs_diff(p.y)];
            let row = &mut values[y * width..(y + 1) * width];
            for x in x0..=x1 {
                row[x] += gy * kernel[x.abs_diff(p.x)];
            }
        }
    }
    Ok(SaliencyMap::normalize(grid)?)
}

/// Pixel-wise mean of equally sized maps, renormalized. Accumulates in
/// input order so the result is bit-reproducible.
pub fn average_map(maps: &[SaliencyMap]) -> Result<SaliencyMap, SalmapError> {
    let first = maps.first().ok_or(SalmapError::EmptyList)?;
    let (w, h) = first.dims();
    let mut acc = Grid::zeros(w, h);
    for m in maps {
        if m.dims() != (w, h) {
            return Err(SalmapError::DimensionMismatch);
        }
        for (a, v) in acc.values_mut().iter_mut().zip(m.values()) {
            *a += v;
        }
    }
    let n = maps.len() as f64;
    Ok(SaliencyMap::normalize(acc.map(|v| v / n))?)
}

/// A boolean grid with the same size as the map it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[Pixel]) -> Self {
        let mut m = Self::new(width, height);
        for &p in pixels {
            m.set(p, true);
        }
        m
    }

    pub fn get(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height && self.bits[p.y * self.width + p.x]
    }

    pub fn set(&mut self, p: Pixel, v: bool) {
        self.bits[p.y * self.width + p.x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn pixels(&self) -> Vec<Pixel> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Pixel::new(i % self.width, i / self.width))
            .collect()
    }

    /// Grows every set pixel into a Euclidean disk of `radius`.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let r2 = (radius * radius) as f64;
        let mut out = BinaryMask::new(self.width, self.height);
        for p in self.pixels() {
            for y in p.y.saturating_sub(radius)..=(p.y + radius).min(self.height - 1) {
                for x in p.x.saturating_sub(radius)..=(p.x + radius).min(self.width - 1) {
                    let q = Pixel::new(x, y);
                    if p.dist2(q) <= r2 {
                        out.set(q, true);
                    }
                }
            }
        }
        out
    }

    /// PGM with set pixels at 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let data: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        write_pgm(self.width, self.height, &data)
    }
}

/// Number of pixels in the top `percent` of an `n`-pixel map: ⌈percent·n/100⌉,
/// at least 1.
pub fn top_count(n: usize, percent: f64) -> usize {
    let raw = n as f64 * percent / 100.0;
    // guard against 95.00000000001-style representation error
    ((raw - 1e-9).ceil() as usize).clamp(1, n)
}

/// Marks pixels whose value is at least the `m`-th largest value, where
/// `m` = [`top_count`]. Ties at the threshold are all kept, so at least
/// `m` bits are set and the threshold is always an attained value.
///
/// # Panics
/// If `percent` is outside `(0, 100)`.
pub fn top_percent_mask(map: &Grid, percent: f64) -> BinaryMask {
    assert!(percent > 0.0 && percent < 100.0, "percent must lie in (0, 100)");
    let mut sorted = map.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[top_count(sorted.len(), percent) - 1];
    BinaryMask {
        width: map.width(),
        height: map.height(),
        bits: map.values().iter().map(|&v| v >= threshold).collect(),
    }
}

/// One 8-connected blob. Pixels are listed in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub label: usize,
    pub pixels: Vec<Pixel>,
}

/// Labels 8-connected components of set bits. Labels start at 1 and follow
/// the row-major position of each component's first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Region> {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0usize; w * h];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        let label = regions.len() + 1;
        let mut members = Vec::new();
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        members.sort_unstable();
        regions.push(Region { label, pixels: members.into_iter().map(|i| Pixel::new(i % w, i / w)).collect() });
    }
    regions
}
