//! Forward-pass kernels of the saliency-guided attention pipeline:
//! winner-take-all fixation selection, foveation, affine patch sampling
//! and soft-attention pooling.

use serde::Serialize;
use thiserror::Error;

use crate::domain::FixationLocationSet;
use crate::grid::{FloatGridStack, Grid, Pixel, RgbImage};

pub const DEFAULT_WTA_COUNT: usize = 8;
/// One degree of visual angle.
pub const DEFAULT_SUPPRESS_RADIUS_PX: f64 = 39.0;
pub const DEFAULT_FOVEA_LEVELS: usize = 6;
/// Two degrees of visual angle.
pub const DEFAULT_FOVEA_R0_PX: f64 = 78.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttendError {
    #[error("highest value does not exceed the floor")]
    NoWinner,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("centre {0:?} is outside the image")]
    OutOfBounds(Pixel),
    #[error("no feature vectors")]
    EmptyFeatureSet,
    #[error("feature vector {index} has length {len}, expected {expected}")]
    InconsistentLength { index: usize, len: usize, expected: usize },
    #[error("score for feature vector {0} is not finite")]
    NonFiniteScore(usize),
}

/// Winner-take-all with inhibition of return.
///
/// Repeats up to `n` times: take the row-major-first maximum; stop if it
/// is `<= floor`; record it; zero every pixel within Euclidean distance
/// `suppress_radius` of it.
pub fn wta_select(map: &Grid, n: usize, suppress_radius: f64, floor: f64) -> Result<FixationLocationSet, AttendError> {
    if n == 0 {
        return Err(AttendError::InvalidParameter("n must be at least 1"));
    }
    if suppress_radius.is_nan() || suppress_radius < 0.0 {
        return Err(AttendError::InvalidParameter("suppress_radius must be nonnegative"));
    }
    let mut work = map.clone();
    let (w, h) = work.dims();
    let r = suppress_radius.floor() as usize;
    let r2 = suppress_radius * suppress_radius;
    let mut chosen = Vec::with_capacity(n);
    for _ in 0..n {
        let (p, v) = work.argmax();
        if v <= floor {
            break;
        }
        chosen.push(p);
        for y in p.y.saturating_sub(r)..=(p.y + r).min(h - 1) {
            for x in p.x.saturating_sub(r)..=(p.x + r).min(w - 1) {
                let q = Pixel::new(x, y);
                if p.dist2(q) <= r2 {
                    work.set(q, 0.0);
                }
            }
        }
    }
    FixationLocationSet::new(chosen).map_err(|_| AttendError::NoWinner)
}

const BINOMIAL5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// 5-tap binomial blur with replicated edges, then keep even rows/columns.
fn reduce(g: &Grid) -> Grid {
    let (w, h) = g.dims();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let horiz = Grid::from_fn(w, h, |x, y| {
        BINOMIAL5.iter().enumerate().map(|(k, c)| c * g.get(Pixel::new(clamp(x as isize + k as isize - 2, w), y))).sum()
    });
    let blurred = Grid::from_fn(w, h, |x, y| {
        BINOMIAL5
            .iter()
            .enumerate()
            .map(|(k, c)| c * horiz.get(Pixel::new(x, clamp(y as isize + k as isize - 2, h))))
            .sum()
    });
    Grid::from_fn(w.div_ceil(2), h.div_ceil(2), |x, y| blurred.get(Pixel::new(2 * x, 2 * y)))
}

/// Gaussian pyramid of one channel with every level resampled back to the
/// original size. Level 0 is the input itself.
pub fn gaussian_pyramid(g: &Grid, levels: usize) -> Vec<Grid> {
    let (w, h) = g.dims();
    let mut out = vec![g.clone()];
    let mut current = g.clone();
    for k in 1..levels {
        current = reduce(&current);
        // sample i of level k sits at full-resolution coordinate i·2^k
        let scale = (1u64 << k) as f64;
        out.push(Grid::from_fn(w, h, |x, y| current.bilinear_clamped(x as f64 / scale, y as f64 / scale)));
    }
    out
}

/// Blur level for a pixel at distance `d` from the fixation.
pub fn fovea_level(d: f64, r0: f64, levels: usize) -> f64 {
    (1.0 + d / r0).log2().clamp(0.0, (levels - 1) as f64)
}

/// Foveates `image` around `center`: each pixel blends the two pyramid
/// levels bracketing `log2(1 + d/r0)`, so acuity falls off with distance.
pub fn foveate(image: &RgbImage, center: Pixel, levels: usize, r0: f64) -> Result<RgbImage, AttendError> {
    if levels < 2 {
        return Err(AttendError::InvalidParameter("levels must be at least 2"));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(AttendError::InvalidParameter("r0 must be positive"));
    }
    if center.x >= image.width || center.y >= image.height {
        return Err(AttendError::OutOfBounds(center));
    }
    let pyramids: Vec<Vec<Grid>> = (0..3).map(|c| gaussian_pyramid(&image.channel(c), levels)).collect();
    let blend = |c: usize| {
        Grid::from_fn(image.width, image.height, |x, y| {
            let p = Pixel::new(x, y);
            let level = fovea_level(p.dist2(center).sqrt(), r0, levels);
            let lo = level.floor() as usize;
            let hi = level.ceil() as usize;
            let t = level - lo as f64;
            let a = pyramids[c][lo].get(p);
            if t == 0.0 {
                a
            } else {
                a * (1.0 - t) + pyramids[c][hi].get(p) * t
            }
        })
    };
    Ok(RgbImage::from_channels(&[blend(0), blend(1), blend(2)]))
}

/// A 2×3 affine map `[theta | center]` in normalized coordinates where
/// `(-1, -1)` is the top-left corner and `(1, 1)` the bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineParams {
    pub theta: [[f64; 2]; 2],
    pub center: (f64, f64),
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams { theta: [[1.0, 0.0], [0.0, 1.0]], center: (0.0, 0.0) };

    /// Scale-only crop of half-extent `scale` around a pixel of a
    /// `width × height` image.
    pub fn around_pixel(p: Pixel, width: usize, height: usize, scale: f64) -> Self {
        AffineParams {
            theta: [[scale, 0.0], [0.0, scale]],
            center: ((2.0 * p.x as f64 + 1.0) / width as f64 - 1.0, (2.0 * p.y as f64 + 1.0) / height as f64 - 1.0),
        }
    }

    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.theta[0][0] * u + self.theta[0][1] * v + self.center.0,
            self.theta[1][0] * u + self.theta[1][1] * v + self.center.1,
        )
    }
}

/// Normalized coordinate of cell `i` of `n` (pixel-centre convention).
pub fn normalized_coord(i: usize, n: usize) -> f64 {
    (2.0 * i as f64 + 1.0) / n as f64 - 1.0
}

/// Pixel coordinate of normalized coordinate `u` along an axis of `n` pixels.
pub fn pixel_coord(u: f64, n: usize) -> f64 {
    ((u + 1.0) * n as f64 - 1.0) / 2.0
}

/// Samples a `size × size` patch from every grid of the stack through
/// `affine`, with bilinear interpolation and zero outside the input.
pub fn sample_patch(stack: &FloatGridStack, affine: &AffineParams, size: usize) -> Result<FloatGridStack, AttendError> {
    if size == 0 {
        return Err(AttendError::InvalidParameter("patch size must be at least 1"));
    }
    let (w, h) = (stack.width(), stack.height());
    let coords: Vec<(f64, f64)> = (0..size * size)
        .map(|k| {
            let (u, v) = (normalized_coord(k % size, size), normalized_coord(k / size, size));
            let (xn, yn) = affine.apply(u, v);
            (pixel_coord(xn, w), pixel_coord(yn, h))
        })
        .collect();
    let mut data = Vec::with_capacity(stack.count() * size * size);
    for g in stack.grids() {
        data.extend(coords.iter().map(|&(x, y)| g.bilinear_zero(x, y)));
    }
    Ok(FloatGridStack::new(stack.count(), size, size, data).expect("patch dimensions are positive"))
}

/// Scores one feature vector against the recurrent state.
pub trait AttentionScorer {
    fn score(&self, feature: &[f64], state: &[f64]) -> f64;
}

impl<F: Fn(&[f64], &[f64]) -> f64> AttentionScorer for F {
    fn score(&self, feature: &[f64], state: &[f64]) -> f64 {
        self(feature, state)
    }
}

/// `score = feature · state` (requires equal lengths).
#[derive(Debug, Clone, Copy, Default)]
pub struct DotScorer;

impl AttentionScorer for DotScorer {
    fn score(&self, feature: &[f64], state: &[f64]) -> f64 {
        feature.iter().zip(state).map(|(a, b)| a * b).sum()
    }
}

/// Additive scorer `v · tanh(W_f·feature + W_h·state)`.
#[derive(Debug, Clone)]
pub struct AdditiveScorer {
    /// `A × K`
    pub w_feature: Vec<Vec<f64>>,
    /// `A × H`
    pub w_state: Vec<Vec<f64>>,
    /// length `A`
    pub v: Vec<f64>,
}

impl AttentionScorer for AdditiveScorer {
    fn score(&self, feature: &[f64], state: &[f64]) -> f64 {
        let dot = |row: &[f64], x: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        self.v
            .iter()
            .zip(self.w_feature.iter().zip(&self.w_state))
            .map(|(vi, (wf, wh))| vi * (dot(wf, feature) + dot(wh, state)).tanh())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingMode {
    /// `(1/N) Σ w_i FV_i`
    #[default]
    MeanScaled,
    /// `Σ w_i FV_i`
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftAttention {
    pub weights: Vec<f64>,
    pub pooled: Vec<f64>,
}

/// Softmax-normalized attention weights over `features` and their pooled sum.
pub fn soft_attention(
    features: &[Vec<f64>],
    state: &[f64],
    scorer: &dyn AttentionScorer,
    mode: PoolingMode,
) -> Result<SoftAttention, AttendError> {
    let k = features.first().map(Vec::len).ok_or(AttendError::EmptyFeatureSet)?;
    if let Some((index, f)) = features.iter().enumerate().find(|(_, f)| f.len() != k) {
        return Err(AttendError::InconsistentLength { index, len: f.len(), expected: k });
    }
    let scores: Vec<f64> = features.iter().map(|f| scorer.score(f, state)).collect();
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(AttendError::NonFiniteScore(i));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / z).collect();

    let scale = match mode {
        PoolingMode::MeanScaled => 1.0 / features.len() as f64,
        PoolingMode::Convex => 1.0,
    };
    let mut pooled = vec![0.0; k];
    for (w, f) in weights.iter().zip(features) {
        for (p, x) in pooled.iter_mut().zip(f) {
            *p += w * x;
        }
    }
    pooled.iter_mut().for_each(|p| *p *= scale);
    Ok(SoftAttention { weights, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wta_single_pick_is_argmax() {
        let g = Grid::new(3, 2, vec![0.1, 0.2, 0.3, 0.9, 0.0, 0.4]).unwrap();
        assert_eq!(wta_select(&g, 1, 1.0, 0.0).unwrap().locations(), &[Pixel::new(0, 1)]);
    }

    #[test]
    fn wta_equal_peaks_row_major() {
        let mut g = Grid::zeros(100, 60);
        g.set(Pixel::new(80, 10), 1.0);
        g.set(Pixel::new(10, 50), 1.0);
        let locs = wta_select(&g, 2, DEFAULT_SUPPRESS_RADIUS_PX, 0.0).unwrap();
        assert_eq!(locs.locations(), &[Pixel::new(80, 10), Pixel::new(10, 50)]);
    }

    #[test]
    fn wta_stops_at_floor_and_reports_no_winner() {
        let g = Grid::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(wta_select(&g, 5, 0.0, 0.0).unwrap().len(), 1);
        assert_eq!(wta_select(&g, 1, 0.0, 1.0), Err(AttendError::NoWinner));
    }

    #[test]
    fn foveation_keeps_centre_and_constants() {
        let data: Vec<f64> = (0..16 * 12 * 3).map(|i| ((i * 37) % 251) as f64).collect();
        let img = RgbImage::new(16, 12, data).unwrap();
        let c = Pixel::new(5, 4);
        let out = foveate(&img, c, 4, 3.0).unwrap();
        assert_eq!(out.pixel(c), img.pixel(c));

        let flat = RgbImage::new(9, 7, [10.0, 20.0, 30.0].repeat(63)).unwrap();
        let out = foveate(&flat, Pixel::new(0, 0), 6, 1.0).unwrap();
        for (a, b) in out.data.iter().zip(&flat.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn foveation_at_r0_uses_level_one() {
        let data: Vec<f64> = (0..20 * 20 * 3).map(|i| ((i * 53) % 199) as f64).collect();
        let img = RgbImage::new(20, 20, data).unwrap();
        let c = Pixel::new(10, 10);
        let p = Pixel::new(14, 10);
        assert_eq!(fovea_level(4.0, 4.0, 6), 1.0);
        let out = foveate(&img, c, 6, 4.0).unwrap();
        let level1 = gaussian_pyramid(&img.channel(1), 6)[1].get(p);
        assert_eq!(out.pixel(p)[1], level1);
        assert!(matches!(foveate(&img, Pixel::new(20, 0), 6, 4.0), Err(AttendError::OutOfBounds(_))));
    }

    #[test]
    fn identity_warp_reproduces_input() {
        let g = Grid::from_fn(5, 5, |x, y| (x * 5 + y) as f64);
        let s = FloatGridStack::from_grids(std::slice::from_ref(&g)).unwrap();
        let out = sample_patch(&s, &AffineParams::IDENTITY, 5).unwrap();
        for (a, b) in out.data().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_theta_samples_centre() {
        let g = Grid::from_fn(5, 3, |x, y| (x + 10 * y) as f64);
        let s = FloatGridStack::from_grids(std::slice::from_ref(&g)).unwrap();
        let a = AffineParams { theta: [[0.0; 2]; 2], center: (0.0, 0.0) };
        let out = sample_patch(&s, &a, 3).unwrap();
        assert!(out.data().iter().all(|&v| (v - g.get(Pixel::new(2, 1))).abs() < 1e-12));
    }

    #[test]
    fn soft_attention_identical_vectors() {
        let fv = vec![1.0, 2.0, 3.0];
        let feats = vec![fv.clone(); 4];
        let r = soft_attention(&feats, &[0.5, 0.1, 0.2], &DotScorer, PoolingMode::MeanScaled).unwrap();
        assert!(r.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
        for (p, x) in r.pooled.iter().zip(&fv) {
            assert!((p - x / 4.0).abs() < 1e-12);
        }
        let r = soft_attention(&feats, &[0.5, 0.1, 0.2], &DotScorer, PoolingMode::Convex).unwrap();
        for (p, x) in r.pooled.iter().zip(&fv) {
            assert!((p - x).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_attention_single_and_errors() {
        let r = soft_attention(&[vec![2.0, -1.0]], &[1.0, 1.0], &DotScorer, PoolingMode::MeanScaled).unwrap();
        assert_eq!(r.weights, vec![1.0]);
        assert_eq!(r.pooled, vec![2.0, -1.0]);
        assert_eq!(soft_attention(&[], &[], &DotScorer, PoolingMode::Convex), Err(AttendError::EmptyFeatureSet));
        let nan = |_: &[f64], _: &[f64]| f64::NAN;
        assert_eq!(soft_attention(&[vec![1.0]], &[], &nan, PoolingMode::Convex), Err(AttendError::NonFiniteScore(0)));
        assert!(matches!(
            soft_attention(&[vec![1.0], vec![1.0, 2.0]], &[], &DotScorer, PoolingMode::Convex),
            Err(AttendError::InconsistentLength { index: 1, .. })
        ));
    }

    #[test]
    fn additive_scorer_matches_hand_value() {
        let s = AdditiveScorer { w_feature: vec![vec![1.0, 0.0]], w_state: vec![vec![0.5]], v: vec![2.0] };
        let expected = 2.0 * (3.0f64 + 0.5 * 2.0).tanh();
        assert!((s.score(&[3.0, 7.0], &[2.0]) - expected).abs() < 1e-15);
    }
}
