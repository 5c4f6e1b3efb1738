//! Dense row-major grids and the saliency-map newtype.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the unit-sum invariant of a [`SaliencyMap`].
pub const UNIT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid has zero width or height")]
    EmptyGrid,
    #[error("value buffer has {actual} entries, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("grid contains a negative or non-finite value at index {0}")]
    InvalidValue(usize),
    #[error("grid sums to zero and cannot be normalized")]
    ZeroMass,
}

/// A pixel coordinate: `x` is the column, `y` the row, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn dist2(self, other: Pixel) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx * dx + dy * dy
    }
}

/// A dense `height × width` grid of reals stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid);
        }
        if values.len() != width * height {
            return Err(GridError::LengthMismatch { expected: width * height, actual: values.len() });
        }
        Ok(Self { width, height, values })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self { width, height, values: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                g.values[y * width + x] = f(x, y);
            }
        }
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn index(&self, p: Pixel) -> usize {
        p.y * self.width + p.x
    }

    pub fn get(&self, p: Pixel) -> f64 {
        self.values[self.index(p)]
    }

    pub fn set(&mut self, p: Pixel, v: f64) {
        let i = self.index(p);
        self.values[i] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Row-major first pixel holding the maximum value.
    pub fn argmax(&self) -> (Pixel, f64) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (self.pixel_at(best), self.values[best])
    }

    pub fn pixel_at(&self, index: usize) -> Pixel {
        Pixel::new(index % self.width, index / self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid { width: self.width, height: self.height, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Value at fractional position `(x, y)` with bilinear interpolation.
    /// Neighbours that fall outside the grid contribute zero.
    pub fn bilinear_zero(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let mut acc = 0.0;
        for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
            for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
                let w = wx * wy;
                if w == 0.0 {
                    continue;
                }
                let xi = x0 + dx;
                let yi = y0 + dy;
                if xi >= 0.0 && yi >= 0.0 && (xi as usize) < self.width && (yi as usize) < self.height {
                    acc += w * self.values[yi as usize * self.width + xi as usize];
                }
            }
        }
        acc
    }

    /// Value at fractional position `(x, y)` with bilinear interpolation,
    /// clamping coordinates to the grid edge.
    pub fn bilinear_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let at = |xx: usize, yy: usize| self.values[yy * self.width + xx];
        let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear resampling to `width × height` using pixel-centre alignment
    /// and edge clamping. Returns a clone when the size is unchanged.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Grid {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        Grid::from_fn(width, height, |x, y| {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            self.bilinear_clamped(src_x, src_y)
        })
    }

    /// Horizontal mirror image.
    pub fn flip_horizontal(&self) -> Grid {
        Grid::from_fn(self.width, self.height, |x, y| self.get(Pixel::new(self.width - 1 - x, y)))
    }
}

/// A nonnegative grid normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap(Grid);

impl SaliencyMap {
    /// Normalizes `grid` to unit sum. Fails on negative or non-finite
    /// entries and on an all-zero grid.
    pub fn normalize(grid: Grid) -> Result<Self, GridError> {
        if let Some(i) = grid.values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(GridError::InvalidValue(i));
        }
        let total = grid.sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(GridError::ZeroMass);
        }
        Ok(Self(grid.map(|v| v / total)))
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GridError> {
        Self::normalize(Grid::new(width, height, values)?)
    }

    pub fn as_grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }
}

impl Deref for SaliencyMap {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.0
    }
}

impl AsRef<Grid> for SaliencyMap {
    fn as_ref(&self) -> &Grid {
        &self.0
    }
}

impl AsRef<Grid> for Grid {
    fn as_ref(&self) -> &Grid {
        self
    }
}

/// `count` grids sharing one size, stored grid-major then row-major.
///
/// Values are kept as `f64`; on disk (FGRID) they are IEEE-754 binary32.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatGridStack {
    count: usize,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatGridStack {
    pub fn new(count: usize, width: usize, height: usize, data: Vec<f64>) -> Result<Self, GridError> {
        if count == 0 || width == 0 || height == 0 {
            return Err(GridError::EmptyGrid);
        }
        let expected = count * width * height;
        if data.len() != expected {
            return Err(GridError::LengthMismatch { expected, actual: data.len() });
        }
        Ok(Self { count, width, height, data })
    }

    pub fn from_grids(grids: &[Grid]) -> Result<Self, GridError> {
        let first = grids.first().ok_or(GridError::EmptyGrid)?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(grids.len() * w * h);
        for g in grids {
            if g.dims() != (w, h) {
                return Err(GridError::LengthMismatch { expected: w * h, actual: g.len() });
            }
            data.extend_from_slice(g.values());
        }
        Self::new(grids.len(), w, h, data)
    }

    /// A stack of `K`-vectors stored as `count × 1 × K`.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self, GridError> {
        let k = vectors.first().map(Vec::len).ok_or(GridError::EmptyGrid)?;
        let mut data = Vec::with_capacity(vectors.len() * k);
        for v in vectors {
            if v.len() != k {
                return Err(GridError::LengthMismatch { expected: k, actual: v.len() });
            }
            data.extend_from_slice(v);
        }
        Self::new(vectors.len(), k, 1, data)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn grid_slice(&self, i: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn grid(&self, i: usize) -> Grid {
        Grid { width: self.width, height: self.height, values: self.grid_slice(i).to_vec() }
    }

    pub fn grids(&self) -> impl Iterator<Item = Grid> + '_ {
        (0..self.count).map(|i| self.grid(i))
    }
}

/// An RGB image with channel values in `[0, 255]`, interleaved row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid);
        }
        if data.len() != width * height * 3 {
            return Err(GridError::LengthMismatch { expected: width * height * 3, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn pixel(&self, p: Pixel) -> [f64; 3] {
        let i = (p.y * self.width + p.x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// One colour plane as a grid.
    pub fn channel(&self, c: usize) -> Grid {
        Grid::from_fn(self.width, self.height, |x, y| self.data[(y * self.width + x) * 3 + c])
    }

    pub fn from_channels(channels: &[Grid; 3]) -> Self {
        let (width, height) = channels[0].dims();
        let mut data = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for ch in channels {
                data.push(ch.values()[i]);
            }
        }
        Self { width, height, data }
    }
}
