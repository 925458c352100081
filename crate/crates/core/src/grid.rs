//! Dense row-major pixel grids and derived containers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};

/// Dense 2-D grid of floats with interleaved channels.
///
/// Storage is row-major: index `(y * width + x) * channels + c`. The same
/// type carries images, depth maps, feature planes, and soft masks.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        PixelGrid {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> CoreResult<Self> {
        if data.len() != width * height * channels {
            return Err(CoreError::ShapeMismatch {
                expected: (width, height, channels),
                got: (data.len(), 1, 1),
            });
        }
        Ok(PixelGrid {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Self {
        PixelGrid {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Build a single-channel grid from a function of (x, y).
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        PixelGrid {
            width,
            height,
            channels: 1,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] += v;
    }

    pub fn zeros_like(&self) -> Self {
        PixelGrid::new(self.width, self.height, self.channels)
    }

    pub fn same_shape(&self, other: &PixelGrid) -> bool {
        self.shape() == other.shape()
    }

    pub fn require_same_shape(&self, other: &PixelGrid) -> CoreResult<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(CoreError::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            })
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn all_positive(&self) -> bool {
        self.data.iter().all(|&v| v > 0.0)
    }

    /// Mean over every entry, fixed row-major accumulation order.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        for &v in &self.data {
            acc += v;
        }
        acc / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PixelGrid {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// self += other * weight, shape-checked.
    pub fn accumulate(&mut self, other: &PixelGrid, weight: f64) -> CoreResult<()> {
        self.require_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * weight;
        }
        Ok(())
    }

    /// Channel mean, producing a single-channel grid.
    pub fn grayscale(&self) -> PixelGrid {
        if self.channels == 1 {
            return self.clone();
        }
        let mut out = PixelGrid::new(self.width, self.height, 1);
        let inv = 1.0 / self.channels as f64;
        for y in 0..self.height {
            for x in 0..self.width {
                let mut acc = 0.0;
                for c in 0..self.channels {
                    acc += self.get(x, y, c);
                }
                out.set(x, y, 0, acc * inv);
            }
        }
        out
    }

    /// 2x2 box-filter downsample. Output dims are halved (floor); a
    /// trailing odd row/column is dropped.
    pub fn downsample2x(&self) -> PixelGrid {
        let ow = self.width / 2;
        let oh = self.height / 2;
        let mut out = PixelGrid {
            width: ow,
            height: oh,
            channels: self.channels,
            data: vec![0.0; ow * oh * self.channels],
        };
        for y in 0..oh {
            for x in 0..ow {
                for c in 0..self.channels {
                    let s = self.get(2 * x, 2 * y, c)
                        + self.get(2 * x + 1, 2 * y, c)
                        + self.get(2 * x, 2 * y + 1, c)
                        + self.get(2 * x + 1, 2 * y + 1, c);
                    out.set(x, y, c, 0.25 * s);
                }
            }
        }
        out
    }

    /// Adjoint of [`downsample2x`]: scatter an upstream gradient on the
    /// half-resolution grid back to full resolution.
    pub fn downsample2x_backward(&self, upstream: &PixelGrid) -> PixelGrid {
        let mut out = self.zeros_like();
        for y in 0..upstream.height {
            for x in 0..upstream.width {
                for c in 0..upstream.channels {
                    let g = 0.25 * upstream.get(x, y, c);
                    out.add_at(2 * x, 2 * y, c, g);
                    out.add_at(2 * x + 1, 2 * y, c, g);
                    out.add_at(2 * x, 2 * y + 1, c, g);
                    out.add_at(2 * x + 1, 2 * y + 1, c, g);
                }
            }
        }
        out
    }
}

/// Per-pixel boolean mask with grid dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new_false(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn new_true(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height);
        Mask {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Pixel locations where the mask is true, row-major order.
    pub fn true_locations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Pixel locations where the mask is false, row-major order.
    pub fn false_locations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// A pyramid of grids: scale `s` has resolution `(w / 2^s, h / 2^s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    levels: Vec<PixelGrid>,
}

impl FeatureStack {
    /// Validates the strict factor-2 halving between consecutive levels.
    pub fn new(levels: Vec<PixelGrid>) -> CoreResult<Self> {
        if levels.is_empty() {
            return Err(CoreError::EmptyInput);
        }
        for s in 1..levels.len() {
            let (pw, ph, _) = levels[s - 1].shape();
            let (w, h, _) = levels[s].shape();
            if w != pw / 2 || h != ph / 2 {
                return Err(CoreError::ShapeMismatch {
                    expected: (pw / 2, ph / 2, levels[s].channels()),
                    got: levels[s].shape(),
                });
            }
        }
        Ok(FeatureStack { levels })
    }

    #[inline]
    pub fn scales(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn level(&self, s: usize) -> &PixelGrid {
        &self.levels[s]
    }

    #[inline]
    pub fn levels(&self) -> &[PixelGrid] {
        &self.levels
    }

    pub fn iter(&self) -> impl Iterator<Item = &PixelGrid> {
        self.levels.iter()
    }

    pub fn map(&self, f: impl Fn(&PixelGrid) -> PixelGrid) -> FeatureStack {
        FeatureStack {
            levels: self.levels.iter().map(f).collect(),
        }
    }

    pub fn same_shapes(&self, other: &FeatureStack) -> bool {
        self.scales() == other.scales()
            && self
                .levels
                .iter()
                .zip(other.levels.iter())
                .all(|(a, b)| a.same_shape(b))
    }
}
