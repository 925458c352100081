//! Ordinal guidance distillation: uncertainty masking, pair sampling,
//! and the ranking loss.
//!
//! High teacher/student disagreement marks "uncertain" pixels; ordinal
//! pairs straddle that region (local set) or cover the whole image
//! (global set). Each pair is supervised by the ordering of an oracle's
//! inverse depths, which only depends on depth ratios, so any
//! positive-scale oracle produces identical labels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::grid::{Mask, PixelGrid};
use crate::losses::LossValue;
use crate::math;
use crate::rng::Rng;

/// Side length of the averaging window around each sample point.
pub const WINDOW: usize = 5;

/// How the uncertainty threshold is derived from the normalized
/// discrepancy map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// Nearest-rank 95th percentile of the discrepancy values; the mask
    /// covers the top-5% disagreement region.
    Percentile95,
    /// Fixed absolute threshold on the normalized discrepancy.
    Fixed(f64),
}

/// Boolean uncertainty region with its threshold and source map.
#[derive(Debug, Clone)]
pub struct UncertaintyMask {
    pub mask: Mask,
    pub gamma: f64,
    /// The normalized discrepancy the mask was thresholded from.
    pub discrepancy: PixelGrid,
}

/// Which sampling set a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSet {
    Local,
    Global,
}

/// A sampled ordinal pair.
///
/// `p0`/`p1` are the student values at the two locations, `p0_star`/
/// `p1_star` the oracle values, all window-averaged when windowing is
/// enabled. `label` comes from the oracle ratio test.
#[derive(Debug, Clone)]
pub struct OrdinalPair {
    pub location0: (usize, usize),
    pub location1: (usize, usize),
    pub p0: f64,
    pub p1: f64,
    pub p0_star: f64,
    pub p1_star: f64,
    pub label: i8,
    pub set: PairSet,
}

/// Sampling hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct SamplingConfig {
    /// Ratio dead zone for the ordinal label.
    pub tau: f64,
    /// Fraction of uncertain pixels drawn as local pairs.
    pub local_ratio: f64,
    /// Fraction of all pixels drawn as global pairs.
    pub global_ratio: f64,
    pub gamma_mode: GammaMode,
    /// Average over the surrounding window instead of point samples.
    /// Toggling this never changes which locations are drawn.
    pub window: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            tau: 0.15,
            local_ratio: 0.05,
            global_ratio: 0.01,
            gamma_mode: GammaMode::Percentile95,
            window: true,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> CoreResult<()> {
        if self.tau <= 0.0 {
            return Err(CoreError::InvalidParameter(String::from("tau must be > 0")));
        }
        for (name, r) in [("local_ratio", self.local_ratio), ("global_ratio", self.global_ratio)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(CoreError::InvalidParameter(alloc::format!(
                    "{name} must lie in (0, 1], got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// Elementwise absolute difference of the two inverse-depth maps.
pub fn depth_discrepancy(teacher: &PixelGrid, student: &PixelGrid) -> CoreResult<PixelGrid> {
    teacher.require_same_shape(student)?;
    let mut out = teacher.zeros_like();
    for i in 0..out.len() {
        out.data_mut()[i] = math::abs(teacher.data()[i] - student.data()[i]);
    }
    Ok(out)
}

/// Min-max normalization to [0, 1]; a constant map normalizes to zeros.
pub fn normalize_discrepancy(disc: &PixelGrid) -> PixelGrid {
    let (lo, hi) = disc.min_max();
    if hi == lo {
        return disc.zeros_like();
    }
    let range = hi - lo;
    disc.map(|v| (v - lo) / range)
}

/// Threshold the normalized discrepancy into the uncertainty region.
///
/// With [`GammaMode::Percentile95`] the threshold is the nearest-rank
/// 95th percentile, so roughly the top 5% of pixels are marked; strict
/// comparison means an all-zero map yields an empty mask.
pub fn uncertainty_mask(normalized: &PixelGrid, mode: GammaMode) -> UncertaintyMask {
    let gamma = match mode {
        GammaMode::Fixed(g) => g,
        GammaMode::Percentile95 => {
            let mut sorted: Vec<f64> = normalized.data().to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("discrepancy must be finite"));
            let n = sorted.len();
            // nearest-rank: ceil(0.95 n), 1-indexed
            let rank = (math::ceil(0.95 * n as f64) as usize).clamp(1, n);
            sorted[rank - 1]
        }
    };
    let (w, h, _) = normalized.shape();
    let mut mask = Mask::new_false(w, h);
    for y in 0..h {
        for x in 0..w {
            if normalized.get(x, y, 0) > gamma {
                mask.set(x, y, true);
            }
        }
    }
    UncertaintyMask {
        mask,
        gamma,
        discrepancy: normalized.clone(),
    }
}

/// Ordinal label from the oracle ratio with dead zone `tau`.
pub fn ordinal_label(p0_star: f64, p1_star: f64, tau: f64) -> CoreResult<i8> {
    if p0_star <= 0.0 || p1_star <= 0.0 {
        return Err(CoreError::NonPositiveDepth);
    }
    let ratio = p0_star / p1_star;
    if ratio >= 1.0 + tau {
        Ok(1)
    } else if ratio < 1.0 / (1.0 + tau) {
        Ok(-1)
    } else {
        Ok(0)
    }
}

/// Ranking penalty for one pair, with derivatives wrt `p0` and `p1`.
///
/// Ordered labels use the soft ranking loss log2(1 + e^(-l (p0 - p1)));
/// the tie label penalizes the squared gap.
pub fn pair_loss(p0: f64, p1: f64, label: i8) -> (f64, f64, f64) {
    let diff = p0 - p1;
    if label == 0 {
        (diff * diff, 2.0 * diff, -2.0 * diff)
    } else {
        let l = label as f64;
        let z = -l * diff;
        // log2(1 + e^z), stable for both signs of z.
        let value = if z > 0.0 {
            (z + math::ln(1.0 + math::exp(-z))) / core::f64::consts::LN_2
        } else {
            math::ln(1.0 + math::exp(z)) / core::f64::consts::LN_2
        };
        // d/d p0 = -l sigma(z) / ln 2
        let sig = math::sigmoid(z);
        let dp0 = -l * sig / core::f64::consts::LN_2;
        (value, dp0, -dp0)
    }
}

/// Mean over the window around `location`, clipped at image borders.
pub fn window_average(grid: &PixelGrid, location: (usize, usize)) -> CoreResult<f64> {
    let (w, h, _) = grid.shape();
    let (x, y) = location;
    if x >= w || y >= h {
        return Err(CoreError::OutOfBounds { x, y });
    }
    let r = WINDOW / 2;
    let x0 = x.saturating_sub(r);
    let y0 = y.saturating_sub(r);
    let x1 = (x + r).min(w - 1);
    let y1 = (y + r).min(h - 1);
    let mut acc = 0.0;
    let mut n = 0.0;
    for wy in y0..=y1 {
        for wx in x0..=x1 {
            acc += grid.get(wx, wy, 0);
            n += 1.0;
        }
    }
    Ok(acc / n)
}

#[inline]
fn value_at(grid: &PixelGrid, loc: (usize, usize), window: bool) -> f64 {
    if window {
        window_average(grid, loc).expect("sampled location must be in bounds")
    } else {
        grid.get(loc.0, loc.1, 0)
    }
}

/// Draw the local and global ordinal pair sets.
///
/// Local pairs anchor one point in the uncertainty region and one in its
/// complement; global pairs draw both points over the whole image. The
/// location stream depends only on the seed, mask, and ratios, never on
/// the window flag. An empty uncertainty region simply yields no local
/// pairs.
pub fn sample_pairs(
    uncertainty: &UncertaintyMask,
    student: &PixelGrid,
    oracle: &PixelGrid,
    cfg: &SamplingConfig,
    rng: &mut Rng,
) -> CoreResult<(Vec<OrdinalPair>, Vec<OrdinalPair>)> {
    cfg.validate()?;
    student.require_same_shape(oracle)?;
    if !oracle.all_positive() {
        return Err(CoreError::NonPositiveDepth);
    }
    let (w, h, _) = student.shape();

    let inside = uncertainty.mask.true_locations();
    let outside = uncertainty.mask.false_locations();
    let local_count = math::round(cfg.local_ratio * inside.len() as f64) as usize;
    let global_count = math::round(cfg.global_ratio * (w * h) as f64) as usize;

    let make_pair = |loc0: (usize, usize), loc1: (usize, usize), set: PairSet| -> CoreResult<OrdinalPair> {
        let p0 = value_at(student, loc0, cfg.window);
        let p1 = value_at(student, loc1, cfg.window);
        let p0_star = value_at(oracle, loc0, cfg.window);
        let p1_star = value_at(oracle, loc1, cfg.window);
        Ok(OrdinalPair {
            location0: loc0,
            location1: loc1,
            p0,
            p1,
            p0_star,
            p1_star,
            label: ordinal_label(p0_star, p1_star, cfg.tau)?,
            set,
        })
    };

    let mut local = Vec::with_capacity(local_count);
    if !inside.is_empty() && !outside.is_empty() {
        for _ in 0..local_count {
            let loc0 = inside[rng.below(inside.len())];
            let loc1 = outside[rng.below(outside.len())];
            local.push(make_pair(loc0, loc1, PairSet::Local)?);
        }
    }

    let mut global = Vec::with_capacity(global_count);
    for _ in 0..global_count {
        let loc0 = (rng.below(w), rng.below(h));
        let loc1 = (rng.below(w), rng.below(h));
        global.push(make_pair(loc0, loc1, PairSet::Global)?);
    }

    Ok((local, global))
}

// Distribute `amount` uniformly over the clipped window around `loc`.
fn scatter_window(grad: &mut PixelGrid, loc: (usize, usize), amount: f64, window: bool) {
    if !window {
        grad.add_at(loc.0, loc.1, 0, amount);
        return;
    }
    let (w, h, _) = grad.shape();
    let r = WINDOW / 2;
    let x0 = loc.0.saturating_sub(r);
    let y0 = loc.1.saturating_sub(r);
    let x1 = (loc.0 + r).min(w - 1);
    let y1 = (loc.1 + r).min(h - 1);
    let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
    for wy in y0..=y1 {
        for wx in x0..=x1 {
            grad.add_at(wx, wy, 0, amount / n);
        }
    }
}

/// Ranking objective over the two pair sets: mean pair loss per set,
/// summed. Values are recomputed from the current student map so the
/// loss is a differentiable function of it; gradients spread through the
/// window-average weights into the full-resolution student map (key
/// `student_depth/s0`). Empty sets contribute zero.
pub fn ranking_loss(
    local: &[OrdinalPair],
    global: &[OrdinalPair],
    student: &PixelGrid,
    window: bool,
) -> LossValue {
    let mut grad = PixelGrid::new(student.width(), student.height(), 1);
    let mut value = 0.0;
    for (set, pairs) in [(PairSet::Global, global), (PairSet::Local, local)] {
        let _ = set;
        if pairs.is_empty() {
            continue;
        }
        let scale = 1.0 / pairs.len() as f64;
        for pair in pairs {
            let p0 = value_at(student, pair.location0, window);
            let p1 = value_at(student, pair.location1, window);
            let (v, dp0, dp1) = pair_loss(p0, p1, pair.label);
            value += v * scale;
            scatter_window(&mut grad, pair.location0, dp0 * scale, window);
            scatter_window(&mut grad, pair.location1, dp1 * scale, window);
        }
    }
    let mut gradients = BTreeMap::new();
    gradients.insert(String::from("student_depth/s0"), grad);
    LossValue { value, gradients }
}
