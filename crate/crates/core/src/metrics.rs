//! Depth evaluation: error metrics, threshold accuracies, range
//! clamping, and median scaling.

use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::grid::{Mask, PixelGrid};
use crate::math;

/// Metric bundle for one (prediction, ground truth) comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthEvalReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    /// Threshold accuracies in percent: ratio < 1.25^k.
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub valid_pixels: usize,
    /// Uniform scale applied to the prediction before evaluation (1.0
    /// when none).
    pub scale_factor: f64,
}

/// Mask ground truth to `[lo, hi]` and clip the prediction onto it.
///
/// The mask marks pixels whose ground truth lies in range; predicted
/// values on those pixels are clamped into the range.
pub fn clamp_range(
    pred: &PixelGrid,
    gt: &PixelGrid,
    lo: f64,
    hi: f64,
) -> CoreResult<(PixelGrid, Mask)> {
    pred.require_same_shape(gt)?;
    if lo >= hi {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "range bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (w, h, _) = gt.shape();
    let mut mask = Mask::new_false(w, h);
    let mut clipped = pred.clone();
    for y in 0..h {
        for x in 0..w {
            let g = gt.get(x, y, 0);
            if g >= lo && g <= hi {
                mask.set(x, y, true);
                clipped.set(x, y, 0, pred.get(x, y, 0).clamp(lo, hi));
            }
        }
    }
    Ok((clipped, mask))
}

// Lower-middle median: deterministic for even counts.
fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("median of non-finite values"));
    values[(values.len() - 1) / 2]
}

/// Scale the prediction so its median matches the ground truth median
/// over the mask. Returns the scaled prediction and the factor.
pub fn median_scale(
    pred: &PixelGrid,
    gt: &PixelGrid,
    mask: &Mask,
) -> CoreResult<(PixelGrid, f64)> {
    pred.require_same_shape(gt)?;
    let mut pv = Vec::new();
    let mut gv = Vec::new();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if mask.get(x, y) {
                pv.push(pred.get(x, y, 0));
                gv.push(gt.get(x, y, 0));
            }
        }
    }
    if pv.is_empty() {
        return Err(CoreError::EmptyMask);
    }
    let factor = median(&mut gv) / median(&mut pv);
    Ok((pred.map(|v| v * factor), factor))
}

/// Evaluate standard depth metrics over the masked pixels.
pub fn evaluate(pred: &PixelGrid, gt: &PixelGrid, mask: &Mask) -> CoreResult<DepthEvalReport> {
    evaluate_scaled(pred, gt, mask, 1.0)
}

/// Like [`evaluate`], recording the scale factor that produced `pred`.
pub fn evaluate_scaled(
    pred: &PixelGrid,
    gt: &PixelGrid,
    mask: &Mask,
    scale_factor: f64,
) -> CoreResult<DepthEvalReport> {
    pred.require_same_shape(gt)?;
    let mut n = 0usize;
    let mut abs_rel = 0.0;
    let mut sq_rel = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let mut d1 = 0usize;
    let mut d2 = 0usize;
    let mut d3 = 0usize;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !mask.get(x, y) {
                continue;
            }
            let d = pred.get(x, y, 0);
            let g = gt.get(x, y, 0);
            if d <= 0.0 || g <= 0.0 {
                return Err(CoreError::NonPositiveDepth);
            }
            n += 1;
            let diff = d - g;
            abs_rel += math::abs(diff) / g;
            sq_rel += diff * diff / g;
            sq += diff * diff;
            let dl = math::ln(d) - math::ln(g);
            sq_log += dl * dl;
            let ratio = (d / g).max(g / d);
            if ratio < 1.25 {
                d1 += 1;
            }
            if ratio < 1.25 * 1.25 {
                d2 += 1;
            }
            if ratio < 1.25 * 1.25 * 1.25 {
                d3 += 1;
            }
        }
    }
    if n == 0 {
        return Err(CoreError::EmptyMask);
    }
    let nf = n as f64;
    Ok(DepthEvalReport {
        abs_rel: abs_rel / nf,
        sq_rel: sq_rel / nf,
        rmse: math::sqrt(sq / nf),
        rmse_log: math::sqrt(sq_log / nf),
        delta1: 100.0 * d1 as f64 / nf,
        delta2: 100.0 * d2 as f64 / nf,
        delta3: 100.0 * d3 as f64 / nf,
        valid_pixels: n,
        scale_factor,
    })
}
