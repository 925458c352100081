//! Loss kernels: each returns a scalar plus analytic gradients with
//! respect to its differentiable inputs.
//!
//! Gradients are carried in a name-keyed map so callers can route them
//! into the right upstream tensors. Reductions run in fixed row-major
//! order, so results are bit-reproducible.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{CoreError, CoreResult};
use crate::grid::{FeatureStack, Mask, PixelGrid};
use crate::math;

pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
/// Division guard in the distillation ratio.
pub const DISTILLATION_EPS: f64 = 1e-7;
/// SSIM-vs-L1 mixing weight in the photometric error.
pub const PHOTOMETRIC_THETA: f64 = 0.85;
/// Default smoothness weight in the teacher objective.
pub const TEACHER_SMOOTHNESS_WEIGHT: f64 = 1e-3;

/// Scalar loss plus named gradient grids.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub value: f64,
    pub gradients: BTreeMap<String, PixelGrid>,
}

impl LossValue {
    pub fn zero() -> Self {
        LossValue {
            value: 0.0,
            gradients: BTreeMap::new(),
        }
    }

    pub fn grad(&self, name: &str) -> Option<&PixelGrid> {
        self.gradients.get(name)
    }

    /// self += other * weight, accumulating gradients on key collisions.
    pub fn add_scaled(&mut self, other: &LossValue, weight: f64) {
        self.value += weight * other.value;
        for (k, g) in &other.gradients {
            match self.gradients.get_mut(k) {
                Some(acc) => {
                    acc.accumulate(g, weight).expect("gradient shape mismatch");
                }
                None => {
                    let mut scaled = g.clone();
                    scaled.scale_in_place(weight);
                    self.gradients.insert(k.clone(), scaled);
                }
            }
        }
    }
}

// Window statistics for one channel of one pixel: clipped 3x3 uniform
// window.
struct WindowStats {
    mu_a: f64,
    mu_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
    count: f64,
}

fn window_stats(a: &PixelGrid, b: &PixelGrid, x: usize, y: usize, c: usize) -> WindowStats {
    let (w, h, _) = a.shape();
    let x0 = x.saturating_sub(1);
    let y0 = y.saturating_sub(1);
    let x1 = (x + 1).min(w - 1);
    let y1 = (y + 1).min(h - 1);
    let mut sa = 0.0;
    let mut sb = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    let mut n = 0.0;
    for wy in y0..=y1 {
        for wx in x0..=x1 {
            let va = a.get(wx, wy, c);
            let vb = b.get(wx, wy, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
            n += 1.0;
        }
    }
    let mu_a = sa / n;
    let mu_b = sb / n;
    WindowStats {
        mu_a,
        mu_b,
        var_a: saa / n - mu_a * mu_a,
        var_b: sbb / n - mu_b * mu_b,
        cov: sab / n - mu_a * mu_b,
        count: n,
    }
}

#[inline]
fn ssim_from_stats(s: &WindowStats) -> f64 {
    let a1 = 2.0 * s.mu_a * s.mu_b + SSIM_C1;
    let a2 = 2.0 * s.cov + SSIM_C2;
    let b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + SSIM_C1;
    let b2 = s.var_a + s.var_b + SSIM_C2;
    (a1 * a2) / (b1 * b2)
}

/// Per-pixel, per-channel SSIM over a 3x3 uniform window.
pub fn ssim_map(a: &PixelGrid, b: &PixelGrid) -> CoreResult<PixelGrid> {
    a.require_same_shape(b)?;
    let (w, h, ch) = a.shape();
    let mut out = PixelGrid::new(w, h, ch);
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let s = window_stats(a, b, x, y, c);
                out.set(x, y, c, ssim_from_stats(&s));
            }
        }
    }
    Ok(out)
}

/// Scatter an upstream gradient on the SSIM map back to both inputs.
pub fn ssim_backward(
    a: &PixelGrid,
    b: &PixelGrid,
    upstream: &PixelGrid,
) -> CoreResult<(PixelGrid, PixelGrid)> {
    a.require_same_shape(b)?;
    a.require_same_shape(upstream)?;
    let (w, h, ch) = a.shape();
    let mut ga = a.zeros_like();
    let mut gb = b.zeros_like();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let g = upstream.get(x, y, c);
                if g == 0.0 {
                    continue;
                }
                let s = window_stats(a, b, x, y, c);
                let a1 = 2.0 * s.mu_a * s.mu_b + SSIM_C1;
                let a2 = 2.0 * s.cov + SSIM_C2;
                let b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + SSIM_C1;
                let b2 = s.var_a + s.var_b + SSIM_C2;
                let d = b1 * b2;
                let ssim = (a1 * a2) / d;
                // Partials wrt the window statistics.
                let ds_dmu_a = (a2 / d) * 2.0 * s.mu_b - (ssim / b1) * 2.0 * s.mu_a;
                let ds_dmu_b = (a2 / d) * 2.0 * s.mu_a - (ssim / b1) * 2.0 * s.mu_b;
                let ds_dvar = -ssim / b2; // same for var_a and var_b
                let ds_dcov = 2.0 * a1 / d;
                let inv_n = 1.0 / s.count;
                let x0 = x.saturating_sub(1);
                let y0 = y.saturating_sub(1);
                let x1 = (x + 1).min(w - 1);
                let y1 = (y + 1).min(h - 1);
                for wy in y0..=y1 {
                    for wx in x0..=x1 {
                        let va = a.get(wx, wy, c);
                        let vb = b.get(wx, wy, c);
                        // d mu_a / d a(q) = 1/n
                        // d var_a / d a(q) = 2 (a(q) - mu_a)/n
                        // d cov / d a(q) = (b(q) - mu_b)/n
                        let da = ds_dmu_a * inv_n
                            + ds_dvar * 2.0 * (va - s.mu_a) * inv_n
                            + ds_dcov * (vb - s.mu_b) * inv_n;
                        let db = ds_dmu_b * inv_n
                            + ds_dvar * 2.0 * (vb - s.mu_b) * inv_n
                            + ds_dcov * (va - s.mu_a) * inv_n;
                        ga.add_at(wx, wy, c, g * da);
                        gb.add_at(wx, wy, c, g * db);
                    }
                }
            }
        }
    }
    Ok((ga, gb))
}

/// Channel-averaged photometric error map:
/// theta/2 (1 - SSIM) + (1 - theta) |a - b|.
pub fn photometric_error_map(a: &PixelGrid, b: &PixelGrid, theta: f64) -> CoreResult<PixelGrid> {
    a.require_same_shape(b)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(CoreError::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let (w, h, ch) = a.shape();
    let ssim = ssim_map(a, b)?;
    let mut out = PixelGrid::new(w, h, 1);
    let inv_c = 1.0 / ch as f64;
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for c in 0..ch {
                let l1 = math::abs(a.get(x, y, c) - b.get(x, y, c));
                acc += 0.5 * theta * (1.0 - ssim.get(x, y, c)) + (1.0 - theta) * l1;
            }
            out.set(x, y, 0, acc * inv_c);
        }
    }
    Ok(out)
}

// Backward of the per-pixel error map given a per-pixel (1-channel)
// upstream weight grid.
fn photometric_error_backward(
    a: &PixelGrid,
    b: &PixelGrid,
    theta: f64,
    upstream: &PixelGrid,
) -> CoreResult<(PixelGrid, PixelGrid)> {
    let (w, h, ch) = a.shape();
    let inv_c = 1.0 / ch as f64;
    // SSIM term: d pe / d ssim_c = -theta / (2 C)
    let mut ssim_upstream = PixelGrid::new(w, h, ch);
    for y in 0..h {
        for x in 0..w {
            let g = upstream.get(x, y, 0);
            if g == 0.0 {
                continue;
            }
            for c in 0..ch {
                ssim_upstream.set(x, y, c, -g * 0.5 * theta * inv_c);
            }
        }
    }
    let (mut ga, mut gb) = ssim_backward(a, b, &ssim_upstream)?;
    // L1 term, subgradient 0 at exact ties.
    for y in 0..h {
        for x in 0..w {
            let g = upstream.get(x, y, 0);
            if g == 0.0 {
                continue;
            }
            for c in 0..ch {
                let diff = a.get(x, y, c) - b.get(x, y, c);
                let s = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                let gl1 = g * (1.0 - theta) * inv_c * s;
                ga.add_at(x, y, c, gl1);
                gb.add_at(x, y, c, -gl1);
            }
        }
    }
    Ok((ga, gb))
}

/// Mean photometric error with gradients wrt both images
/// (keys `input_a`, `input_b`).
pub fn photometric_error(a: &PixelGrid, b: &PixelGrid, theta: f64) -> CoreResult<LossValue> {
    let map = photometric_error_map(a, b, theta)?;
    let n = map.pixel_count() as f64;
    let upstream = PixelGrid::constant(map.width(), map.height(), 1, 1.0 / n);
    let (ga, gb) = photometric_error_backward(a, b, theta, &upstream)?;
    let mut gradients = BTreeMap::new();
    gradients.insert(String::from("input_a"), ga);
    gradients.insert(String::from("input_b"), gb);
    Ok(LossValue {
        value: map.mean(),
        gradients,
    })
}

/// Per-pixel minimum photometric error over synthesized views.
///
/// Invalid pixels are skipped in the minimum; pixels invalid in every
/// view contribute nothing. Gradients (keys `view0`, `view1`, ...) flow
/// only through the per-pixel argmin view; ties pick the lowest index.
pub fn photometric_loss(
    target: &PixelGrid,
    views: &[(PixelGrid, Mask)],
    theta: f64,
) -> CoreResult<LossValue> {
    if views.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    for (img, _) in views {
        target.require_same_shape(img)?;
    }
    let (w, h, _) = target.shape();
    let maps: Vec<PixelGrid> = views
        .iter()
        .map(|(img, _)| photometric_error_map(target, img, theta))
        .collect::<CoreResult<_>>()?;

    let mut argmin: Vec<Option<usize>> = vec![None; w * h];
    let mut total = 0.0;
    let mut covered = 0usize;
    for y in 0..h {
        for x in 0..w {
            let mut best: Option<(usize, f64)> = None;
            for (i, map) in maps.iter().enumerate() {
                if !views[i].1.get(x, y) {
                    continue;
                }
                let v = map.get(x, y, 0);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
            if let Some((i, v)) = best {
                argmin[y * w + x] = Some(i);
                total += v;
                covered += 1;
            }
        }
    }
    let value = if covered == 0 {
        0.0
    } else {
        total / covered as f64
    };

    let mut gradients = BTreeMap::new();
    for (i, (img, _)) in views.iter().enumerate() {
        let mut upstream = PixelGrid::new(w, h, 1);
        let mut any = false;
        for y in 0..h {
            for x in 0..w {
                if argmin[y * w + x] == Some(i) {
                    upstream.set(x, y, 0, 1.0 / covered as f64);
                    any = true;
                }
            }
        }
        let grad = if any {
            let (_, gb) = photometric_error_backward(target, img, theta, &upstream)?;
            gb
        } else {
            img.zeros_like()
        };
        gradients.insert(format!("view{i}"), grad);
    }
    Ok(LossValue { value, gradients })
}

/// Edge-aware smoothness on mean-normalized inverse depth.
///
/// Forward differences; the image edge weights use channel-averaged
/// absolute gradients. Gradient key: `depth`.
pub fn smoothness_loss(depth: &PixelGrid, image: &PixelGrid) -> CoreResult<LossValue> {
    if depth.width() != image.width() || depth.height() != image.height() {
        return Err(CoreError::ShapeMismatch {
            expected: (depth.width(), depth.height(), 1),
            got: (image.width(), image.height(), image.channels()),
        });
    }
    if !depth.all_positive() {
        return Err(CoreError::NonPositiveDepth);
    }
    let (w, h, ch) = image.shape();
    let n = (w * h) as f64;

    let inv = depth.map(|d| 1.0 / d);
    let mean_inv = inv.mean();
    let norm = inv.map(|v| v / mean_inv);

    let edge_weight = |x: usize, y: usize, dx: usize, dy: usize| -> f64 {
        let mut acc = 0.0;
        for c in 0..ch {
            acc += math::abs(image.get(x + dx, y + dy, c) - image.get(x, y, c));
        }
        math::exp(-acc / ch as f64)
    };

    let mut value = 0.0;
    let mut grad_norm = PixelGrid::new(w, h, 1);
    let nx = (h * (w - 1)) as f64;
    let ny = ((h - 1) * w) as f64;
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                let d = norm.get(x + 1, y, 0) - norm.get(x, y, 0);
                let ew = edge_weight(x, y, 1, 0);
                value += math::abs(d) * ew / nx;
                let s = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                grad_norm.add_at(x + 1, y, 0, s * ew / nx);
                grad_norm.add_at(x, y, 0, -s * ew / nx);
            }
            if y + 1 < h {
                let d = norm.get(x, y + 1, 0) - norm.get(x, y, 0);
                let ew = edge_weight(x, y, 0, 1);
                value += math::abs(d) * ew / ny;
                let s = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                grad_norm.add_at(x, y + 1, 0, s * ew / ny);
                grad_norm.add_at(x, y, 0, -s * ew / ny);
            }
        }
    }

    // Chain: norm = inv / mean(inv), then inv = 1/depth.
    let dot: f64 = grad_norm
        .data()
        .iter()
        .zip(inv.data().iter())
        .map(|(g, v)| g * v)
        .sum();
    let mut grad_depth = PixelGrid::new(w, h, 1);
    for i in 0..grad_depth.len() {
        let g_inv = grad_norm.data()[i] / mean_inv - dot / (mean_inv * mean_inv * n);
        let d = depth.data()[i];
        grad_depth.data_mut()[i] = g_inv * (-1.0 / (d * d));
    }

    let mut gradients = BTreeMap::new();
    gradients.insert(String::from("depth"), grad_depth);
    Ok(LossValue { value, gradients })
}

/// Multi-scale relative-error distillation between a teacher stack and a
/// student stack of inverse depths.
///
/// Gradient keys: `teacher_depth/s{i}`, `student_depth/s{i}`.
pub fn distillation_loss(
    teacher: &FeatureStack,
    student: &FeatureStack,
    eps: f64,
) -> CoreResult<LossValue> {
    if !teacher.same_shapes(student) {
        return Err(CoreError::ShapeMismatch {
            expected: teacher.level(0).shape(),
            got: student.level(0).shape(),
        });
    }
    let s_count = teacher.scales() as f64;
    let mut value = 0.0;
    let mut gradients = BTreeMap::new();
    for s in 0..teacher.scales() {
        let t = teacher.level(s);
        let u = student.level(s);
        let n = t.len() as f64;
        let mut gt = t.zeros_like();
        let mut gu = u.zeros_like();
        for i in 0..t.len() {
            let tv = t.data()[i];
            let uv = u.data()[i];
            let denom = uv + eps;
            let diff = tv - uv;
            value += math::abs(diff) / denom / (n * s_count);
            let sign = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            gt.data_mut()[i] = sign / denom / (n * s_count);
            gu.data_mut()[i] = (-sign * denom - math::abs(diff)) / (denom * denom) / (n * s_count);
        }
        gradients.insert(format!("teacher_depth/s{s}"), gt);
        gradients.insert(format!("student_depth/s{s}"), gu);
    }
    Ok(LossValue { value, gradients })
}

/// Which branch of the feature-consistency objective applies to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Degraded,
    Clear,
}

// Mean L1 between stacks: per-scale mean, averaged over scales. Returns
// the value and the gradient wrt the first argument.
fn stack_l1(a: &FeatureStack, b: &FeatureStack) -> (f64, Vec<PixelGrid>) {
    let s_count = a.scales() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(a.scales());
    for s in 0..a.scales() {
        let ga = a.level(s);
        let gb = b.level(s);
        let n = ga.len() as f64;
        let mut grad = ga.zeros_like();
        for i in 0..ga.len() {
            let diff = ga.data()[i] - gb.data()[i];
            value += math::abs(diff) / (n * s_count);
            grad.data_mut()[i] = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            } / (n * s_count);
        }
        grads.push(grad);
    }
    (value, grads)
}

/// Feature alignment with stop-gradient targets.
///
/// Degraded branch: |F(input) - sg(teacher_clean)| + |F(input) -
/// sg(student_clean)|. Clear branch: |F(input) - sg(teacher_clean)|.
/// Gradients flow only into `student_hidden/s{i}`; the stop-gradient
/// arguments get exact-zero grids (`student_hidden_clean/s{i}`,
/// `teacher_hidden/s{i}`).
pub fn feature_consistency_loss(
    student_input: &FeatureStack,
    student_clean: Option<&FeatureStack>,
    teacher_clean: &FeatureStack,
    kind: InputKind,
) -> CoreResult<LossValue> {
    if !student_input.same_shapes(teacher_clean) {
        return Err(CoreError::ShapeMismatch {
            expected: student_input.level(0).shape(),
            got: teacher_clean.level(0).shape(),
        });
    }
    let mut gradients = BTreeMap::new();
    let (mut value, mut grads) = stack_l1(student_input, teacher_clean);
    match kind {
        InputKind::Degraded => {
            let clean = student_clean.ok_or_else(|| {
                CoreError::InvalidParameter(String::from(
                    "degraded branch requires student features on the paired clean input",
                ))
            })?;
            if !student_input.same_shapes(clean) {
                return Err(CoreError::ShapeMismatch {
                    expected: student_input.level(0).shape(),
                    got: clean.level(0).shape(),
                });
            }
            let (v2, g2) = stack_l1(student_input, clean);
            value += v2;
            for (acc, g) in grads.iter_mut().zip(g2.iter()) {
                acc.accumulate(g, 1.0)?;
            }
            for s in 0..clean.scales() {
                gradients.insert(format!("student_hidden_clean/s{s}"), clean.level(s).zeros_like());
            }
        }
        InputKind::Clear => {}
    }
    for (s, g) in grads.into_iter().enumerate() {
        gradients.insert(format!("student_hidden/s{s}"), g);
    }
    for s in 0..teacher_clean.scales() {
        gradients.insert(format!("teacher_hidden/s{s}"), teacher_clean.level(s).zeros_like());
    }
    Ok(LossValue { value, gradients })
}

/// Weighted student objective: distillation + l1 * ranking + l2 *
/// feature consistency, gradients accumulated from all three.
pub fn total_student_loss(
    distillation: &LossValue,
    ranking: &LossValue,
    consistency: &LossValue,
    lambda1: f64,
    lambda2: f64,
) -> LossValue {
    let mut total = LossValue::zero();
    total.add_scaled(distillation, 1.0);
    total.add_scaled(ranking, lambda1);
    total.add_scaled(consistency, lambda2);
    total
}

/// Teacher objective: photometric + beta * smoothness.
pub fn teacher_loss(photometric: &LossValue, smoothness: &LossValue, beta: f64) -> LossValue {
    let mut total = LossValue::zero();
    total.add_scaled(photometric, 1.0);
    total.add_scaled(smoothness, beta);
    total
}
