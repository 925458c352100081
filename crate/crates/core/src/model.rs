//! Tiny coordinate-conditioned depth predictor.
//!
//! The network maps (normalized pixel position, 3x3 grayscale patch) to
//! an inverse depth through two tanh layers and a sigmoid-bounded head.
//! Evaluating it over an image pyramid produces the multi-scale inverse
//! depth stack and the hidden-feature stack consumed by the distillation
//! objectives. Backpropagation is handwritten and exact, which keeps the
//! whole training system free of autodiff frameworks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::grid::{FeatureStack, PixelGrid};
use crate::math;
use crate::rng::Rng;

/// Input features per pixel: x/w, y/h, and the 3x3 grayscale patch.
pub const INPUT_DIM: usize = 11;

/// Number of scalar parameters for hidden width `h`.
pub fn weight_count(h: usize) -> usize {
    INPUT_DIM * h + h + h * h + h + h + 1
}

// Flat layout offsets: w1 | b1 | w2 | b2 | w3 | b3.
#[derive(Debug, Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
}

fn layout(h: usize) -> Layout {
    let w1 = 0;
    let b1 = w1 + INPUT_DIM * h;
    let w2 = b1 + h;
    let b2 = w2 + h * h;
    let w3 = b2 + h;
    let b3 = w3 + h;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
    }
}

/// Depth network weights plus output range.
///
/// `inv_min`/`inv_max` bound the predicted inverse depth; the defaults
/// correspond to a metric range of 0.1 m to 80 m.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthNet {
    pub hidden: usize,
    pub weights: Vec<f64>,
    pub inv_min: f64,
    pub inv_max: f64,
    pub seed: u64,
}

/// Flat per-weight gradient aligned with the weight layout.
pub type GradientVector = Vec<f64>;

/// Depth the network predicts at initialization (meters).
///
/// A mid-sigmoid head output would start at the very bottom of the
/// metric range (0.2 m for the default bounds), where every warp lands
/// tens of pixels off and the photometric landscape carries no signal.
/// The output bias is therefore initialized to place the starting
/// prediction inside the scene; all other parameters are
/// Glorot-uniform.
pub const INIT_DEPTH: f64 = 5.0;

/// Glorot-uniform initialization, deterministic per seed; the output
/// bias is offset so the initial prediction sits at [`INIT_DEPTH`].
pub fn init_weights(seed: u64, hidden: usize) -> DepthNet {
    assert!(hidden >= 1);
    let lay = layout(hidden);
    let mut rng = Rng::new(seed);
    let mut weights = vec![0.0; weight_count(hidden)];
    let fill = |range: core::ops::Range<usize>, fan_in: usize, fan_out: usize, rng: &mut Rng, w: &mut [f64]| {
        let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        for i in range {
            w[i] = rng.uniform(-limit, limit);
        }
    };
    fill(lay.w1..lay.b1 + hidden, INPUT_DIM, hidden, &mut rng, &mut weights);
    fill(lay.w2..lay.b2 + hidden, hidden, hidden, &mut rng, &mut weights);
    fill(lay.w3..lay.b3 + 1, hidden, 1, &mut rng, &mut weights);
    let inv_min = 1.0 / 80.0;
    let inv_max = 1.0 / 0.1;
    // logit of the sigmoid level that maps to INIT_DEPTH
    let target = (1.0 / INIT_DEPTH - inv_min) / (inv_max - inv_min);
    weights[lay.b3] = math::ln(target / (1.0 - target));
    DepthNet {
        hidden,
        weights,
        inv_min,
        inv_max,
        seed,
    }
}

fn weight_hash(weights: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in weights {
        h = (h ^ w.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// Activations retained for one pyramid level.
struct ScaleCache {
    width: usize,
    height: usize,
    inputs: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    sig: Vec<f64>,
}

/// Activation record binding a forward pass to the weights it used.
pub struct ForwardCache {
    scales: Vec<ScaleCache>,
    weight_hash: u64,
}

/// Forward outputs: inverse-depth stack, hidden-feature stack, and the
/// cache for [`backward`].
pub struct ForwardPass {
    pub depth_stack: FeatureStack,
    pub hidden_stack: FeatureStack,
    pub cache: ForwardCache,
}

#[inline]
fn clamp_coord(v: isize, max: usize) -> usize {
    v.clamp(0, max as isize - 1) as usize
}

/// Evaluate the network over `scales` pyramid levels of `image`.
///
/// Level `s` sees the grayscale image box-downsampled `s` times; patches
/// clamp at borders. The hidden stack carries the second hidden layer's
/// activations.
pub fn forward(net: &DepthNet, image: &PixelGrid, scales: usize) -> ForwardPass {
    assert!(scales >= 1);
    let h = net.hidden;
    let lay = layout(h);
    let w = &net.weights;
    let range = net.inv_max - net.inv_min;

    let mut gray = image.grayscale();
    let mut depth_levels = Vec::with_capacity(scales);
    let mut hidden_levels = Vec::with_capacity(scales);
    let mut caches = Vec::with_capacity(scales);

    for s in 0..scales {
        if s > 0 {
            gray = gray.downsample2x();
        }
        let (gw, gh, _) = gray.shape();
        let n = gw * gh;
        let mut inputs = vec![0.0; n * INPUT_DIM];
        let mut a1 = vec![0.0; n * h];
        let mut a2 = vec![0.0; n * h];
        let mut sig = vec![0.0; n];
        let mut depth = PixelGrid::new(gw, gh, 1);
        let mut hidden_grid = PixelGrid::new(gw, gh, h);

        for y in 0..gh {
            for x in 0..gw {
                let pix = y * gw + x;
                let xin = &mut inputs[pix * INPUT_DIM..(pix + 1) * INPUT_DIM];
                xin[0] = x as f64 / gw as f64;
                xin[1] = y as f64 / gh as f64;
                let mut k = 2;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let sx = clamp_coord(x as isize + dx, gw);
                        let sy = clamp_coord(y as isize + dy, gh);
                        xin[k] = gray.get(sx, sy, 0);
                        k += 1;
                    }
                }

                let pa1 = &mut a1[pix * h..(pix + 1) * h];
                for j in 0..h {
                    let mut z = w[lay.b1 + j];
                    let row = &w[lay.w1 + j * INPUT_DIM..lay.w1 + (j + 1) * INPUT_DIM];
                    for i in 0..INPUT_DIM {
                        z += row[i] * xin[i];
                    }
                    pa1[j] = math::tanh(z);
                }
                let pa2 = &mut a2[pix * h..(pix + 1) * h];
                for j in 0..h {
                    let mut z = w[lay.b2 + j];
                    let row = &w[lay.w2 + j * h..lay.w2 + (j + 1) * h];
                    for i in 0..h {
                        z += row[i] * pa1[i];
                    }
                    pa2[j] = math::tanh(z);
                }
                let mut o = w[lay.b3];
                for j in 0..h {
                    o += w[lay.w3 + j] * pa2[j];
                }
                let sg = math::sigmoid(o);
                sig[pix] = sg;
                depth.set(x, y, 0, net.inv_min + range * sg);
                for j in 0..h {
                    hidden_grid.set(x, y, j, pa2[j]);
                }
            }
        }
        depth_levels.push(depth);
        hidden_levels.push(hidden_grid);
        caches.push(ScaleCache {
            width: gw,
            height: gh,
            inputs,
            a1,
            a2,
            sig,
        });
    }

    ForwardPass {
        depth_stack: FeatureStack::new(depth_levels).expect("pyramid halving holds"),
        hidden_stack: FeatureStack::new(hidden_levels).expect("pyramid halving holds"),
        cache: ForwardCache {
            scales: caches,
            weight_hash: weight_hash(&net.weights),
        },
    }
}

/// Exact reverse-mode gradient over all weights.
///
/// `depth_upstream[s]` / `hidden_upstream[s]` carry d(loss)/d(output) for
/// pyramid level `s`; `None` levels contribute nothing. Fails if the
/// cache was built from different weights.
pub fn backward(
    net: &DepthNet,
    cache: &ForwardCache,
    depth_upstream: &[Option<&PixelGrid>],
    hidden_upstream: &[Option<&PixelGrid>],
) -> CoreResult<GradientVector> {
    if cache.weight_hash != weight_hash(&net.weights) {
        return Err(CoreError::StaleCache);
    }
    let h = net.hidden;
    let lay = layout(h);
    let w = &net.weights;
    let range = net.inv_max - net.inv_min;
    let mut grad = vec![0.0; net.weights.len()];
    let mut ga2 = vec![0.0; h];
    let mut gz2 = vec![0.0; h];
    let mut ga1 = vec![0.0; h];

    for (s, sc) in cache.scales.iter().enumerate() {
        let dep_up = depth_upstream.get(s).copied().flatten();
        let hid_up = hidden_upstream.get(s).copied().flatten();
        if dep_up.is_none() && hid_up.is_none() {
            continue;
        }
        if let Some(g) = dep_up {
            debug_assert_eq!(g.shape(), (sc.width, sc.height, 1));
        }
        if let Some(g) = hid_up {
            debug_assert_eq!(g.shape(), (sc.width, sc.height, h));
        }
        for y in 0..sc.height {
            for x in 0..sc.width {
                let pix = y * sc.width + x;
                let gd = dep_up.map_or(0.0, |g| g.get(x, y, 0));
                let has_hidden = hid_up.is_some();
                if gd == 0.0 && !has_hidden {
                    continue;
                }
                let pa1 = &sc.a1[pix * h..(pix + 1) * h];
                let pa2 = &sc.a2[pix * h..(pix + 1) * h];
                let xin = &sc.inputs[pix * INPUT_DIM..(pix + 1) * INPUT_DIM];

                let sg = sc.sig[pix];
                let go = gd * range * sg * (1.0 - sg);
                grad[lay.b3] += go;
                for j in 0..h {
                    grad[lay.w3 + j] += pa2[j] * go;
                    ga2[j] = w[lay.w3 + j] * go;
                }
                if let Some(gh) = hid_up {
                    for (j, g) in ga2.iter_mut().enumerate() {
                        *g += gh.get(x, y, j);
                    }
                }
                for j in 0..h {
                    gz2[j] = ga2[j] * (1.0 - pa2[j] * pa2[j]);
                }
                for j in 0..h {
                    let gz = gz2[j];
                    if gz == 0.0 {
                        continue;
                    }
                    grad[lay.b2 + j] += gz;
                    let row = lay.w2 + j * h;
                    for i in 0..h {
                        grad[row + i] += gz * pa1[i];
                    }
                }
                for i in 0..h {
                    let mut acc = 0.0;
                    for j in 0..h {
                        acc += w[lay.w2 + j * h + i] * gz2[j];
                    }
                    ga1[i] = acc;
                }
                for j in 0..h {
                    let gz = ga1[j] * (1.0 - pa1[j] * pa1[j]);
                    if gz == 0.0 {
                        continue;
                    }
                    grad[lay.b1 + j] += gz;
                    let row = lay.w1 + j * INPUT_DIM;
                    for i in 0..INPUT_DIM {
                        grad[row + i] += gz * xin[i];
                    }
                }
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(w: usize, h: usize, seed: u64) -> PixelGrid {
        let mut rng = Rng::new(seed);
        PixelGrid::from_vec(w, h, 3, (0..w * h * 3).map(|_| rng.next_f64()).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_counts_match() {
        let a = init_weights(42, 32);
        let b = init_weights(42, 32);
        assert_eq!(a.weights, b.weights);
        let c = init_weights(43, 32);
        assert_ne!(a.weights, c.weights);
        assert_eq!(a.weights.len(), 1473);
        assert_eq!(weight_count(32), 1473);
    }

    #[test]
    fn forward_outputs_stay_in_range() {
        let net = init_weights(7, 16);
        let img = test_image(16, 16, 1);
        let pass = forward(&net, &img, 3);
        for level in pass.depth_stack.iter() {
            for &v in level.data() {
                assert!(v > net.inv_min && v < net.inv_max);
            }
        }
        // Extreme weights still respect the sigmoid bound.
        let mut wild = init_weights(7, 16);
        for w in wild.weights.iter_mut() {
            *w *= 1e4;
        }
        let pass = forward(&wild, &img, 1);
        for &v in pass.depth_stack.level(0).data() {
            assert!(v >= net.inv_min && v <= net.inv_max);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let net = init_weights(3, 24);
        let img = test_image(12, 10, 2);
        let a = forward(&net, &img, 2);
        let b = forward(&net, &img, 2);
        for s in 0..2 {
            assert_eq!(a.depth_stack.level(s).data(), b.depth_stack.level(s).data());
            assert_eq!(a.hidden_stack.level(s).data(), b.hidden_stack.level(s).data());
        }
    }

    #[test]
    fn constant_image_varies_only_with_position() {
        let net = init_weights(11, 16);
        let img = PixelGrid::constant(12, 12, 3, 0.4);
        let pass = forward(&net, &img, 1);
        let d = pass.depth_stack.level(0);
        // Same (u, v) -> same output is trivial; different rows must be
        // able to differ (the position inputs are live).
        let mut distinct = false;
        for y in 1..12 {
            if d.get(3, y, 0) != d.get(3, 0, 0) {
                distinct = true;
            }
        }
        assert!(distinct, "position inputs appear dead");
    }

    #[test]
    fn receptive_field_is_the_patch() {
        let net = init_weights(5, 16);
        let img = test_image(14, 12, 3);
        let mut bumped = img.clone();
        for c in 0..3 {
            bumped.set(6, 5, c, (img.get(6, 5, c) + 0.31).min(1.0));
        }
        let a = forward(&net, &img, 1);
        let b = forward(&net, &bumped, 1);
        let da = a.depth_stack.level(0);
        let db = b.depth_stack.level(0);
        for y in 0..12usize {
            for x in 0..14usize {
                let covered = x.abs_diff(6) <= 1 && y.abs_diff(5) <= 1;
                let changed = da.get(x, y, 0) != db.get(x, y, 0);
                assert_eq!(changed, covered, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let net = init_weights(9, 8);
        let img = test_image(8, 8, 3);
        let pass = forward(&net, &img, 2);
        let zeros0 = PixelGrid::new(8, 8, 1);
        let grad = backward(&net, &pass.cache, &[Some(&zeros0), None], &[None, None]).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let net = init_weights(13, 8);
        let img = test_image(8, 8, 4);
        let pass = forward(&net, &img, 1);
        let mut rng = Rng::new(50);
        let g1 = PixelGrid::from_vec(8, 8, 1, (0..64).map(|_| rng.next_f64() - 0.5).collect())
            .unwrap();
        let g2 = PixelGrid::from_vec(8, 8, 1, (0..64).map(|_| rng.next_f64() - 0.5).collect())
            .unwrap();
        let mut g12 = g1.clone();
        g12.accumulate(&g2, 1.0).unwrap();
        let b1 = backward(&net, &pass.cache, &[Some(&g1)], &[None]).unwrap();
        let b2 = backward(&net, &pass.cache, &[Some(&g2)], &[None]).unwrap();
        let b12 = backward(&net, &pass.cache, &[Some(&g12)], &[None]).unwrap();
        for i in 0..b12.len() {
            assert!((b12[i] - (b1[i] + b2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = init_weights(17, 8);
        let img = test_image(8, 8, 5);
        let pass = forward(&net, &img, 1);
        net.weights[0] += 0.1;
        let zeros = PixelGrid::new(8, 8, 1);
        assert_eq!(
            backward(&net, &pass.cache, &[Some(&zeros)], &[None]).unwrap_err(),
            CoreError::StaleCache
        );
    }

    #[test]
    fn backward_matches_finite_differences_over_all_weights() {
        let hidden = 6;
        let net = init_weights(19, hidden);
        let img = test_image(8, 8, 6);
        let scales = 2;
        let pass = forward(&net, &img, scales);
        let mut rng = Rng::new(60);
        let dep_up: Vec<PixelGrid> = (0..scales)
            .map(|s| {
                let w = 8 >> s;
                PixelGrid::from_vec(w, w, 1, (0..w * w).map(|_| rng.next_f64() - 0.5).collect())
                    .unwrap()
            })
            .collect();
        let hid_up: Vec<PixelGrid> = (0..scales)
            .map(|s| {
                let w = 8 >> s;
                PixelGrid::from_vec(
                    w,
                    w,
                    hidden,
                    (0..w * w * hidden).map(|_| 0.1 * (rng.next_f64() - 0.5)).collect(),
                )
                .unwrap()
            })
            .collect();
        let dep_refs: Vec<Option<&PixelGrid>> = dep_up.iter().map(Some).collect();
        let hid_refs: Vec<Option<&PixelGrid>> = hid_up.iter().map(Some).collect();
        let grad = backward(&net, &pass.cache, &dep_refs, &hid_refs).unwrap();

        let objective = |net: &DepthNet| -> f64 {
            let pass = forward(net, &img, scales);
            let mut acc = 0.0;
            for s in 0..scales {
                acc += pass
                    .depth_stack
                    .level(s)
                    .data()
                    .iter()
                    .zip(dep_up[s].data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                acc += pass
                    .hidden_stack
                    .level(s)
                    .data()
                    .iter()
                    .zip(hid_up[s].data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
            acc
        };

        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..net.weights.len() {
            let mut up = net.clone();
            up.weights[i] += h;
            let mut dn = net.clone();
            dn.weights[i] -= h;
            let fd = (objective(&up) - objective(&dn)) / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max((fd - grad[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }
}
