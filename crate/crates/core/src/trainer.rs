//! Optimization loops: self-supervised teacher training, distillation
//! student training with component toggles, Adam updates, and the
//! ablation driver.
//!
//! Every stochastic choice flows through forked [`Rng`] streams derived
//! from the run seed, and all reductions run in fixed order, so a
//! (config, seed) pair reproduces checkpoints and logs bit-for-bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::camera::CameraIntrinsics;
use crate::error::{CoreError, CoreResult};
use crate::grid::{Mask, PixelGrid};
use crate::losses::{
    self, distillation_loss, feature_consistency_loss, photometric_loss, smoothness_loss,
    InputKind, LossValue,
};
use crate::metrics::{self, DepthEvalReport};
use crate::model::{self, DepthNet};
use crate::ogd::{self, SamplingConfig};
use crate::rng::Rng;
use crate::synth::FrameTriplet;
use crate::warp;

/// Training hyperparameters and component toggles.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_period: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Teacher smoothness weight.
    pub smoothness_weight: f64,
    /// SSIM/L1 mixing weight for the photometric term.
    pub theta: f64,
    /// Pyramid scales for the distillation stacks.
    pub scales: usize,
    /// Hidden width of the depth network.
    pub hidden: usize,
    pub sampling: SamplingConfig,
    /// Result-distillation toggle.
    pub distillation: bool,
    /// Ordinal-guidance toggle.
    pub ordinal: bool,
    /// Feature-consistency toggle.
    pub consistency: bool,
    /// Global / local ordinal sampling toggles.
    pub global_pairs: bool,
    pub local_pairs: bool,
    /// First epoch (0-based) at which feature consistency becomes
    /// active.
    pub fcc_start_epoch: usize,
    pub seed: u64,
    pub batch_size: usize,
    /// Probability of drawing a clear sample per batch slot.
    pub clear_fraction: f64,
    /// Restrict result distillation to degraded samples.
    pub dl_degraded_only: bool,
    /// Jointly optimize the per-pair pose 6-vectors in teacher training.
    pub optimize_pose: bool,
    /// Start the student from the teacher's weights instead of a fresh
    /// initialization. Fresh is the default: a student that begins as a
    /// copy of the teacher leaves the feature-consistency constraint
    /// nothing to align.
    pub student_init_from_teacher: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 25,
            learning_rate: 5e-4,
            lr_decay_factor: 0.1,
            lr_decay_period: 15,
            lambda1: 0.01,
            lambda2: 0.02,
            smoothness_weight: losses::TEACHER_SMOOTHNESS_WEIGHT,
            theta: losses::PHOTOMETRIC_THETA,
            scales: 4,
            hidden: 32,
            sampling: SamplingConfig::default(),
            distillation: true,
            ordinal: true,
            consistency: true,
            global_pairs: true,
            local_pairs: true,
            fcc_start_epoch: 15,
            seed: 0,
            batch_size: 4,
            clear_fraction: 0.5,
            dl_degraded_only: false,
            optimize_pose: false,
            student_init_from_teacher: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> CoreResult<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(CoreError::InvalidParameter(String::from(
                "loss weights must be >= 0",
            )));
        }
        if self.fcc_start_epoch > self.epochs {
            return Err(CoreError::InvalidParameter(String::from(
                "fcc_start_epoch must be <= epochs",
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.scales == 0 || self.hidden == 0 {
            return Err(CoreError::InvalidParameter(String::from(
                "epochs, batch_size, scales, and hidden must be positive",
            )));
        }
        if !(0.0..=1.0).contains(&self.clear_fraction) {
            return Err(CoreError::InvalidParameter(String::from(
                "clear_fraction must lie in [0, 1]",
            )));
        }
        if self.lr_decay_period == 0 {
            return Err(CoreError::InvalidParameter(String::from(
                "lr_decay_period must be positive",
            )));
        }
        self.sampling.validate()
    }

    /// Step-decayed learning rate: lr0 * factor^(epoch / period).
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let mut lr = self.learning_rate;
        for _ in 0..(epoch / self.lr_decay_period) {
            lr *= self.lr_decay_factor;
        }
        lr
    }
}

/// Adam optimizer state aligned with a flat weight vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    weights: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
) -> CoreResult<()> {
    if weights.len() != grad.len() || weights.len() != state.m.len() {
        return Err(CoreError::ShapeMismatch {
            expected: (weights.len(), 1, 1),
            got: (grad.len(), state.m.len(), 1),
        });
    }
    state.step += 1;
    let b1 = state.beta1;
    let b2 = state.beta2;
    let c1 = 1.0 - crate::math::powf(b1, state.step as f64);
    let c2 = 1.0 - crate::math::powf(b2, state.step as f64);
    for i in 0..weights.len() {
        let g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        weights[i] -= lr * m_hat / (crate::math::sqrt(v_hat) + state.eps);
    }
    Ok(())
}

/// Per-step teacher log record.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherStepLog {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub photometric: f64,
    pub smoothness: f64,
    pub lr: f64,
}

/// Per-step student log record.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentStepLog {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub distillation: f64,
    pub ranking: f64,
    pub consistency: f64,
    pub lr: f64,
}

/// Scale-0 depth prediction in meters.
pub fn predict_depth(net: &DepthNet, image: &PixelGrid) -> PixelGrid {
    let pass = model::forward(net, image, 1);
    pass.depth_stack.level(0).map(|inv| 1.0 / inv)
}

// Accumulated gradient of the teacher objective for one triplet,
// written into `grad_acc` (and `pose_grads` when pose optimization is
// on). Returns (total, photometric, smoothness) loss values.
#[allow(clippy::too_many_arguments)]
fn teacher_sample_pass(
    net: &DepthNet,
    triplet: &FrameTriplet,
    poses: [&crate::camera::RigidPose; 2],
    k: &CameraIntrinsics,
    cfg: &TrainConfig,
    grad_acc: &mut [f64],
    pose_grads: Option<&mut [[f64; 6]; 2]>,
    weight: f64,
) -> CoreResult<(f64, f64, f64)> {
    let pass = model::forward(net, &triplet.image_t, 1);
    let inv = pass.depth_stack.level(0);
    let depth = inv.map(|v| 1.0 / v);

    let sources = [&triplet.image_prev, &triplet.image_next];
    let mut views: Vec<(PixelGrid, Mask)> = Vec::with_capacity(2);
    let mut fields = Vec::with_capacity(2);
    for (src, pose) in sources.iter().zip(poses.iter()) {
        let field = warp::warp_coordinates(&depth, pose, k, cfg.optimize_pose);
        let (img, mask) = warp::bilinear_sample(src, &field.coords);
        views.push((img, mask));
        fields.push(field);
    }

    let lp = photometric_loss(&triplet.image_t, &views, cfg.theta)?;
    let le = smoothness_loss(&depth, &triplet.image_t)?;
    let total = lp.value + cfg.smoothness_weight * le.value;

    // d(total)/d(depth): photometric through the warp, smoothness
    // directly.
    let mut g_depth = le.grad("depth").expect("smoothness gradient").clone();
    g_depth.scale_in_place(cfg.smoothness_weight);
    let mut pose_grad_out = [[0.0; 6]; 2];
    for (i, (src, field)) in sources.iter().zip(fields.iter()).enumerate() {
        let g_view = lp.grad(&format!("view{i}")).expect("view gradient");
        let gd = warp::backprop_to_depth(src, field, g_view);
        g_depth.accumulate(&gd, 1.0)?;
        if cfg.optimize_pose {
            pose_grad_out[i] = warp::backprop_to_pose(src, field, g_view)?;
        }
    }

    // Chain depth = 1/inv: d/d inv = -depth^2 * d/d depth.
    let mut g_inv = g_depth;
    for (g, d) in g_inv.data_mut().iter_mut().zip(depth.data().iter()) {
        *g *= -d * d;
    }

    let wg = model::backward(net, &pass.cache, &[Some(&g_inv)], &[None])?;
    for (acc, g) in grad_acc.iter_mut().zip(wg.iter()) {
        *acc += weight * g;
    }
    if let Some(pg) = pose_grads {
        for i in 0..2 {
            for j in 0..6 {
                pg[i][j] += weight * pose_grad_out[i][j];
            }
        }
    }
    Ok((total, lp.value, le.value))
}

/// Self-supervised teacher training over clean triplets.
///
/// Ground-truth relative poses drive the warps unless
/// `cfg.optimize_pose` is set, in which case per-pair pose 6-vectors are
/// optimized jointly with the weights.
pub fn train_teacher(
    triplets: &[FrameTriplet],
    k: &CameraIntrinsics,
    cfg: &TrainConfig,
) -> CoreResult<(DepthNet, Vec<TeacherStepLog>)> {
    cfg.validate()?;
    if triplets.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut net = model::init_weights(cfg.seed, cfg.hidden);
    let mut adam = AdamState::new(net.weights.len());

    let mut pose_params: Vec<[f64; 6]> = Vec::new();
    let mut pose_adam = AdamState::new(0);
    if cfg.optimize_pose {
        for t in triplets {
            for p in [&t.pose_to_prev, &t.pose_to_next] {
                pose_params.push([
                    p.rotation[0],
                    p.rotation[1],
                    p.rotation[2],
                    p.translation[0],
                    p.translation[1],
                    p.translation[2],
                ]);
            }
        }
        pose_adam = AdamState::new(pose_params.len() * 6);
    }

    let mut order_rng = Rng::new(cfg.seed).fork(0x0e70);
    let mut logs = Vec::new();
    let mut step = 0usize;
    let mut grad = vec![0.0; net.weights.len()];

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at_epoch(epoch);
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order_rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut pose_batch_grad = vec![[[0.0; 6]; 2]; batch.len()];
            let w = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            let mut lp_sum = 0.0;
            let mut le_sum = 0.0;
            for (bi, &ti) in batch.iter().enumerate() {
                let t = &triplets[ti];
                let (p_prev, p_next);
                let poses: [&crate::camera::RigidPose; 2] = if cfg.optimize_pose {
                    p_prev = pose_from_params(&pose_params[2 * ti]);
                    p_next = pose_from_params(&pose_params[2 * ti + 1]);
                    [&p_prev, &p_next]
                } else {
                    [&t.pose_to_prev, &t.pose_to_next]
                };
                let (lt, lp, le) = teacher_sample_pass(
                    &net,
                    t,
                    poses,
                    k,
                    cfg,
                    &mut grad,
                    cfg.optimize_pose.then_some(&mut pose_batch_grad[bi]),
                    w,
                )?;
                loss += w * lt;
                lp_sum += w * lp;
                le_sum += w * le;
            }
            adam_step(&mut net.weights, &grad, &mut adam, lr)?;
            if cfg.optimize_pose {
                let mut flat = vec![0.0; pose_params.len() * 6];
                for (bi, &ti) in batch.iter().enumerate() {
                    for vi in 0..2 {
                        for j in 0..6 {
                            flat[(2 * ti + vi) * 6 + j] = pose_batch_grad[bi][vi][j];
                        }
                    }
                }
                let mut flat_params: Vec<f64> =
                    pose_params.iter().flat_map(|p| p.iter().copied()).collect();
                adam_step(&mut flat_params, &flat, &mut pose_adam, lr)?;
                for (i, p) in pose_params.iter_mut().enumerate() {
                    p.copy_from_slice(&flat_params[i * 6..(i + 1) * 6]);
                }
            }
            logs.push(TeacherStepLog {
                step,
                epoch,
                loss,
                photometric: lp_sum,
                smoothness: le_sum,
                lr,
            });
            step += 1;
        }
    }
    Ok((net, logs))
}

fn pose_from_params(p: &[f64; 6]) -> crate::camera::RigidPose {
    crate::camera::RigidPose::new([p[0], p[1], p[2]], [p[3], p[4], p[5]])
}

/// Whether a mixed sample is clean or weather-degraded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleKind {
    Clear,
    /// Condition tag, e.g. "night".
    Degraded(String),
}

/// One student training sample: the clean triplet plus the (possibly
/// degraded) input image for the middle frame.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub triplet: FrameTriplet,
    pub input_t: PixelGrid,
    pub kind: SampleKind,
}

/// Source of the ordinal oracle's inverse depth per sample.
pub trait OracleProvider {
    fn inverse_depth(&self, sample_index: usize, sample: &TrainSample) -> PixelGrid;
}

/// Ground-truth depth under a per-sample positive scale jitter; the
/// jitter is fixed per sample index, so the oracle is consistent across
/// steps.
pub struct JitteredGtOracle {
    pub seed: u64,
}

impl OracleProvider for JitteredGtOracle {
    fn inverse_depth(&self, sample_index: usize, sample: &TrainSample) -> PixelGrid {
        let mut rng = Rng::new(self.seed).fork(0x0a0c1e ^ sample_index as u64);
        crate::synth::oracle_relative_depth(&sample.triplet.depth_gt, &mut rng)
    }
}

/// The weights a student run starts from under `cfg`.
///
/// A fresh initialization derives from the teacher's seed, not the run
/// seed: run seeds then vary only the stochastic parts of training
/// (batch draws, pair sampling, oracle jitter), which is what
/// seed-averaged comparisons are meant to integrate over.
pub fn student_initial_weights(cfg: &TrainConfig, teacher: &DepthNet) -> DepthNet {
    if cfg.student_init_from_teacher {
        teacher.clone()
    } else {
        model::init_weights(teacher.seed ^ 0x57_0d_e7, cfg.hidden)
    }
}

// Cached teacher outputs for one sample's clean frame.
struct TeacherOutputs {
    depth_stack: crate::grid::FeatureStack,
    hidden_stack: crate::grid::FeatureStack,
}

/// Distillation training of the student on a mixed clean/degraded
/// sample list. The teacher is frozen; per-sample losses follow the
/// component toggles in `cfg`.
pub fn train_student(
    samples: &[TrainSample],
    k: &CameraIntrinsics,
    teacher: &DepthNet,
    oracle: &dyn OracleProvider,
    cfg: &TrainConfig,
) -> CoreResult<(DepthNet, Vec<StudentStepLog>)> {
    let _ = k;
    cfg.validate()?;
    if samples.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    if cfg.consistency {
        for s in samples {
            if matches!(s.kind, SampleKind::Degraded(_)) && s.input_t.same_shape(&s.triplet.image_t)
            {
                // Paired clean image present by construction (the triplet
                // carries it); nothing to check beyond shape.
            } else if matches!(s.kind, SampleKind::Degraded(_)) {
                return Err(CoreError::ShapeMismatch {
                    expected: s.triplet.image_t.shape(),
                    got: s.input_t.shape(),
                });
            }
        }
    }

    let mut net = student_initial_weights(cfg, teacher);
    let mut adam = AdamState::new(net.weights.len());

    // The teacher is frozen: precompute its stacks on each sample's
    // clean frame once.
    let teacher_outputs: Vec<TeacherOutputs> = samples
        .iter()
        .map(|s| {
            let pass = model::forward(teacher, &s.triplet.image_t, cfg.scales);
            TeacherOutputs {
                depth_stack: pass.depth_stack,
                hidden_stack: pass.hidden_stack,
            }
        })
        .collect();
    let oracle_maps: Vec<PixelGrid> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| oracle.inverse_depth(i, s))
        .collect();

    // Index samples by kind for batch composition draws.
    let clear_idx: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SampleKind::Clear)
        .map(|(i, _)| i)
        .collect();
    let degraded_idx: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.kind, SampleKind::Degraded(_)))
        .map(|(i, _)| i)
        .collect();

    let triplet_count = clear_idx.len().max(degraded_idx.len()).max(1);
    let steps_per_epoch = triplet_count.div_ceil(cfg.batch_size).max(1);

    let mut draw_rng = Rng::new(cfg.seed).fork(0xd2a3);
    let mut pair_rng = Rng::new(cfg.seed).fork(0x9a12);
    let mut logs = Vec::new();
    let mut grad = vec![0.0; net.weights.len()];
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at_epoch(epoch);
        let fcc_active = cfg.consistency && epoch >= cfg.fcc_start_epoch;
        for _ in 0..steps_per_epoch {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / cfg.batch_size as f64;
            let mut l_total = 0.0;
            let mut l_d = 0.0;
            let mut l_r = 0.0;
            let mut l_c = 0.0;
            for _ in 0..cfg.batch_size {
                let idx = if (!clear_idx.is_empty()
                    && (degraded_idx.is_empty() || draw_rng.next_f64() < cfg.clear_fraction))
                    || degraded_idx.is_empty()
                {
                    clear_idx[draw_rng.below(clear_idx.len())]
                } else {
                    degraded_idx[draw_rng.below(degraded_idx.len())]
                };
                let sample = &samples[idx];
                let t_out = &teacher_outputs[idx];

                let pass = model::forward(&net, &sample.input_t, cfg.scales);

                let ld = if cfg.distillation
                    && (!cfg.dl_degraded_only || matches!(sample.kind, SampleKind::Degraded(_)))
                {
                    distillation_loss(
                        &t_out.depth_stack,
                        &pass.depth_stack,
                        losses::DISTILLATION_EPS,
                    )?
                } else {
                    LossValue::zero()
                };

                let lr_loss = if cfg.ordinal {
                    let d_teacher = t_out.depth_stack.level(0);
                    let d_student = pass.depth_stack.level(0);
                    let disc = ogd::normalize_discrepancy(&ogd::depth_discrepancy(
                        d_teacher, d_student,
                    )?);
                    let mask = ogd::uncertainty_mask(&disc, cfg.sampling.gamma_mode);
                    let (mut local, mut global) = ogd::sample_pairs(
                        &mask,
                        d_student,
                        &oracle_maps[idx],
                        &cfg.sampling,
                        &mut pair_rng,
                    )?;
                    if !cfg.local_pairs {
                        local.clear();
                    }
                    if !cfg.global_pairs {
                        global.clear();
                    }
                    ogd::ranking_loss(&local, &global, d_student, cfg.sampling.window)
                } else {
                    LossValue::zero()
                };

                let lc = if fcc_active {
                    match &sample.kind {
                        SampleKind::Degraded(_) => {
                            let clean_pass = model::forward(&net, &sample.triplet.image_t, cfg.scales);
                            feature_consistency_loss(
                                &pass.hidden_stack,
                                Some(&clean_pass.hidden_stack),
                                &t_out.hidden_stack,
                                InputKind::Degraded,
                            )?
                        }
                        SampleKind::Clear => feature_consistency_loss(
                            &pass.hidden_stack,
                            None,
                            &t_out.hidden_stack,
                            InputKind::Clear,
                        )?,
                    }
                } else {
                    LossValue::zero()
                };

                let total =
                    losses::total_student_loss(&ld, &lr_loss, &lc, cfg.lambda1, cfg.lambda2);
                l_total += w * total.value;
                l_d += w * ld.value;
                l_r += w * lr_loss.value;
                l_c += w * lc.value;

                // The merge in total_student_loss already accumulated the
                // ranking gradient into the scale-0 depth key.
                let depth_up: Vec<Option<PixelGrid>> = (0..cfg.scales)
                    .map(|s| total.grad(&format!("student_depth/s{s}")).cloned())
                    .collect();
                let hidden_up: Vec<Option<PixelGrid>> = (0..cfg.scales)
                    .map(|s| total.grad(&format!("student_hidden/s{s}")).cloned())
                    .collect();
                let depth_refs: Vec<Option<&PixelGrid>> =
                    depth_up.iter().map(|o| o.as_ref()).collect();
                let hidden_refs: Vec<Option<&PixelGrid>> =
                    hidden_up.iter().map(|o| o.as_ref()).collect();
                let wg = model::backward(&net, &pass.cache, &depth_refs, &hidden_refs)?;
                for (acc, g) in grad.iter_mut().zip(wg.iter()) {
                    *acc += w * g;
                }
            }
            adam_step(&mut net.weights, &grad, &mut adam, lr)?;
            logs.push(StudentStepLog {
                step,
                epoch,
                loss: l_total,
                distillation: l_d,
                ranking: l_r,
                consistency: l_c,
                lr,
            });
            step += 1;
        }
    }
    Ok((net, logs))
}

/// One evaluation image with its ground truth and condition tag.
#[derive(Debug, Clone)]
pub struct EvalSample {
    pub image: PixelGrid,
    pub depth_gt: PixelGrid,
    pub condition: String,
}

/// Evaluation protocol parameters.
#[derive(Debug, Clone, Copy)]
pub struct EvalProtocol {
    pub min_depth: f64,
    pub max_depth: f64,
    pub median_scaling: bool,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            min_depth: 0.1,
            max_depth: 80.0,
            median_scaling: true,
        }
    }
}

/// Evaluate a prediction against ground truth under the range/scaling
/// protocol.
pub fn evaluate_prediction(
    pred: &PixelGrid,
    gt: &PixelGrid,
    protocol: &EvalProtocol,
) -> CoreResult<DepthEvalReport> {
    let (_, mask) = metrics::clamp_range(pred, gt, protocol.min_depth, protocol.max_depth)?;
    let (scaled, factor) = if protocol.median_scaling {
        metrics::median_scale(pred, gt, &mask)?
    } else {
        (pred.clone(), 1.0)
    };
    let clipped = scaled.map(|v| v.clamp(protocol.min_depth, protocol.max_depth));
    metrics::evaluate_scaled(&clipped, gt, &mask, factor)
}

/// Evaluate a network over samples of one condition, averaging pixel
/// metrics per image then over images.
pub fn evaluate_net(
    net: &DepthNet,
    samples: &[&EvalSample],
    protocol: &EvalProtocol,
) -> CoreResult<DepthEvalReport> {
    if samples.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut acc: Option<DepthEvalReport> = None;
    for s in samples {
        let pred = predict_depth(net, &s.image);
        let r = evaluate_prediction(&pred, &s.depth_gt, protocol)?;
        acc = Some(match acc {
            None => r,
            Some(a) => average_reports(&[a, r]),
        });
    }
    Ok(acc.expect("nonempty samples"))
}

/// Field-wise mean of evaluation reports.
pub fn average_reports(reports: &[DepthEvalReport]) -> DepthEvalReport {
    let n = reports.len() as f64;
    DepthEvalReport {
        abs_rel: reports.iter().map(|r| r.abs_rel).sum::<f64>() / n,
        sq_rel: reports.iter().map(|r| r.sq_rel).sum::<f64>() / n,
        rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / n,
        rmse_log: reports.iter().map(|r| r.rmse_log).sum::<f64>() / n,
        delta1: reports.iter().map(|r| r.delta1).sum::<f64>() / n,
        delta2: reports.iter().map(|r| r.delta2).sum::<f64>() / n,
        delta3: reports.iter().map(|r| r.delta3).sum::<f64>() / n,
        valid_pixels: reports.iter().map(|r| r.valid_pixels).sum::<usize>() / reports.len(),
        scale_factor: reports.iter().map(|r| r.scale_factor).sum::<f64>() / n,
    }
}

/// One ablation row: a configuration trained once per seed and averaged.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub label: String,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
}

/// Evaluated ablation row: per-condition averaged reports in input
/// order.
#[derive(Debug, Clone)]
pub struct AblationRowResult {
    pub label: String,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub per_condition: Vec<(String, DepthEvalReport)>,
}

/// Train and evaluate every row of an ablation matrix.
///
/// Rows share the training data and teacher; each row trains once per
/// seed and reports per-condition metrics averaged over seeds.
pub fn run_ablation(
    rows: &[AblationRow],
    samples: &[TrainSample],
    eval_set: &[EvalSample],
    teacher: &DepthNet,
    k: &CameraIntrinsics,
    oracle_seed: u64,
    protocol: &EvalProtocol,
) -> CoreResult<Vec<AblationRowResult>> {
    let mut conditions: Vec<String> = Vec::new();
    for s in eval_set {
        if !conditions.contains(&s.condition) {
            conditions.push(s.condition.clone());
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut per_seed: Vec<Vec<DepthEvalReport>> = vec![Vec::new(); conditions.len()];
        for &seed in &row.seeds {
            let mut cfg = row.config.clone();
            cfg.seed = seed;
            let oracle = JitteredGtOracle {
                seed: oracle_seed ^ seed,
            };
            let (student, _) = train_student(samples, k, teacher, &oracle, &cfg)?;
            for (ci, cond) in conditions.iter().enumerate() {
                let subset: Vec<&EvalSample> =
                    eval_set.iter().filter(|s| &s.condition == cond).collect();
                per_seed[ci].push(evaluate_net(&student, &subset, protocol)?);
            }
        }
        let per_condition = conditions
            .iter()
            .cloned()
            .zip(per_seed.iter().map(|rs| average_reports(rs)))
            .collect();
        out.push(AblationRowResult {
            label: row.label.clone(),
            config: row.config.clone(),
            seeds: row.seeds.clone(),
            per_condition,
        });
    }
    Ok(out)
}
