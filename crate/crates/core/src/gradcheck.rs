//! Central finite-difference verification of every analytic gradient
//! path.
//!
//! Each check builds a seeded random instance, evaluates the analytic
//! gradient, and compares against central differences, skipping points
//! where the objective is not differentiable (absolute-value ties,
//! per-pixel-minimum ties, bilinear cell boundaries). The relative
//! error uses a small floor so near-zero gradients are compared
//! absolutely.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::camera::{CameraIntrinsics, RigidPose};
use crate::grid::{FeatureStack, Mask, PixelGrid};
use crate::losses;
use crate::math;
use crate::model;
use crate::ogd;
use crate::rng::Rng;
use crate::warp;

/// Pass threshold on the relative error.
pub const TOLERANCE: f64 = 1e-4;
// Floor for the relative-error denominator: differences below this are
// dominated by finite-difference noise.
const DENOM_FLOOR: f64 = 1e-5;

/// Outcome of one gradient path.
#[derive(Debug, Clone)]
pub struct PathReport {
    pub name: String,
    pub max_rel_error: f64,
    pub checks: usize,
    pub pass: bool,
}

fn rel_error(analytic: f64, fd: f64) -> f64 {
    math::abs(analytic - fd) / math::abs(analytic).max(math::abs(fd)).max(DENOM_FLOOR)
}

struct Check {
    name: &'static str,
    max_err: f64,
    count: usize,
    flip: bool,
}

impl Check {
    fn new(name: &'static str, fault: Option<&str>) -> Self {
        Check {
            name,
            max_err: 0.0,
            count: 0,
            flip: fault == Some(name),
        }
    }

    fn compare(&mut self, analytic: f64, fd: f64) {
        let a = if self.flip { -analytic } else { analytic };
        let e = rel_error(a, fd);
        if e > self.max_err {
            self.max_err = e;
        }
        self.count += 1;
    }

    fn report(self) -> PathReport {
        PathReport {
            name: String::from(self.name),
            max_rel_error: self.max_err,
            checks: self.count,
            pass: self.max_err < TOLERANCE && self.count > 0,
        }
    }
}

fn random_grid(w: usize, h: usize, ch: usize, lo: f64, hi: f64, rng: &mut Rng) -> PixelGrid {
    PixelGrid::from_vec(w, h, ch, (0..w * h * ch).map(|_| rng.uniform(lo, hi)).collect())
        .expect("shape matches")
}

fn grid_k(size: usize) -> CameraIntrinsics {
    let c = (size as f64 - 1.0) / 2.0;
    CameraIntrinsics::new(size as f64 * 1.2, size as f64 * 1.2, c, c, size, size).unwrap()
}

// Distance of a coordinate from the nearest interpolation cell line.
fn boundary_distance(v: f64) -> f64 {
    let f = v - math::floor(v);
    f.min(1.0 - f)
}

/// Warp + sample gradient wrt the depth map.
fn check_warp_depth(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("warp_sample_depth", fault);
    let n = 8;
    let k = grid_k(n);
    let src = random_grid(n, n, 3, 0.0, 1.0, rng);
    let depth = random_grid(n, n, 1, 4.0, 7.0, rng);
    let pose = RigidPose::new([0.004, -0.006, 0.003], [0.08, -0.05, 0.04]);
    let weights = random_grid(n, n, 3, -1.0, 1.0, rng);

    let objective = |d: &PixelGrid| -> (f64, Mask) {
        let (view, mask) = warp::synthesize_view(&src, d, &pose, &k);
        let mut acc = 0.0;
        for i in 0..view.len() {
            acc += view.data()[i] * weights.data()[i];
        }
        (acc, mask)
    };

    let field = warp::warp_coordinates(&depth, &pose, &k, false);
    let analytic = warp::backprop_to_depth(&src, &field, &weights);
    let (_, mask) = objective(&depth);
    let h = 1e-4;
    for y in 1..n - 1 {
        for x in 1..n - 1 {
            let i = field.coords.idx(x, y);
            if !mask.get(x, y)
                || boundary_distance(field.coords.u[i]) < 0.05
                || boundary_distance(field.coords.v[i]) < 0.05
            {
                continue;
            }
            let mut up = depth.clone();
            up.set(x, y, 0, depth.get(x, y, 0) + h);
            let mut dn = depth.clone();
            dn.set(x, y, 0, depth.get(x, y, 0) - h);
            let fd = (objective(&up).0 - objective(&dn).0) / (2.0 * h);
            check.compare(analytic.get(x, y, 0), fd);
        }
    }
    check.report()
}

/// Warp + sample gradient wrt the pose 6-vector.
fn check_warp_pose(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("warp_sample_pose", fault);
    let n = 8;
    let k = grid_k(n);
    let src = random_grid(n, n, 3, 0.0, 1.0, rng);
    let depth = random_grid(n, n, 1, 4.0, 7.0, rng);
    let pose = RigidPose::new([0.01, -0.004, 0.006], [0.06, -0.03, 0.02]);
    let weights = random_grid(n, n, 3, -1.0, 1.0, rng);

    let field = warp::warp_coordinates(&depth, &pose, &k, true);
    // Zero the upstream at pixels near cell boundaries so analytic and
    // finite differences see the same differentiable objective.
    let mut w_used = weights.clone();
    for y in 0..n {
        for x in 0..n {
            let i = field.coords.idx(x, y);
            if !field.coords.valid[i]
                || boundary_distance(field.coords.u[i]) < 0.05
                || boundary_distance(field.coords.v[i]) < 0.05
            {
                for c in 0..3 {
                    w_used.set(x, y, c, 0.0);
                }
            }
        }
    }
    let analytic = warp::backprop_to_pose(&src, &field, &w_used).unwrap();

    let objective = |p: &RigidPose| -> f64 {
        let (view, _) = warp::synthesize_view(&src, &depth, p, &k);
        view.data()
            .iter()
            .zip(w_used.data())
            .map(|(a, b)| a * b)
            .sum()
    };
    let h = 1e-6;
    for j in 0..6 {
        let mut hi = pose;
        let mut lo = pose;
        if j < 3 {
            hi.rotation[j] += h;
            lo.rotation[j] -= h;
        } else {
            hi.translation[j - 3] += h;
            lo.translation[j - 3] -= h;
        }
        let fd = (objective(&hi) - objective(&lo)) / (2.0 * h);
        check.compare(analytic[j], fd);
    }
    check.report()
}

/// SSIM map gradient wrt both inputs.
fn check_ssim(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("ssim", fault);
    let a = random_grid(8, 8, 1, 0.1, 0.9, rng);
    let b = random_grid(8, 8, 1, 0.1, 0.9, rng);
    let upstream = random_grid(8, 8, 1, -1.0, 1.0, rng);
    let (ga, gb) = losses::ssim_backward(&a, &b, &upstream).unwrap();
    let objective = |a: &PixelGrid, b: &PixelGrid| -> f64 {
        losses::ssim_map(a, b)
            .unwrap()
            .data()
            .iter()
            .zip(upstream.data())
            .map(|(s, w)| s * w)
            .sum()
    };
    let h = 1e-5;
    for i in (0..64).step_by(5) {
        let mut up = a.clone();
        up.data_mut()[i] += h;
        let mut dn = a.clone();
        dn.data_mut()[i] -= h;
        check.compare(ga.data()[i], (objective(&up, &b) - objective(&dn, &b)) / (2.0 * h));

        let mut up = b.clone();
        up.data_mut()[i] += h;
        let mut dn = b.clone();
        dn.data_mut()[i] -= h;
        check.compare(gb.data()[i], (objective(&a, &up) - objective(&a, &dn)) / (2.0 * h));
    }
    check.report()
}

/// Min-over-views photometric loss gradient wrt a view image.
fn check_photometric(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("photometric", fault);
    let target = random_grid(8, 8, 3, 0.1, 0.9, rng);
    let view0 = random_grid(8, 8, 3, 0.1, 0.9, rng);
    let view1 = random_grid(8, 8, 3, 0.1, 0.9, rng);
    let full = Mask::new_true(8, 8);
    let theta = losses::PHOTOMETRIC_THETA;

    let objective = |v0: &PixelGrid| -> f64 {
        losses::photometric_loss(
            &target,
            &[(v0.clone(), full.clone()), (view1.clone(), full.clone())],
            theta,
        )
        .unwrap()
        .value
    };
    let loss = losses::photometric_loss(
        &target,
        &[(view0.clone(), full.clone()), (view1.clone(), full.clone())],
        theta,
    )
    .unwrap();
    let g = loss.grad("view0").unwrap();

    // Skip perturbations that could flip the per-pixel argmin or an L1
    // sign: require a margin between the two views' errors.
    let map0 = losses::photometric_error_map(&target, &view0, theta).unwrap();
    let map1 = losses::photometric_error_map(&target, &view1, theta).unwrap();
    let h = 1e-6;
    for i in (0..8 * 8 * 3).step_by(7) {
        let pix = i / 3;
        let (x, y) = (pix % 8, pix / 8);
        if (map0.get(x, y, 0) - map1.get(x, y, 0)).abs() < 1e-3 {
            continue;
        }
        if (target.data()[i] - view0.data()[i]).abs() < 1e-4 {
            continue;
        }
        let mut up = view0.clone();
        up.data_mut()[i] += h;
        let mut dn = view0.clone();
        dn.data_mut()[i] -= h;
        check.compare(g.data()[i], (objective(&up) - objective(&dn)) / (2.0 * h));
    }
    check.report()
}

/// Edge-aware smoothness gradient wrt the depth map.
fn check_smoothness(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("smoothness", fault);
    let depth = random_grid(8, 8, 1, 2.0, 9.0, rng);
    let image = random_grid(8, 8, 3, 0.0, 1.0, rng);
    let loss = losses::smoothness_loss(&depth, &image).unwrap();
    let g = loss.grad("depth").unwrap();
    let h = 1e-6;
    for i in (0..64).step_by(3) {
        let mut up = depth.clone();
        up.data_mut()[i] += h;
        let mut dn = depth.clone();
        dn.data_mut()[i] -= h;
        let fu = losses::smoothness_loss(&up, &image).unwrap().value;
        let fl = losses::smoothness_loss(&dn, &image).unwrap().value;
        check.compare(g.data()[i], (fu - fl) / (2.0 * h));
    }
    check.report()
}

/// Relative-error distillation gradient wrt both stacks.
fn check_distillation(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("distillation", fault);
    let teacher = FeatureStack::new(vec![
        random_grid(8, 8, 1, 0.3, 2.0, rng),
        random_grid(4, 4, 1, 0.3, 2.0, rng),
    ])
    .unwrap();
    let student = FeatureStack::new(vec![
        random_grid(8, 8, 1, 0.3, 2.0, rng),
        random_grid(4, 4, 1, 0.3, 2.0, rng),
    ])
    .unwrap();
    let eps = losses::DISTILLATION_EPS;
    let loss = losses::distillation_loss(&teacher, &student, eps).unwrap();
    let h = 1e-6;
    for s in 0..2 {
        let gt = loss.grad(&format!("teacher_depth/s{s}")).unwrap();
        let gs = loss.grad(&format!("student_depth/s{s}")).unwrap();
        for i in (0..teacher.level(s).len()).step_by(5) {
            if (teacher.level(s).data()[i] - student.level(s).data()[i]).abs() < 1e-4 {
                continue;
            }
            let perturb = |stack: &FeatureStack, delta: f64| -> FeatureStack {
                let mut levels: Vec<PixelGrid> = stack.levels().to_vec();
                levels[s].data_mut()[i] += delta;
                FeatureStack::new(levels).unwrap()
            };
            let fu = losses::distillation_loss(&perturb(&teacher, h), &student, eps)
                .unwrap()
                .value;
            let fl = losses::distillation_loss(&perturb(&teacher, -h), &student, eps)
                .unwrap()
                .value;
            check.compare(gt.data()[i], (fu - fl) / (2.0 * h));

            let fu = losses::distillation_loss(&teacher, &perturb(&student, h), eps)
                .unwrap()
                .value;
            let fl = losses::distillation_loss(&teacher, &perturb(&student, -h), eps)
                .unwrap()
                .value;
            check.compare(gs.data()[i], (fu - fl) / (2.0 * h));
        }
    }
    check.report()
}

/// Ranking loss gradient wrt the student map through window averages.
fn check_ranking(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("ranking", fault);
    let student = random_grid(8, 8, 1, 0.5, 1.5, rng);
    let oracle = random_grid(8, 8, 1, 0.5, 1.5, rng);
    let disc = ogd::normalize_discrepancy(&ogd::depth_discrepancy(&oracle, &student).unwrap());
    let mask = ogd::uncertainty_mask(&disc, ogd::GammaMode::Percentile95);
    let cfg = ogd::SamplingConfig {
        local_ratio: 1.0,
        global_ratio: 0.3,
        ..ogd::SamplingConfig::default()
    };
    let mut srng = rng.fork(0x70);
    let (local, global) = ogd::sample_pairs(&mask, &student, &oracle, &cfg, &mut srng).unwrap();
    for window in [true, false] {
        let loss = ogd::ranking_loss(&local, &global, &student, window);
        let g = loss.grad("student_depth/s0").unwrap();
        let h = 1e-6;
        for i in (0..64).step_by(6) {
            let mut up = student.clone();
            up.data_mut()[i] += h;
            let mut dn = student.clone();
            dn.data_mut()[i] -= h;
            let fu = ogd::ranking_loss(&local, &global, &up, window).value;
            let fl = ogd::ranking_loss(&local, &global, &dn, window).value;
            check.compare(g.data()[i], (fu - fl) / (2.0 * h));
        }
    }
    check.report()
}

/// Feature consistency gradient wrt the live stack; stop-gradient
/// arguments must be exactly zero.
fn check_feature_consistency(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("feature_consistency", fault);
    let input = FeatureStack::new(vec![random_grid(8, 8, 2, -1.0, 1.0, rng)]).unwrap();
    let clean = FeatureStack::new(vec![random_grid(8, 8, 2, -1.0, 1.0, rng)]).unwrap();
    let teacher = FeatureStack::new(vec![random_grid(8, 8, 2, -1.0, 1.0, rng)]).unwrap();
    let loss =
        losses::feature_consistency_loss(&input, Some(&clean), &teacher, losses::InputKind::Degraded)
            .unwrap();
    let g = loss.grad("student_hidden/s0").unwrap();
    // Stop-gradient grids are exact zeros; fold that into the check.
    let zeros_ok = loss
        .grad("teacher_hidden/s0")
        .unwrap()
        .data()
        .iter()
        .chain(loss.grad("student_hidden_clean/s0").unwrap().data().iter())
        .all(|&v| v == 0.0);
    let h = 1e-6;
    for i in (0..128).step_by(9) {
        let v = input.level(0).data()[i];
        if (v - teacher.level(0).data()[i]).abs() < 1e-4
            || (v - clean.level(0).data()[i]).abs() < 1e-4
        {
            continue;
        }
        let perturb = |delta: f64| -> f64 {
            let mut levels = input.levels().to_vec();
            levels[0].data_mut()[i] += delta;
            let st = FeatureStack::new(levels).unwrap();
            losses::feature_consistency_loss(&st, Some(&clean), &teacher, losses::InputKind::Degraded)
                .unwrap()
                .value
        };
        check.compare(g.data()[i], (perturb(h) - perturb(-h)) / (2.0 * h));
    }
    if !zeros_ok {
        // Force a failure that names this path.
        check.compare(1.0, -1.0);
    }
    check.report()
}

/// Network backward over every weight.
fn check_model_backward(rng: &mut Rng, fault: Option<&str>) -> PathReport {
    let mut check = Check::new("model_backward", fault);
    let hidden = 6;
    let net = model::init_weights(rng.next_u64(), hidden);
    let image = random_grid(8, 8, 3, 0.0, 1.0, rng);
    let scales = 2;
    let pass = model::forward(&net, &image, scales);
    let dep_up: Vec<PixelGrid> = (0..scales)
        .map(|s| random_grid(8 >> s, 8 >> s, 1, -1.0, 1.0, rng))
        .collect();
    let hid_up: Vec<PixelGrid> = (0..scales)
        .map(|s| random_grid(8 >> s, 8 >> s, hidden, -0.2, 0.2, rng))
        .collect();
    let dep_refs: Vec<Option<&PixelGrid>> = dep_up.iter().map(Some).collect();
    let hid_refs: Vec<Option<&PixelGrid>> = hid_up.iter().map(Some).collect();
    let grad = model::backward(&net, &pass.cache, &dep_refs, &hid_refs).unwrap();

    let objective = |n: &model::DepthNet| -> f64 {
        let pass = model::forward(n, &image, scales);
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
    for i in 0..net.weights.len() {
        let mut up = net.clone();
        up.weights[i] += h;
        let mut dn = net.clone();
        dn.weights[i] -= h;
        check.compare(grad[i], (objective(&up) - objective(&dn)) / (2.0 * h));
    }
    check.report()
}

/// Run every gradient path. `fault` names a path whose analytic
/// gradient is sign-flipped before comparison, for harness validation.
pub fn run_all_with_fault(seed: u64, fault: Option<&str>) -> Vec<PathReport> {
    let root = Rng::new(seed);
    vec![
        check_warp_depth(&mut root.fork(1), fault),
        check_warp_pose(&mut root.fork(2), fault),
        check_ssim(&mut root.fork(3), fault),
        check_photometric(&mut root.fork(4), fault),
        check_smoothness(&mut root.fork(5), fault),
        check_distillation(&mut root.fork(6), fault),
        check_ranking(&mut root.fork(7), fault),
        check_feature_consistency(&mut root.fork(8), fault),
        check_model_backward(&mut root.fork(9), fault),
    ]
}

/// Run every gradient path with no fault injection.
pub fn run_all(seed: u64) -> Vec<PathReport> {
    run_all_with_fault(seed, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_paths_pass_at_default_seed() {
        for report in run_all(2024) {
            assert!(
                report.pass,
                "{} failed: max rel err {} over {} checks",
                report.name, report.max_rel_error, report.checks
            );
        }
    }

    #[test]
    fn fault_injection_names_the_failing_path() {
        let reports = run_all_with_fault(2024, Some("smoothness"));
        let failed: Vec<&PathReport> = reports.iter().filter(|r| !r.pass).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "smoothness");
    }

    #[test]
    fn reports_are_stable_across_runs() {
        let a = run_all(7);
        let b = run_all(7);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.max_rel_error.to_bits(), y.max_rel_error.to_bits());
            assert_eq!(x.checks, y.checks);
        }
    }
}
