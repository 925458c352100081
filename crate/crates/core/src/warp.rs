//! Differentiable view synthesis: backproject, transform, project,
//! bilinear sampling.
//!
//! Warping pulls source-frame pixels into the target image: each target
//! pixel is backprojected with its predicted depth, moved by the
//! target-to-source pose, projected with the intrinsics, and sampled
//! bilinearly from the source image. Both stages expose analytic
//! derivatives so a photometric loss can be driven back to the depth map
//! and the six pose parameters.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::{
    mat_mul, mat_vec, skew, so3_right_jacobian, CameraIntrinsics, RigidPose, Vec3,
};
use crate::error::{CoreError, CoreResult};
use crate::grid::{Mask, PixelGrid};
use crate::math;

/// Per-pixel continuous source coordinates with validity flags.
///
/// A pixel is invalid exactly when its projected depth is <= 0 or the
/// coordinate falls outside `[0, width-1] x [0, height-1]`.
#[derive(Debug, Clone)]
pub struct CoordGrid {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CoordGrid {
    /// The identity map over a grid: coords equal pixel centers.
    pub fn identity(width: usize, height: usize) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                u.push(x as f64);
                v.push(y as f64);
            }
        }
        CoordGrid {
            width,
            height,
            u,
            v,
            valid: vec![true; width * height],
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Warp output: coordinates plus the Jacobians needed for training.
#[derive(Debug, Clone)]
pub struct WarpField {
    pub coords: CoordGrid,
    /// d(u, v)/d(depth at this pixel).
    pub depth_jacobian: Vec<[f64; 2]>,
    /// d(u, v)/d(pose 6-vector: rotation xyz, translation xyz), present
    /// when requested.
    pub pose_jacobian: Option<Vec<[[f64; 6]; 2]>>,
}

/// Unproject a pixel to a camera-frame point.
pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> CoreResult<Vec3> {
    if depth <= 0.0 {
        return Err(CoreError::NonPositiveDepth);
    }
    Ok([
        (u - k.cx) / k.fx * depth,
        (v - k.cy) / k.fy * depth,
        depth,
    ])
}

/// Projection result; `z <= 0` marks a point behind the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub z: f64,
}

impl Projection {
    #[inline]
    pub fn in_front(&self) -> bool {
        self.z > 0.0
    }
}

/// Project a camera-frame point to pixel coordinates.
pub fn project(p: &Vec3, k: &CameraIntrinsics) -> Projection {
    Projection {
        u: k.fx * (p[0] / p[2]) + k.cx,
        v: k.fy * (p[1] / p[2]) + k.cy,
        z: p[2],
    }
}

#[inline]
fn coord_in_bounds(u: f64, v: f64, width: usize, height: usize) -> bool {
    u >= 0.0 && u <= (width - 1) as f64 && v >= 0.0 && v <= (height - 1) as f64
}

/// Compute source-frame sampling coordinates for every target pixel.
///
/// `depth` is the target-frame depth map (single channel, strictly
/// positive); `pose` maps target-frame points into the source frame. Set
/// `with_pose_jacobian` to also get d(u, v)/d(pose).
pub fn warp_coordinates(
    depth: &PixelGrid,
    pose: &RigidPose,
    k: &CameraIntrinsics,
    with_pose_jacobian: bool,
) -> WarpField {
    let (w, h, _) = depth.shape();
    debug_assert!(depth.channels() == 1, "depth grid must be single-channel");
    let n = w * h;

    if pose.is_identity() {
        // Bit-exact identity map; depth has no effect when the camera
        // does not move.
        return WarpField {
            coords: CoordGrid::identity(w, h),
            depth_jacobian: vec![[0.0, 0.0]; n],
            pose_jacobian: if with_pose_jacobian {
                Some(identity_pose_jacobian(depth, k))
            } else {
                None
            },
        };
    }

    let rot = pose.rotation_matrix();
    let t = pose.translation;
    let jr = so3_right_jacobian(&pose.rotation);

    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let mut depth_jac = Vec::with_capacity(n);
    let mut pose_jac = if with_pose_jacobian {
        Vec::with_capacity(n)
    } else {
        Vec::new()
    };

    for py in 0..h {
        for px in 0..w {
            let d = depth.get(px, py, 0);
            debug_assert!(d > 0.0, "warp_coordinates requires positive depth");
            let ray = [
                (px as f64 - k.cx) / k.fx,
                (py as f64 - k.cy) / k.fy,
                1.0,
            ];
            // X = d * ray; X' = R X + t = d * a + t with a = R ray.
            let a = mat_vec(&rot, &ray);
            let xp = [d * a[0] + t[0], d * a[1] + t[1], d * a[2] + t[2]];
            let proj = project(&xp, k);
            let ok = proj.in_front() && coord_in_bounds(proj.u, proj.v, w, h);
            u.push(proj.u);
            v.push(proj.v);
            valid.push(ok);

            let z2 = xp[2] * xp[2];
            // du/dd = fx (a_x t_z - a_z t_x) / z'^2, same pattern for v.
            depth_jac.push([
                k.fx * (a[0] * t[2] - a[2] * t[0]) / z2,
                k.fy * (a[1] * t[2] - a[2] * t[1]) / z2,
            ]);

            if with_pose_jacobian {
                // d(u,v)/dX' rows.
                let du_dx = [k.fx / xp[2], 0.0, -k.fx * xp[0] / z2];
                let dv_dx = [0.0, k.fy / xp[2], -k.fy * xp[1] / z2];
                // dX'/drot = -R [X]x Jr with X = d * ray.
                let x_cam = [d * ray[0], d * ray[1], d * ray[2]];
                let rx = mat_mul(&rot, &skew(&x_cam));
                let mut dx_drot = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        dx_drot[i][j] =
                            -(rx[i][0] * jr[0][j] + rx[i][1] * jr[1][j] + rx[i][2] * jr[2][j]);
                    }
                }
                let mut jac = [[0.0; 6]; 2];
                for j in 0..3 {
                    // rotation block
                    jac[0][j] = du_dx[0] * dx_drot[0][j]
                        + du_dx[1] * dx_drot[1][j]
                        + du_dx[2] * dx_drot[2][j];
                    jac[1][j] = dv_dx[0] * dx_drot[0][j]
                        + dv_dx[1] * dx_drot[1][j]
                        + dv_dx[2] * dx_drot[2][j];
                    // translation block: dX'/dt = I
                    jac[0][3 + j] = du_dx[j];
                    jac[1][3 + j] = dv_dx[j];
                }
                pose_jac.push(jac);
            }
        }
    }

    WarpField {
        coords: CoordGrid {
            width: w,
            height: h,
            u,
            v,
            valid,
        },
        depth_jacobian: depth_jac,
        pose_jacobian: if with_pose_jacobian {
            Some(pose_jac)
        } else {
            None
        },
    }
}

// Pose Jacobian at the exact identity pose, where the coordinate map
// short-circuits: R = I, t = 0, Jr = I, X' = d * ray.
fn identity_pose_jacobian(depth: &PixelGrid, k: &CameraIntrinsics) -> Vec<[[f64; 6]; 2]> {
    let (w, h, _) = depth.shape();
    let mut out = Vec::with_capacity(w * h);
    for py in 0..h {
        for px in 0..w {
            let d = depth.get(px, py, 0);
            let rx = (px as f64 - k.cx) / k.fx;
            let ry = (py as f64 - k.cy) / k.fy;
            let x = [d * rx, d * ry, d];
            let du_dx = [k.fx / d, 0.0, -k.fx * x[0] / (d * d)];
            let dv_dx = [0.0, k.fy / d, -k.fy * x[1] / (d * d)];
            // dX'/drot = -[X]x, dX'/dt = I.
            let nx = skew(&x);
            let mut jac = [[0.0; 6]; 2];
            for j in 0..3 {
                jac[0][j] = -(du_dx[0] * nx[0][j] + du_dx[1] * nx[1][j] + du_dx[2] * nx[2][j]);
                jac[1][j] = -(dv_dx[0] * nx[0][j] + dv_dx[1] * nx[1][j] + dv_dx[2] * nx[2][j]);
                jac[0][3 + j] = du_dx[j];
                jac[1][3 + j] = dv_dx[j];
            }
            out.push(jac);
        }
    }
    out
}

/// Bilinear interpolation cell for a coordinate.
///
/// At exact cell boundaries the left/upper cell is used (fraction 1.0),
/// which makes the one-sided derivative deterministic and keeps the
/// interpolated value unchanged.
#[inline]
fn cell(coord: f64) -> (usize, f64) {
    let f = math::floor(coord);
    if coord == f && coord >= 1.0 {
        ((coord - 1.0) as usize, 1.0)
    } else {
        (f as usize, coord - f)
    }
}

/// Sample `src` at each coordinate; invalid pixels produce exact zeros.
///
/// Returns the sampled grid and the validity mask (a copy of the
/// coordinate validity).
pub fn bilinear_sample(src: &PixelGrid, coords: &CoordGrid) -> (PixelGrid, Mask) {
    let ch = src.channels();
    let mut out = PixelGrid::new(coords.width, coords.height, ch);
    let mut mask = Mask::new_false(coords.width, coords.height);
    for y in 0..coords.height {
        for x in 0..coords.width {
            let i = coords.idx(x, y);
            if !coords.valid[i] {
                continue;
            }
            mask.set(x, y, true);
            let (x0, a) = cell(coords.u[i]);
            let (y0, b) = cell(coords.v[i]);
            let x1 = (x0 + 1).min(src.width() - 1);
            let y1 = (y0 + 1).min(src.height() - 1);
            for c in 0..ch {
                let v00 = src.get(x0, y0, c);
                let v01 = src.get(x1, y0, c);
                let v10 = src.get(x0, y1, c);
                let v11 = src.get(x1, y1, c);
                let val = (1.0 - a) * (1.0 - b) * v00
                    + a * (1.0 - b) * v01
                    + (1.0 - a) * b * v10
                    + a * b * v11;
                out.set(x, y, c, val);
            }
        }
    }
    (out, mask)
}

/// Gradient of the sampled values with respect to the coordinates.
///
/// `upstream` has the sampled grid's shape; the result holds
/// d(loss)/d(u, v) per pixel (zero at invalid pixels).
pub fn bilinear_sample_backward(
    src: &PixelGrid,
    coords: &CoordGrid,
    upstream: &PixelGrid,
) -> Vec<[f64; 2]> {
    let ch = src.channels();
    let mut grad = vec![[0.0, 0.0]; coords.width * coords.height];
    for y in 0..coords.height {
        for x in 0..coords.width {
            let i = coords.idx(x, y);
            if !coords.valid[i] {
                continue;
            }
            let (x0, a) = cell(coords.u[i]);
            let (y0, b) = cell(coords.v[i]);
            let x1 = (x0 + 1).min(src.width() - 1);
            let y1 = (y0 + 1).min(src.height() - 1);
            let mut gu = 0.0;
            let mut gv = 0.0;
            for c in 0..ch {
                let v00 = src.get(x0, y0, c);
                let v01 = src.get(x1, y0, c);
                let v10 = src.get(x0, y1, c);
                let v11 = src.get(x1, y1, c);
                let g = upstream.get(x, y, c);
                gu += g * ((1.0 - b) * (v01 - v00) + b * (v11 - v10));
                gv += g * ((1.0 - a) * (v10 - v00) + a * (v11 - v01));
            }
            grad[i] = [gu, gv];
        }
    }
    grad
}

/// Warp a source image into the target view (Eq. 1 composition).
pub fn synthesize_view(
    src: &PixelGrid,
    depth: &PixelGrid,
    pose: &RigidPose,
    k: &CameraIntrinsics,
) -> (PixelGrid, Mask) {
    let field = warp_coordinates(depth, pose, k, false);
    bilinear_sample(src, &field.coords)
}

/// Chain an upstream image gradient through sampling and warping back to
/// the depth map. Returns d(loss)/d(depth).
pub fn backprop_to_depth(
    src: &PixelGrid,
    field: &WarpField,
    upstream: &PixelGrid,
) -> PixelGrid {
    let coord_grad = bilinear_sample_backward(src, &field.coords, upstream);
    let mut out = PixelGrid::new(field.coords.width, field.coords.height, 1);
    for y in 0..field.coords.height {
        for x in 0..field.coords.width {
            let i = field.coords.idx(x, y);
            let j = field.depth_jacobian[i];
            out.set(x, y, 0, coord_grad[i][0] * j[0] + coord_grad[i][1] * j[1]);
        }
    }
    out
}

/// Chain an upstream image gradient back to the pose 6-vector.
pub fn backprop_to_pose(
    src: &PixelGrid,
    field: &WarpField,
    upstream: &PixelGrid,
) -> CoreResult<[f64; 6]> {
    let pj = field
        .pose_jacobian
        .as_ref()
        .ok_or(CoreError::InvalidParameter(alloc::string::String::from(
            "warp field was built without pose jacobians",
        )))?;
    let coord_grad = bilinear_sample_backward(src, &field.coords, upstream);
    let mut out = [0.0; 6];
    for i in 0..coord_grad.len() {
        for j in 0..6 {
            out[j] += coord_grad[i][0] * pj[i][0][j] + coord_grad[i][1] * pj[i][1][j];
        }
    }
    Ok(out)
}

/// Mask of target pixels whose warped sample is geometrically consistent:
/// the source depth sampled at the warp location agrees with the
/// projected depth to `rel_tol`. Occluded or out-of-view pixels are
/// masked out.
pub fn depth_consistency_mask(
    target_depth: &PixelGrid,
    source_depth: &PixelGrid,
    pose: &RigidPose,
    k: &CameraIntrinsics,
    rel_tol: f64,
) -> Mask {
    let field = warp_coordinates(target_depth, pose, k, false);
    let (sampled, valid) = bilinear_sample(source_depth, &field.coords);
    let (w, h, _) = target_depth.shape();
    let mut mask = Mask::new_false(w, h);
    for y in 0..h {
        for x in 0..w {
            if !valid.get(x, y) {
                continue;
            }
            let i = field.coords.idx(x, y);
            let ray = [
                (x as f64 - k.cx) / k.fx,
                (y as f64 - k.cy) / k.fy,
                1.0,
            ];
            let d = target_depth.get(x, y, 0);
            let p = pose.transform(&[d * ray[0], d * ray[1], d * ray[2]]);
            let projected_z = p[2];
            let sampled_z = sampled.get(x, y, 0);
            if sampled_z > 0.0
                && math::abs(projected_z - sampled_z) <= rel_tol * sampled_z
            {
                let _ = i;
                mask.set(x, y, true);
            }
        }
    }
    mask
}
