//! Pinhole intrinsics and rigid frame-to-frame transforms.
//!
//! Conventions: pixel centers sit at integer coordinates, image x grows
//! right, y grows down, and the camera looks down +z. A pose stored on a
//! frame pair maps points expressed in the target frame into the source
//! frame, so warping pulls source pixels into the target image.

use crate::error::{CoreError, CoreResult};
use crate::math;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Pinhole camera parameters in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> CoreResult<Self> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }
}

/// Axis-angle rotation plus translation.
///
/// `rotation` is the rotation vector in radians (Rodrigues exponential),
/// `translation` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Vec3,
    pub translation: Vec3,
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    math::sqrt(dot(a, a))
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

#[inline]
pub fn transpose(m: &Mat3) -> Mat3 {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

/// Skew-symmetric cross-product matrix [v]x.
#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    [
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ]
}

// Below this angle the Rodrigues coefficients switch to their Taylor
// expansions; the truncation error is < 1e-20 there.
const SMALL_ANGLE: f64 = 1e-4;

/// Rodrigues exponential map: rotation vector -> rotation matrix.
pub fn rotation_matrix(r: &Vec3) -> Mat3 {
    let theta = norm(r);
    let k = skew(r);
    let k2 = mat_mul(&k, &k);
    let (a, b) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // sin(t)/t and (1-cos(t))/t^2
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (
            math::sin(theta) / theta,
            (1.0 - math::cos(theta)) / (theta * theta),
        )
    };
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i][j] = id + a * k[i][j] + b * k2[i][j];
        }
    }
    out
}

/// Right Jacobian of SO(3): exp(r + d) ~= exp(r) * exp(Jr(r) d).
///
/// Used to differentiate rotated points with respect to the rotation
/// vector: d(R(r) v)/dr = -R [v]x Jr(r).
pub fn so3_right_jacobian(r: &Vec3) -> Mat3 {
    let theta = norm(r);
    let k = skew(r);
    let k2 = mat_mul(&k, &k);
    let (b, c) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // (1-cos t)/t^2 and (t - sin t)/t^3
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        (
            (1.0 - math::cos(theta)) / (theta * theta),
            (theta - math::sin(theta)) / (theta * theta * theta),
        )
    };
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i][j] = id - b * k[i][j] + c * k2[i][j];
        }
    }
    out
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose {
            rotation: [0.0; 3],
            translation: [0.0; 3],
        }
    }

    pub fn new(rotation: Vec3, translation: Vec3) -> Self {
        RigidPose {
            rotation,
            translation,
        }
    }

    /// Exact identity (all six parameters zero). The warp operator
    /// short-circuits on this so the identity warp is bit-exact.
    pub fn is_identity(&self) -> bool {
        self.rotation == [0.0; 3] && self.translation == [0.0; 3]
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        rotation_matrix(&self.rotation)
    }

    /// Apply to a point: R p + t.
    pub fn transform(&self, p: &Vec3) -> Vec3 {
        let r = self.rotation_matrix();
        let rp = mat_vec(&r, p);
        [
            rp[0] + self.translation[0],
            rp[1] + self.translation[1],
            rp[2] + self.translation[2],
        ]
    }

    /// Composition: (self * other)(p) = self(other(p)).
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        let ra = self.rotation_matrix();
        let rb = other.rotation_matrix();
        let r = mat_mul(&ra, &rb);
        let t = mat_vec(&ra, &other.translation);
        RigidPose {
            rotation: log_rotation(&r),
            translation: [
                t[0] + self.translation[0],
                t[1] + self.translation[1],
                t[2] + self.translation[2],
            ],
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let r = self.rotation_matrix();
        let rt = transpose(&r);
        let t = mat_vec(&rt, &self.translation);
        RigidPose {
            rotation: [-self.rotation[0], -self.rotation[1], -self.rotation[2]],
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    /// Maximum deviation of R^T R from identity plus |det - 1|.
    pub fn orthonormality_defect(&self) -> f64 {
        let r = self.rotation_matrix();
        let rtr = mat_mul(&transpose(&r), &r);
        let mut worst: f64 = 0.0;
        for (i, row) in rtr.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(math::abs(v - id));
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        worst.max(math::abs(det - 1.0))
    }
}

/// Logarithm map: rotation matrix -> rotation vector.
pub fn log_rotation(m: &Mat3) -> Vec3 {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let cos_theta = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = math::acos(cos_theta);
    let axis_raw = [
        m[2][1] - m[1][2],
        m[0][2] - m[2][0],
        m[1][0] - m[0][1],
    ];
    if theta < SMALL_ANGLE {
        // log(R) ~= 0.5 (1 + theta^2/6) (R - R^T)^vee
        let scale = 0.5 * (1.0 + theta * theta / 6.0);
        return [
            scale * axis_raw[0],
            scale * axis_raw[1],
            scale * axis_raw[2],
        ];
    }
    if core::f64::consts::PI - theta < 1e-6 {
        // Near pi the vee vector vanishes; recover the axis from the
        // diagonal of R = I + 2 sin^2(theta/2) (aa^T - I).
        let xx = math::sqrt(((m[0][0] + 1.0) * 0.5).max(0.0));
        let yy = math::sqrt(((m[1][1] + 1.0) * 0.5).max(0.0));
        let zz = math::sqrt(((m[2][2] + 1.0) * 0.5).max(0.0));
        let mut axis = [xx, yy, zz];
        // Fix signs using the off-diagonal sums.
        if m[0][1] + m[1][0] < 0.0 {
            axis[1] = -axis[1];
        }
        if m[0][2] + m[2][0] < 0.0 {
            axis[2] = -axis[2];
        }
        let n = norm(&axis).max(1e-12);
        return [
            theta * axis[0] / n,
            theta * axis[1] / n,
            theta * axis[2] / n,
        ];
    }
    let scale = theta / (2.0 * math::sin(theta));
    [
        scale * axis_raw[0],
        scale * axis_raw[1],
        scale * axis_raw[2],
    ]
}
