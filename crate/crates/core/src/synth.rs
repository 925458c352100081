//! Synthetic scenes with exact depth, parametric weather degradations,
//! and the jittered ground-truth depth oracle.
//!
//! Scenes are textured planes and spheres under a single directional
//! light, ray-cast per pixel; the depth channel is the exact z of the
//! nearest hit, so rendered frames come with perfect geometry for the
//! photometric and evaluation oracles.

use alloc::string::String;
use alloc::vec::Vec;

use crate::camera::{cross, dot, mat_vec, norm, CameraIntrinsics, RigidPose, Vec3};
use crate::error::{CoreError, CoreResult};
use crate::grid::PixelGrid;
use crate::math;
use crate::rng::{hash2, Rng};

/// Fallback depth when a ray escapes all geometry; scenes are built so
/// this never triggers, but the renderer stays total.
const ESCAPE_DEPTH: f64 = 60.0;

/// Procedural albedo patterns.
#[derive(Debug, Clone)]
pub enum Texture {
    Solid {
        color: [f64; 3],
    },
    Checker {
        scale: f64,
        color_a: [f64; 3],
        color_b: [f64; 3],
    },
    /// Smooth value noise modulating a base color. Octaves stack
    /// halved-amplitude copies at doubled frequency, giving the
    /// photometric matcher both coarse and fine structure.
    Noise {
        scale: f64,
        base: [f64; 3],
        contrast: f64,
        seed: u64,
        octaves: usize,
    },
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

// Deterministic value noise on a unit lattice.
fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let xf = math::floor(x);
    let yf = math::floor(y);
    let xi = xf as i64;
    let yi = yf as i64;
    let tx = smoothstep(x - xf);
    let ty = smoothstep(y - yf);
    let v = |dx: i64, dy: i64| -> f64 {
        (hash2(seed, xi + dx, yi + dy) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    };
    let top = v(0, 0) + tx * (v(1, 0) - v(0, 0));
    let bot = v(0, 1) + tx * (v(1, 1) - v(0, 1));
    top + ty * (bot - top)
}

impl Texture {
    fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        match self {
            Texture::Solid { color } => *color,
            Texture::Checker {
                scale,
                color_a,
                color_b,
            } => {
                let cu = math::floor(u / scale) as i64;
                let cv = math::floor(v / scale) as i64;
                if (cu + cv).rem_euclid(2) == 0 {
                    *color_a
                } else {
                    *color_b
                }
            }
            Texture::Noise {
                scale,
                base,
                contrast,
                seed,
                octaves,
            } => {
                let octaves = (*octaves).max(1);
                let mut n = 0.0;
                let mut amp = 1.0;
                let mut freq = 1.0;
                let mut total = 0.0;
                for o in 0..octaves {
                    n += amp * value_noise(seed.wrapping_add(o as u64), freq * u / scale, freq * v / scale);
                    total += amp;
                    amp *= 0.5;
                    freq *= 2.0;
                }
                let m = 1.0 - contrast * 0.5 + contrast * (n / total);
                [base[0] * m, base[1] * m, base[2] * m]
            }
        }
    }
}

/// Scene geometry.
#[derive(Debug, Clone)]
pub enum Primitive {
    /// Plane through `point` with unit `normal`; `half_extent` bounds it
    /// as a rectangle along deterministic in-plane axes (infinite when
    /// absent).
    Plane {
        point: Vec3,
        normal: Vec3,
        half_extent: Option<(f64, f64)>,
        texture: Texture,
    },
    Sphere {
        center: Vec3,
        radius: f64,
        texture: Texture,
    },
}

// In-plane axes from the normal: pick the world axis least aligned with
// the normal, orthogonalize.
fn plane_axes(normal: &Vec3) -> (Vec3, Vec3) {
    let pick: Vec3 = if math::abs(normal[0]) <= math::abs(normal[1])
        && math::abs(normal[0]) <= math::abs(normal[2])
    {
        [1.0, 0.0, 0.0]
    } else if math::abs(normal[1]) <= math::abs(normal[2]) {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut u = cross(&pick, normal);
    let nu = norm(&u);
    for c in u.iter_mut() {
        *c /= nu;
    }
    let v = cross(normal, &u);
    (u, v)
}

/// A synthetic world: primitives, a world-anchored background plane,
/// one directional light, and a camera trajectory (camera-to-world
/// poses).
#[derive(Debug, Clone)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    /// Depth of the background plane z = value (world frame).
    pub background_depth: f64,
    pub background_texture: Texture,
    /// Direction the light travels toward the scene; normalized on use.
    pub light_direction: Vec3,
    /// Ambient fraction in [0, 1]; the rest is Lambertian.
    pub ambient: f64,
    /// Camera-to-world pose per frame.
    pub trajectory: Vec<RigidPose>,
}

struct Hit {
    t: f64,
    normal: Vec3,
    albedo: [f64; 3],
}

fn intersect_plane(
    origin: &Vec3,
    dir: &Vec3,
    point: &Vec3,
    normal_raw: &Vec3,
    half_extent: Option<(f64, f64)>,
    texture: &Texture,
) -> Option<Hit> {
    let nn = norm(normal_raw).max(1e-12);
    let normal = &[normal_raw[0] / nn, normal_raw[1] / nn, normal_raw[2] / nn];
    let denom = dot(dir, normal);
    if math::abs(denom) < 1e-12 {
        return None;
    }
    let diff = [point[0] - origin[0], point[1] - origin[1], point[2] - origin[2]];
    let t = dot(&diff, normal) / denom;
    if t <= 1e-9 {
        return None;
    }
    let p = [
        origin[0] + t * dir[0],
        origin[1] + t * dir[1],
        origin[2] + t * dir[2],
    ];
    let (ax_u, ax_v) = plane_axes(normal);
    let rel = [p[0] - point[0], p[1] - point[1], p[2] - point[2]];
    let u = dot(&rel, &ax_u);
    let v = dot(&rel, &ax_v);
    if let Some((hu, hv)) = half_extent {
        if math::abs(u) > hu || math::abs(v) > hv {
            return None;
        }
    }
    // Face the normal toward the ray origin.
    let n = if denom > 0.0 {
        [-normal[0], -normal[1], -normal[2]]
    } else {
        *normal
    };
    Some(Hit {
        t,
        normal: n,
        albedo: texture.sample(u, v),
    })
}

fn intersect_sphere(
    origin: &Vec3,
    dir: &Vec3,
    center: &Vec3,
    radius: f64,
    texture: &Texture,
) -> Option<Hit> {
    let oc = [origin[0] - center[0], origin[1] - center[1], origin[2] - center[2]];
    let a = dot(dir, dir);
    let b = 2.0 * dot(&oc, dir);
    let c = dot(&oc, &oc) - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = math::sqrt(disc);
    let t = {
        let t0 = (-b - sq) / (2.0 * a);
        let t1 = (-b + sq) / (2.0 * a);
        if t0 > 1e-9 {
            t0
        } else if t1 > 1e-9 {
            t1
        } else {
            return None;
        }
    };
    let p = [
        origin[0] + t * dir[0],
        origin[1] + t * dir[1],
        origin[2] + t * dir[2],
    ];
    let mut n = [
        (p[0] - center[0]) / radius,
        (p[1] - center[1]) / radius,
        (p[2] - center[2]) / radius,
    ];
    if dot(&n, dir) > 0.0 {
        for c in n.iter_mut() {
            *c = -*c;
        }
    }
    // Spherical texture coordinates.
    let theta = math::atan2(p[2] - center[2], p[0] - center[0]);
    let phi = math::acos(((p[1] - center[1]) / radius).clamp(-1.0, 1.0));
    Some(Hit {
        t,
        normal: n,
        albedo: texture.sample(theta * radius, phi * radius),
    })
}

/// Ray-cast Lambertian render. Returns (RGB image in [0, 1], exact
/// z-depth in the camera frame).
pub fn render(scene: &Scene, k: &CameraIntrinsics, pose: &RigidPose) -> (PixelGrid, PixelGrid) {
    let (w, h) = (k.width, k.height);
    let mut image = PixelGrid::new(w, h, 3);
    let mut depth = PixelGrid::new(w, h, 1);

    let cam_rot = pose.rotation_matrix();
    let origin = pose.translation;
    let mut light = scene.light_direction;
    let ln = norm(&light).max(1e-12);
    for c in light.iter_mut() {
        *c /= ln;
    }

    for y in 0..h {
        for x in 0..w {
            // Camera-frame ray with unit z; the ray parameter then equals
            // camera-frame z-depth.
            let ray_cam = [
                (x as f64 - k.cx) / k.fx,
                (y as f64 - k.cy) / k.fy,
                1.0,
            ];
            let dir = mat_vec(&cam_rot, &ray_cam);

            let mut best: Option<Hit> = None;
            for prim in &scene.primitives {
                let hit = match prim {
                    Primitive::Plane {
                        point,
                        normal,
                        half_extent,
                        texture,
                    } => intersect_plane(&origin, &dir, point, normal, *half_extent, texture),
                    Primitive::Sphere {
                        center,
                        radius,
                        texture,
                    } => intersect_sphere(&origin, &dir, center, *radius, texture),
                };
                if let Some(hh) = hit {
                    if best.as_ref().map_or(true, |b| hh.t < b.t) {
                        best = Some(hh);
                    }
                }
            }
            // World-anchored background plane z = background_depth.
            if best.is_none() {
                best = intersect_plane(
                    &origin,
                    &dir,
                    &[0.0, 0.0, scene.background_depth],
                    &[0.0, 0.0, -1.0],
                    None,
                    &scene.background_texture,
                );
            }

            match best {
                Some(hit) => {
                    let lambert = (-dot(&hit.normal, &light)).max(0.0);
                    let shade = scene.ambient + (1.0 - scene.ambient) * lambert;
                    for c in 0..3 {
                        image.set(x, y, c, (hit.albedo[c] * shade).clamp(0.0, 1.0));
                    }
                    depth.set(x, y, 0, hit.t);
                }
                None => {
                    let albedo = scene.background_texture.sample(dir[0], dir[1]);
                    for c in 0..3 {
                        image.set(x, y, c, (albedo[c] * scene.ambient).clamp(0.0, 1.0));
                    }
                    depth.set(x, y, 0, ESCAPE_DEPTH);
                }
            }
        }
    }
    (image, depth)
}

/// Three consecutive frames with exact relative poses and the middle
/// frame's ground-truth depth.
#[derive(Debug, Clone)]
pub struct FrameTriplet {
    pub image_prev: PixelGrid,
    pub image_t: PixelGrid,
    pub image_next: PixelGrid,
    /// Maps target-frame points into the previous frame.
    pub pose_to_prev: RigidPose,
    /// Maps target-frame points into the next frame.
    pub pose_to_next: RigidPose,
    pub depth_gt: PixelGrid,
    pub frame_index: usize,
}

/// Relative pose mapping points from frame `a` into frame `b`, given
/// camera-to-world poses.
pub fn relative_pose(cam_to_world_a: &RigidPose, cam_to_world_b: &RigidPose) -> RigidPose {
    cam_to_world_b.inverse().compose(cam_to_world_a)
}

/// Render frames t-1, t, t+1 and package their exact relative poses.
pub fn generate_triplet(
    scene: &Scene,
    k: &CameraIntrinsics,
    t_index: usize,
) -> CoreResult<FrameTriplet> {
    if t_index == 0 || t_index + 1 >= scene.trajectory.len() {
        return Err(CoreError::BadIndex(t_index));
    }
    let (image_prev, _) = render(scene, k, &scene.trajectory[t_index - 1]);
    let (image_t, depth_gt) = render(scene, k, &scene.trajectory[t_index]);
    let (image_next, _) = render(scene, k, &scene.trajectory[t_index + 1]);
    Ok(FrameTriplet {
        image_prev,
        image_t,
        image_next,
        pose_to_prev: relative_pose(
            &scene.trajectory[t_index],
            &scene.trajectory[t_index - 1],
        ),
        pose_to_next: relative_pose(
            &scene.trajectory[t_index],
            &scene.trajectory[t_index + 1],
        ),
        depth_gt,
        frame_index: t_index,
    })
}

/// Parametric degradation presets standing in for learned weather
/// translation.
#[derive(Debug, Clone, PartialEq)]
pub enum DegradationParams {
    /// Gamma-compressed low light with sensor noise:
    /// clamp(gain * in^gamma + N(0, sigma)).
    Night { gamma: f64, gain: f64, sigma: f64 },
    /// Contrast compression, bright streak overlays, and speckle.
    Rain {
        contrast: f64,
        /// Streaks per pixel.
        density: f64,
        /// Streak length in pixels.
        length: f64,
        /// Streak angle from vertical, radians.
        angle: f64,
        speckle_sigma: f64,
    },
    /// Depth-dependent transmission toward a constant airlight:
    /// in * e^(-beta d) + A (1 - e^(-beta d)).
    Fog { beta: f64, airlight: f64 },
}

impl DegradationParams {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DegradationParams::Night { .. } => "night",
            DegradationParams::Rain { .. } => "rain",
            DegradationParams::Fog { .. } => "fog",
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        let bad = |msg: &str| Err(CoreError::InvalidParameter(String::from(msg)));
        match *self {
            DegradationParams::Night { gamma, gain, sigma } => {
                if gamma <= 1.0 {
                    return bad("night gamma must be > 1");
                }
                if !(gain > 0.0 && gain <= 1.0) {
                    return bad("night gain must lie in (0, 1]");
                }
                if sigma < 0.0 {
                    return bad("night noise sigma must be >= 0");
                }
            }
            DegradationParams::Rain {
                contrast,
                density,
                length,
                speckle_sigma,
                ..
            } => {
                if !(contrast > 0.0 && contrast <= 1.0) {
                    return bad("rain contrast must lie in (0, 1]");
                }
                if density < 0.0 || length < 0.0 || speckle_sigma < 0.0 {
                    return bad("rain density, length, and speckle must be >= 0");
                }
            }
            DegradationParams::Fog { beta, airlight } => {
                if beta < 0.0 {
                    return bad("fog attenuation must be >= 0");
                }
                if !(0.0..=1.0).contains(&airlight) {
                    return bad("fog airlight must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }

    /// Standard presets keyed by condition name.
    pub fn preset(kind: &str) -> Option<DegradationParams> {
        match kind {
            "night" => Some(DegradationParams::Night {
                gamma: 2.4,
                gain: 0.22,
                sigma: 0.055,
            }),
            "rain" => Some(DegradationParams::Rain {
                contrast: 0.6,
                density: 0.004,
                length: 9.0,
                angle: 0.18,
                speckle_sigma: 0.02,
            }),
            "fog" => Some(DegradationParams::Fog {
                beta: 0.2,
                airlight: 0.85,
            }),
            _ => None,
        }
    }
}

/// Apply a weather degradation. Deterministic per (params, seed); the
/// ground-truth depth drives the fog transmission.
pub fn degrade(
    image: &PixelGrid,
    depth_gt: &PixelGrid,
    params: &DegradationParams,
    seed: u64,
) -> PixelGrid {
    let (w, h, ch) = image.shape();
    let mut rng = Rng::new(seed);
    match *params {
        DegradationParams::Night { gamma, gain, sigma } => {
            let mut out = PixelGrid::new(w, h, ch);
            for y in 0..h {
                for x in 0..w {
                    for c in 0..ch {
                        let v = gain * math::powf(image.get(x, y, c).max(0.0), gamma);
                        let n = if sigma > 0.0 { sigma * rng.normal() } else { 0.0 };
                        out.set(x, y, c, (v + n).clamp(0.0, 1.0));
                    }
                }
            }
            out
        }
        DegradationParams::Fog { beta, airlight } => {
            let mut out = PixelGrid::new(w, h, ch);
            for y in 0..h {
                for x in 0..w {
                    let trans = math::exp(-beta * depth_gt.get(x, y, 0));
                    for c in 0..ch {
                        out.set(
                            x,
                            y,
                            c,
                            image.get(x, y, c) * trans + airlight * (1.0 - trans),
                        );
                    }
                }
            }
            out
        }
        DegradationParams::Rain {
            contrast,
            density,
            length,
            angle,
            speckle_sigma,
        } => {
            let mut out = PixelGrid::new(w, h, ch);
            for y in 0..h {
                for x in 0..w {
                    for c in 0..ch {
                        let v = 0.5 + contrast * (image.get(x, y, c) - 0.5);
                        let n = if speckle_sigma > 0.0 {
                            speckle_sigma * rng.normal()
                        } else {
                            0.0
                        };
                        out.set(x, y, c, (v + n).clamp(0.0, 1.0));
                    }
                }
            }
            // Seeded anisotropic streaks, alpha-blended toward white.
            let count = math::round(density * (w * h) as f64) as usize;
            let dirx = math::sin(angle);
            let diry = math::cos(angle);
            for _ in 0..count {
                let sx = rng.uniform(0.0, w as f64);
                let sy = rng.uniform(0.0, h as f64);
                let len = length * rng.uniform(0.6, 1.4);
                let alpha = rng.uniform(0.15, 0.4);
                let steps = (len * 2.0) as usize + 1;
                for i in 0..steps {
                    let t = i as f64 / 2.0;
                    let px = sx + dirx * t;
                    let py = sy + diry * t;
                    if px < 0.0 || py < 0.0 {
                        continue;
                    }
                    let (xi, yi) = (px as usize, py as usize);
                    if xi >= w || yi >= h {
                        continue;
                    }
                    for c in 0..ch {
                        let v = out.get(xi, yi, c);
                        out.set(xi, yi, c, (v + alpha * (1.0 - v)).clamp(0.0, 1.0));
                    }
                }
            }
            out
        }
    }
}

/// Inverse ground-truth depth under a positive scale jitter: c / depth
/// with c log-uniform in [0.5, 2]. Pure scaling preserves every depth
/// ratio, hence every ordinal label.
pub fn oracle_relative_depth(depth_gt: &PixelGrid, rng: &mut Rng) -> PixelGrid {
    let c = math::exp(rng.uniform(math::ln(0.5), math::ln(2.0)));
    oracle_relative_depth_with_scale(depth_gt, c)
}

/// Deterministic variant with an explicit scale.
pub fn oracle_relative_depth_with_scale(depth_gt: &PixelGrid, scale: f64) -> PixelGrid {
    depth_gt.map(|d| scale / d)
}
