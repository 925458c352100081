//! Canonical scene descriptions used by the documentation, tests, and
//! quick-start flows.
//!
//! Each constant is a complete scene file; the same texts are shipped
//! under `scenes/` at the repository root for direct CLI use (a test
//! keeps them in sync).

/// Teacher-convergence scene: a wall tilted away from the vertical (its
/// depth varies smoothly with the image row, with no discontinuities)
/// plus a row of small bright boxes tiled along the trajectory. Strong
/// parallax everywhere, so self-supervised training can pin depth
/// accurately. 42 frames: 40 interior triplets at 80x64.
pub const WALL_BOXES_SCENE: &str = "\
# tilted wall with bright boxes, translating camera
width = 80
height = 64
fx = 90
fy = 90
cx = 39.5
cy = 31.5
ambient = 0.45
light = 0.25 -0.35 1.0
background_depth = 30
background_texture = solid 0.3 0.3 0.3
plane = 0.9 -0.35 3.0   0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 220 3
plane = 3.1 -0.35 3.0   0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 221 3
plane = 5.3 -0.35 3.0   0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 222 3
plane = 7.5 -0.35 3.0   0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 223 3
plane = 9.7 -0.35 3.0   0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 224 3
plane = 11.9 -0.35 3.0  0 0 -1  extent 0.42 0.33  noise 0.36 0.97 0.88 0.8 0.45 225 3
plane = 0 0 5.0  0 -0.5 -1  noise 0.5 0.4 0.45 0.55 0.7 21 3
trajectory_linear = 42  0.22 0 0
";

/// Distillation-study scene: bright full-height stripes in front of a
/// dark far wall. Depth is keyed almost purely to local appearance, so
/// weather degradations push the teacher's inputs far outside its
/// training distribution -- the regime the student objectives target.
pub const STRIPES_SCENE: &str = "\
# bright stripes over a dark wall, translating camera
width = 80
height = 64
fx = 90
fy = 90
cx = 39.5
cy = 31.5
ambient = 0.45
light = 0.25 -0.35 1.0
background_depth = 7
background_texture = noise 0.9 0.3 0.32 0.42 0.6 23 3
plane = 0.7 0 3.5   0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 220 3
plane = 3.1 0 3.5   0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 221 3
plane = 5.5 0 3.5   0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 222 3
plane = 7.9 0 3.5   0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 223 3
plane = 10.3 0 3.5  0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 224 3
plane = 12.7 0 3.5  0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 225 3
trajectory_linear = 42  0.22 0 0
";

/// Smaller variant of the stripes layout for fast smoke tests: 10
/// frames (8 triplets) at 48x40.
pub const SMOKE_SCENE: &str = "\
# small stripes scene
width = 48
height = 40
fx = 55
fy = 55
cx = 23.5
cy = 19.5
ambient = 0.45
light = 0.25 -0.35 1.0
background_depth = 7
background_texture = noise 0.9 0.3 0.32 0.42 0.6 23 3
plane = 0.7 0 3.5  0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 220 3
plane = 2.4 0 3.5  0 0 -1  extent 0.6 50  noise 0.4 0.92 0.84 0.74 0.45 221 3
trajectory_linear = 10  0.22 0 0
";

/// Scene with a sphere and a tilted plane, used by the geometry
/// renderer-versus-warp oracle.
pub const GEOMETRY_SCENE: &str = "\
# sphere + tilted plane
width = 64
height = 64
fx = 80
fy = 80
cx = 31.5
cy = 31.5
ambient = 0.5
light = 0.2 -0.4 1.0
background_depth = 30
background_texture = noise 4.0 0.3 0.3 0.5 0.6 31 2
plane = 0.5 0.3 14  0.15 -0.1 -1  extent 3.5 2.5  noise 1.2 0.75 0.7 0.5 0.5 32 2
sphere = -0.9 0.5 8  1.3  noise 0.9 0.85 0.45 0.4 0.5 33 2
trajectory_linear = 5  0.18 0.02 0
";
