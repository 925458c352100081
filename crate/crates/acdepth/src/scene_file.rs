//! Scene description files.
//!
//! Line-oriented `key = value` text. Blank lines and `#` comments are
//! ignored. Keys:
//!
//! ```text
//! width, height, fx, fy, cx, cy      camera intrinsics (pixels)
//! ambient                            ambient light fraction [0, 1]
//! light = x y z                      directional light (world frame)
//! background_depth = z               background plane depth (m)
//! background_texture = TEXTURE
//! plane = px py pz nx ny nz [extent hx hy] TEXTURE
//! sphere = cx cy cz radius TEXTURE
//! frame = rx ry rz tx ty tz          camera-to-world pose (axis-angle + m)
//! trajectory_linear = n dx dy dz [drx dry drz]
//!                                    n frames with cumulative deltas
//! night = gamma gain sigma           degradation parameter overrides
//! rain = contrast density length angle speckle
//! fog = beta airlight
//! ```
//!
//! TEXTURE is one of:
//! `solid r g b` | `checker scale ra ga ba rb gb bb` |
//! `noise scale r g b contrast seed [octaves]`

use std::collections::BTreeMap;
use std::path::Path;

use acdepth_core::camera::{CameraIntrinsics, RigidPose};
use acdepth_core::synth::{DegradationParams, Primitive, Scene, Texture};

use crate::error::{parse_err, AppResult};

/// Parsed scene file: world, camera, and degradation overrides.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub scene: Scene,
    pub intrinsics: CameraIntrinsics,
    pub degradations: BTreeMap<String, DegradationParams>,
}

struct Cursor<'a> {
    file: &'a str,
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next_f64(&mut self, what: &str) -> AppResult<f64> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| parse_err(self.file, self.line, format!("missing {what}")))?;
        self.pos += 1;
        tok.parse()
            .map_err(|_| parse_err(self.file, self.line, format!("bad {what}: {tok:?}")))
    }

    fn next_u64(&mut self, what: &str) -> AppResult<u64> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| parse_err(self.file, self.line, format!("missing {what}")))?;
        self.pos += 1;
        tok.parse()
            .map_err(|_| parse_err(self.file, self.line, format!("bad {what}: {tok:?}")))
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn take(&mut self) -> Option<&'a str> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn vec3(&mut self, what: &str) -> AppResult<[f64; 3]> {
        Ok([
            self.next_f64(&format!("{what} x"))?,
            self.next_f64(&format!("{what} y"))?,
            self.next_f64(&format!("{what} z"))?,
        ])
    }

    fn finish(&self) -> AppResult<()> {
        if self.pos != self.tokens.len() {
            return Err(parse_err(
                self.file,
                self.line,
                format!("unexpected trailing tokens: {:?}", &self.tokens[self.pos..]),
            ));
        }
        Ok(())
    }
}

fn parse_texture(c: &mut Cursor) -> AppResult<Texture> {
    match c.take() {
        Some("solid") => Ok(Texture::Solid {
            color: c.vec3("color")?,
        }),
        Some("checker") => Ok(Texture::Checker {
            scale: c.next_f64("checker scale")?,
            color_a: c.vec3("color a")?,
            color_b: c.vec3("color b")?,
        }),
        Some("noise") => {
            let scale = c.next_f64("noise scale")?;
            let base = c.vec3("base color")?;
            let contrast = c.next_f64("contrast")?;
            let seed = c.next_u64("texture seed")?;
            let octaves = if c.peek().is_some() {
                c.next_u64("octaves")? as usize
            } else {
                1
            };
            Ok(Texture::Noise {
                scale,
                base,
                contrast,
                seed,
                octaves,
            })
        }
        other => Err(parse_err(
            c.file,
            c.line,
            format!("expected texture kind (solid|checker|noise), got {other:?}"),
        )),
    }
}

/// Parse a scene description from text. `file` labels diagnostics.
pub fn parse_scene(text: &str, file: &str) -> AppResult<SceneSpec> {
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut fx = None;
    let mut fy = None;
    let mut cx = None;
    let mut cy = None;
    let mut ambient = 0.4;
    let mut light = [0.0, 0.0, 1.0];
    let mut background_depth = None;
    let mut background_texture = Texture::Solid {
        color: [0.5, 0.5, 0.5],
    };
    let mut primitives = Vec::new();
    let mut trajectory: Vec<RigidPose> = Vec::new();
    let mut degradations = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(file, line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let mut c = Cursor {
            file,
            line: line_no,
            tokens: value.split_whitespace().collect(),
            pos: 0,
        };
        match key {
            "width" => width = Some(c.next_u64("width")? as usize),
            "height" => height = Some(c.next_u64("height")? as usize),
            "fx" => fx = Some(c.next_f64("fx")?),
            "fy" => fy = Some(c.next_f64("fy")?),
            "cx" => cx = Some(c.next_f64("cx")?),
            "cy" => cy = Some(c.next_f64("cy")?),
            "ambient" => ambient = c.next_f64("ambient")?,
            "light" => light = c.vec3("light")?,
            "background_depth" => background_depth = Some(c.next_f64("background depth")?),
            "background_texture" => background_texture = parse_texture(&mut c)?,
            "plane" => {
                let point = c.vec3("plane point")?;
                let normal = c.vec3("plane normal")?;
                let half_extent = if c.peek() == Some("extent") {
                    c.take();
                    Some((c.next_f64("extent hx")?, c.next_f64("extent hy")?))
                } else {
                    None
                };
                let texture = parse_texture(&mut c)?;
                primitives.push(Primitive::Plane {
                    point,
                    normal,
                    half_extent,
                    texture,
                });
            }
            "sphere" => {
                let center = c.vec3("sphere center")?;
                let radius = c.next_f64("radius")?;
                let texture = parse_texture(&mut c)?;
                primitives.push(Primitive::Sphere {
                    center,
                    radius,
                    texture,
                });
            }
            "frame" => {
                let rotation = c.vec3("frame rotation")?;
                let translation = c.vec3("frame translation")?;
                trajectory.push(RigidPose::new(rotation, translation));
            }
            "trajectory_linear" => {
                let n = c.next_u64("frame count")? as usize;
                let dt = c.vec3("translation delta")?;
                let dr = if c.peek().is_some() {
                    c.vec3("rotation delta")?
                } else {
                    [0.0; 3]
                };
                for j in 0..n {
                    let s = j as f64;
                    trajectory.push(RigidPose::new(
                        [dr[0] * s, dr[1] * s, dr[2] * s],
                        [dt[0] * s, dt[1] * s, dt[2] * s],
                    ));
                }
            }
            "night" => {
                let p = DegradationParams::Night {
                    gamma: c.next_f64("gamma")?,
                    gain: c.next_f64("gain")?,
                    sigma: c.next_f64("sigma")?,
                };
                p.validate().map_err(|e| parse_err(file, line_no, e.to_string()))?;
                degradations.insert("night".to_string(), p);
            }
            "rain" => {
                let p = DegradationParams::Rain {
                    contrast: c.next_f64("contrast")?,
                    density: c.next_f64("density")?,
                    length: c.next_f64("length")?,
                    angle: c.next_f64("angle")?,
                    speckle_sigma: c.next_f64("speckle")?,
                };
                p.validate().map_err(|e| parse_err(file, line_no, e.to_string()))?;
                degradations.insert("rain".to_string(), p);
            }
            "fog" => {
                let p = DegradationParams::Fog {
                    beta: c.next_f64("beta")?,
                    airlight: c.next_f64("airlight")?,
                };
                p.validate().map_err(|e| parse_err(file, line_no, e.to_string()))?;
                degradations.insert("fog".to_string(), p);
            }
            other => {
                return Err(parse_err(
                    file,
                    line_no,
                    format!("unknown scene key {other:?}"),
                ))
            }
        }
        c.finish()?;
    }

    let need = |opt: Option<f64>, name: &str| {
        opt.ok_or_else(|| parse_err(file, 0, format!("missing required key {name:?}")))
    };
    let width = width.ok_or_else(|| parse_err(file, 0, "missing required key \"width\""))?;
    let height = height.ok_or_else(|| parse_err(file, 0, "missing required key \"height\""))?;
    let intrinsics = CameraIntrinsics::new(
        need(fx, "fx")?,
        need(fy, "fy")?,
        need(cx, "cx")?,
        need(cy, "cy")?,
        width,
        height,
    )
    .map_err(|e| parse_err(file, 0, e.to_string()))?;
    let background_depth =
        background_depth.ok_or_else(|| parse_err(file, 0, "missing required key \"background_depth\""))?;
    if trajectory.is_empty() {
        return Err(parse_err(file, 0, "scene has no trajectory frames"));
    }

    Ok(SceneSpec {
        scene: Scene {
            primitives,
            background_depth,
            background_texture,
            light_direction: light,
            ambient,
            trajectory,
        },
        intrinsics,
        degradations,
    })
}

pub fn load_scene(path: &Path) -> AppResult<SceneSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_scene(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = "\
# demo scene
width = 32
height = 24
fx = 40
fy = 40
cx = 15.5
cy = 11.5
ambient = 0.4
light = 0.2 -0.3 1.0
background_depth = 20
background_texture = noise 1.5 0.4 0.5 0.9 0.8 3
plane = 0 0 8  0 0 -1  extent 2 1.5  checker 0.5 0.9 0.2 0.2 0.2 0.9 0.2
sphere = 1 0 6 0.8 solid 0.7 0.7 0.7
trajectory_linear = 5 0.1 0 0
night = 2.2 0.3 0.02
";

    #[test]
    fn parses_full_scene() {
        let spec = parse_scene(SCENE, "demo").unwrap();
        assert_eq!(spec.intrinsics.width, 32);
        assert_eq!(spec.scene.primitives.len(), 2);
        assert_eq!(spec.scene.trajectory.len(), 5);
        assert!((spec.scene.trajectory[4].translation[0] - 0.4).abs() < 1e-12);
        assert!(spec.degradations.contains_key("night"));
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = "width = 32\nheight = 24\nbogus_key = 1\n";
        let err = parse_scene(bad, "f").unwrap_err().to_string();
        assert!(err.contains("f:3"), "{err}");
        assert!(err.contains("bogus_key"), "{err}");

        let bad = "width = x\n";
        let err = parse_scene(bad, "f").unwrap_err().to_string();
        assert!(err.contains("f:1"), "{err}");
    }

    #[test]
    fn missing_required_key_is_reported() {
        let err = parse_scene("width = 8\n", "f").unwrap_err().to_string();
        assert!(err.contains("height"), "{err}");
    }
}
