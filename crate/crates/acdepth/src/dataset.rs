//! On-disk dataset layout.
//!
//! A synthesized dataset directory holds one subdirectory per triplet
//! plus a `dataset.txt` manifest:
//!
//! ```text
//! out/
//!   dataset.txt
//!   run_manifest.txt
//!   t0001/
//!     clean_prev.ppm  clean_t.ppm  clean_next.ppm  depth_t.pfm
//!     night_t.ppm fog_t.ppm ...          one per requested condition
//! ```
//!
//! `dataset.txt` records the intrinsics, the condition list, and one
//! `sample` line per triplet carrying its directory name and the two
//! relative poses (axis-angle + translation, target frame into
//! adjacent frame).

use std::path::{Path, PathBuf};

use acdepth_core::camera::{CameraIntrinsics, RigidPose};
use acdepth_core::synth::{self, DegradationParams, FrameTriplet};
use acdepth_core::trainer::{EvalSample, SampleKind, TrainSample};
use acdepth_core::Rng;

use crate::error::{parse_err, AppError, AppResult};
use crate::pfm;
use crate::ppm;
use crate::scene_file::SceneSpec;

fn pose_tokens(p: &RigidPose) -> String {
    format!(
        "{} {} {} {} {} {}",
        p.rotation[0], p.rotation[1], p.rotation[2], p.translation[0], p.translation[1], p.translation[2]
    )
}

/// Render every interior frame of the scene trajectory, write triplets
/// and degraded variants, and return the dataset manifest text.
pub fn write_dataset(
    spec: &SceneSpec,
    conditions: &[String],
    out_dir: &Path,
    seed: u64,
) -> AppResult<Vec<String>> {
    let scene = &spec.scene;
    let k = &spec.intrinsics;
    if scene.trajectory.len() < 3 {
        return Err(AppError::Format(
            "trajectory needs at least 3 frames to form a triplet".to_string(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;

    let mut manifest = String::new();
    manifest.push_str(&format!("width = {}\n", k.width));
    manifest.push_str(&format!("height = {}\n", k.height));
    manifest.push_str(&format!("fx = {}\n", k.fx));
    manifest.push_str(&format!("fy = {}\n", k.fy));
    manifest.push_str(&format!("cx = {}\n", k.cx));
    manifest.push_str(&format!("cy = {}\n", k.cy));
    manifest.push_str(&format!("conditions = {}\n", conditions.join(" ")));

    let mut written = Vec::new();
    for t_index in 1..scene.trajectory.len() - 1 {
        let triplet = synth::generate_triplet(scene, k, t_index)?;
        let name = format!("t{t_index:04}");
        let dir = out_dir.join(&name);
        std::fs::create_dir_all(&dir)?;
        ppm::write_ppm(&triplet.image_prev, &dir.join("clean_prev.ppm"))?;
        ppm::write_ppm(&triplet.image_t, &dir.join("clean_t.ppm"))?;
        ppm::write_ppm(&triplet.image_next, &dir.join("clean_next.ppm"))?;
        pfm::write_pfm(&triplet.depth_gt, &dir.join("depth_t.pfm"))?;
        for cond in conditions {
            let params = degradation_for(spec, cond)?;
            let img = synth::degrade(
                &triplet.image_t,
                &triplet.depth_gt,
                &params,
                // Per-frame, per-condition substream.
                Rng::new(seed).fork(t_index as u64).fork(hash_name(cond)).next_u64(),
            );
            ppm::write_ppm(&img, &dir.join(format!("{cond}_t.ppm")))?;
        }
        manifest.push_str(&format!(
            "sample = {name} {} {}\n",
            pose_tokens(&triplet.pose_to_prev),
            pose_tokens(&triplet.pose_to_next)
        ));
        written.push(name);
    }
    std::fs::write(out_dir.join("dataset.txt"), manifest)?;
    Ok(written)
}

fn hash_name(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn degradation_for(spec: &SceneSpec, cond: &str) -> AppResult<DegradationParams> {
    if let Some(p) = spec.degradations.get(cond) {
        return Ok(p.clone());
    }
    DegradationParams::preset(cond)
        .ok_or_else(|| AppError::Format(format!("unknown degradation kind {cond:?}")))
}

/// A dataset loaded back from disk.
pub struct Dataset {
    pub intrinsics: CameraIntrinsics,
    pub conditions: Vec<String>,
    pub samples: Vec<LoadedSample>,
}

pub struct LoadedSample {
    pub name: String,
    pub triplet: FrameTriplet,
    /// Condition name -> degraded middle-frame image.
    pub degraded: Vec<(String, acdepth_core::PixelGrid)>,
}

pub fn load_dataset(dir: &Path) -> AppResult<Dataset> {
    let manifest_path = dir.join("dataset.txt");
    let text = std::fs::read_to_string(&manifest_path)?;
    let file = manifest_path.display().to_string();

    let mut width = None;
    let mut height = None;
    let mut fx = None;
    let mut fy = None;
    let mut cx = None;
    let mut cy = None;
    let mut conditions: Vec<String> = Vec::new();
    let mut sample_lines: Vec<(usize, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&file, i + 1, "expected 'key = value'"))?;
        let value = value.trim();
        match key.trim() {
            "width" => width = value.parse::<usize>().ok(),
            "height" => height = value.parse::<usize>().ok(),
            "fx" => fx = value.parse::<f64>().ok(),
            "fy" => fy = value.parse::<f64>().ok(),
            "cx" => cx = value.parse::<f64>().ok(),
            "cy" => cy = value.parse::<f64>().ok(),
            "conditions" => {
                conditions = value.split_whitespace().map(|s| s.to_string()).collect()
            }
            "sample" => sample_lines.push((i + 1, value.to_string())),
            other => return Err(parse_err(&file, i + 1, format!("unknown key {other:?}"))),
        }
    }

    let missing = |what: &str| parse_err(&file, 0, format!("missing {what}"));
    let intrinsics = CameraIntrinsics::new(
        fx.ok_or_else(|| missing("fx"))?,
        fy.ok_or_else(|| missing("fy"))?,
        cx.ok_or_else(|| missing("cx"))?,
        cy.ok_or_else(|| missing("cy"))?,
        width.ok_or_else(|| missing("width"))?,
        height.ok_or_else(|| missing("height"))?,
    )
    .map_err(|e| parse_err(&file, 0, e.to_string()))?;

    let mut samples = Vec::new();
    for (line_no, line) in sample_lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 13 {
            return Err(parse_err(
                &file,
                line_no,
                format!("sample line needs name + 12 pose floats, got {} tokens", toks.len()),
            ));
        }
        let name = toks[0].to_string();
        let nums: Vec<f64> = toks[1..]
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(&file, line_no, "bad pose float"))?;
        let pose_to_prev = RigidPose::new(
            [nums[0], nums[1], nums[2]],
            [nums[3], nums[4], nums[5]],
        );
        let pose_to_next = RigidPose::new(
            [nums[6], nums[7], nums[8]],
            [nums[9], nums[10], nums[11]],
        );
        let sdir = dir.join(&name);
        let triplet = FrameTriplet {
            image_prev: ppm::read_ppm(&sdir.join("clean_prev.ppm"))?,
            image_t: ppm::read_ppm(&sdir.join("clean_t.ppm"))?,
            image_next: ppm::read_ppm(&sdir.join("clean_next.ppm"))?,
            pose_to_prev,
            pose_to_next,
            depth_gt: pfm::read_pfm(&sdir.join("depth_t.pfm"))?,
            frame_index: name.trim_start_matches('t').parse().unwrap_or(0),
        };
        let mut degraded = Vec::new();
        for cond in &conditions {
            degraded.push((
                cond.clone(),
                ppm::read_ppm(&sdir.join(format!("{cond}_t.ppm")))?,
            ));
        }
        samples.push(LoadedSample {
            name,
            triplet,
            degraded,
        });
    }

    Ok(Dataset {
        intrinsics,
        conditions,
        samples,
    })
}

impl Dataset {
    /// Clean triplets for teacher training.
    pub fn triplets(&self) -> Vec<FrameTriplet> {
        self.samples.iter().map(|s| s.triplet.clone()).collect()
    }

    /// Mixed training samples: one clear sample per triplet plus one
    /// per degraded condition.
    pub fn mixed_samples(&self) -> Vec<TrainSample> {
        let mut out = Vec::new();
        for s in &self.samples {
            out.push(TrainSample {
                triplet: s.triplet.clone(),
                input_t: s.triplet.image_t.clone(),
                kind: SampleKind::Clear,
            });
            for (cond, img) in &s.degraded {
                out.push(TrainSample {
                    triplet: s.triplet.clone(),
                    input_t: img.clone(),
                    kind: SampleKind::Degraded(cond.clone()),
                });
            }
        }
        out
    }

    /// Evaluation samples for the requested conditions ("clear" plus any
    /// degraded condition present in the dataset).
    pub fn eval_samples(&self, conditions: &[String]) -> AppResult<Vec<EvalSample>> {
        let mut out = Vec::new();
        for cond in conditions {
            if cond == "clear" {
                for s in &self.samples {
                    out.push(EvalSample {
                        image: s.triplet.image_t.clone(),
                        depth_gt: s.triplet.depth_gt.clone(),
                        condition: "clear".to_string(),
                    });
                }
                continue;
            }
            if !self.conditions.contains(cond) {
                return Err(AppError::Format(format!(
                    "condition {cond:?} not present in dataset (have: clear {})",
                    self.conditions.join(" ")
                )));
            }
            for s in &self.samples {
                let img = s
                    .degraded
                    .iter()
                    .find(|(c, _)| c == cond)
                    .map(|(_, i)| i.clone())
                    .expect("condition present per manifest");
                out.push(EvalSample {
                    image: img,
                    depth_gt: s.triplet.depth_gt.clone(),
                    condition: cond.clone(),
                });
            }
        }
        Ok(out)
    }
}

/// All files under a dataset directory in sorted order, for
/// reproducibility comparisons.
pub fn file_inventory(dir: &Path) -> AppResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else {
                out.push(p);
            }
        }
        Ok(())
    }
    walk(dir, &mut out)?;
    Ok(out)
}
