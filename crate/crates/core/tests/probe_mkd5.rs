// Temporary MKD-trend probe; superseded by the acceptance suite.
use acdepth_core::camera::{CameraIntrinsics, RigidPose};
use acdepth_core::synth::{self, DegradationParams, Primitive, Scene, Texture};
use acdepth_core::trainer::{
    self, EvalProtocol, EvalSample, JitteredGtOracle, SampleKind, TrainConfig, TrainSample,
};
use acdepth_core::Rng;

fn mkd_scene() -> (Scene, CameraIntrinsics) {
    let k = CameraIntrinsics::new(90.0, 90.0, 39.5, 31.5, 80, 64).unwrap();
    let mut primitives = Vec::new();
    // Bright full-height stripes in front of a dark far wall: depth is
    // keyed almost purely to local appearance, so weather degradations
    // shift the teacher's inputs far outside its training distribution.
    for j in 0..6 {
        primitives.push(Primitive::Plane {
            point: [0.7 + 2.4 * j as f64, 0.0, 3.5],
            normal: [0.0, 0.0, -1.0],
            half_extent: Some((0.6, 50.0)),
            texture: Texture::Noise {
                scale: 0.4,
                base: [0.92, 0.84, 0.74],
                contrast: 0.45,
                seed: 220 + j,
                octaves: 3,
            },
        });
    }
    let scene = Scene {
        primitives,
        background_depth: 7.0,
        background_texture: Texture::Noise {
            scale: 0.9,
            base: [0.3, 0.32, 0.42],
            contrast: 0.6,
            seed: 23,
            octaves: 3,
        },
        light_direction: [0.25, -0.35, 1.0],
        ambient: 0.45,
        trajectory: (0..42)
            .map(|i| RigidPose::new([0.0; 3], [0.22 * i as f64, 0.0, 0.0]))
            .collect(),
    };
    (scene, k)
}

const KINDS: [&str; 2] = ["night", "fog"];

fn degrade_frame(
    t: &synth::FrameTriplet,
    kind: &str,
    seed: u64,
) -> acdepth_core::PixelGrid {
    synth::degrade(
        &t.image_t,
        &t.depth_gt,
        &DegradationParams::preset(kind).unwrap(),
        Rng::new(seed).fork(t.frame_index as u64).next_u64(),
    )
}

#[test]
#[ignore]
fn probe_mkd_trend_v5() {
    let total = std::time::Instant::now();
    let (scene, k) = mkd_scene();
    let triplets: Vec<_> = (1..41)
        .map(|t| synth::generate_triplet(&scene, &k, t).unwrap())
        .collect();

    let teacher_cfg = TrainConfig {
        epochs: 200,
        batch_size: 4,
        hidden: 32,
        scales: 1,
        learning_rate: 5e-4,
        lr_decay_period: 120,
        lr_decay_factor: 0.1,
        seed: 1,
        fcc_start_epoch: 0,
        ..TrainConfig::default()
    };
    let t0 = std::time::Instant::now();
    let (teacher, _) = trainer::train_teacher(&triplets, &k, &teacher_cfg).unwrap();
    println!("teacher trained in {:?}", t0.elapsed());

    // Teacher quality on clean and degraded eval.
    let protocol = EvalProtocol::default();
    let clean_eval: Vec<EvalSample> = triplets
        .iter()
        .map(|t| EvalSample {
            image: t.image_t.clone(),
            depth_gt: t.depth_gt.clone(),
            condition: "clear".into(),
        })
        .collect();
    let refs: Vec<&EvalSample> = clean_eval.iter().collect();
    let r = trainer::evaluate_net(&teacher, &refs, &protocol).unwrap();
    println!("teacher clean absRel = {:.4}", r.abs_rel);

    let mut samples: Vec<TrainSample> = Vec::new();
    for t in &triplets {
        samples.push(TrainSample {
            triplet: t.clone(),
            input_t: t.image_t.clone(),
            kind: SampleKind::Clear,
        });
        for kind in KINDS {
            samples.push(TrainSample {
                triplet: t.clone(),
                input_t: degrade_frame(t, kind, 1000),
                kind: SampleKind::Degraded(kind.into()),
            });
        }
    }
    let eval_set: Vec<EvalSample> = KINDS
        .iter()
        .flat_map(|kind| {
            triplets.iter().map(move |t| EvalSample {
                image: degrade_frame(t, kind, 2000),
                depth_gt: t.depth_gt.clone(),
                condition: kind.to_string(),
            })
        })
        .collect();
    let eval_refs: Vec<&EvalSample> = eval_set.iter().collect();

    let base12 = TrainConfig {
        epochs: 12,
        batch_size: 4,
        hidden: 32,
        scales: 4,
        learning_rate: 1.5e-3,
        lr_decay_period: 10,
        fcc_start_epoch: 5,
        student_init_from_teacher: false,
        ..TrainConfig::default()
    };
    {
        let r = trainer::evaluate_net(&teacher, &eval_refs, &protocol).unwrap();
        println!("teacher degraded absRel = {:.4}", r.abs_rel);
    }
    let configs = [
        ("dl12", true, false, false),
        ("ogd12", true, true, false),
        ("full12", true, true, true),
        ("dl8", true, false, false),
        ("ogd8", true, true, false),
        ("full8", true, true, true),
    ];
    for (label, dl, ogd, fcc) in configs {
        let base = if label.ends_with('8') {
            TrainConfig {
                epochs: 8,
                lr_decay_period: 7,
                fcc_start_epoch: 3,
                ..base12.clone()
            }
        } else {
            base12.clone()
        };
        let mut abs_rels = Vec::new();
        let t1 = std::time::Instant::now();
        for seed in 1..=3u64 {
            let cfg = TrainConfig {
                distillation: dl,
                ordinal: ogd,
                consistency: fcc,
                seed,
                ..base.clone()
            };
            let oracle = JitteredGtOracle { seed: 0x0acd ^ seed };
            let (student, _) =
                trainer::train_student(&samples, &k, &teacher, &oracle, &cfg).unwrap();
            let r = trainer::evaluate_net(&student, &eval_refs, &protocol).unwrap();
            abs_rels.push(r.abs_rel);
        }
        let mean = abs_rels.iter().sum::<f64>() / abs_rels.len() as f64;
        println!(
            "{label:>7}: absRel mean {:.4} (seeds: {:?}) in {:?}",
            mean,
            abs_rels.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            t1.elapsed()
        );
    }
    println!("total {:?}", total.elapsed());
}
