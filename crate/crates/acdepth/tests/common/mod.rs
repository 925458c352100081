//! Shared fixtures for the acceptance suite: the canonical training
//! scene, dataset builders, and evaluation helpers.

#![allow(dead_code)]

use acdepth::scene_file::{parse_scene, SceneSpec};
use acdepth::scenes;
use acdepth_core::camera::CameraIntrinsics;
use acdepth_core::synth::{self, DegradationParams, FrameTriplet};
use acdepth_core::trainer::{EvalSample, SampleKind, TrainSample};
use acdepth_core::Rng;

/// The teacher-convergence scene (40 triplets at 80x64).
pub fn convergence_spec() -> SceneSpec {
    parse_scene(scenes::WALL_BOXES_SCENE, "wall_boxes").unwrap()
}

/// The distillation-study scene (40 triplets at 80x64).
pub fn mkd_spec() -> SceneSpec {
    parse_scene(scenes::STRIPES_SCENE, "stripes").unwrap()
}

/// Render every interior triplet of a scene.
pub fn render_triplets(spec: &SceneSpec) -> Vec<FrameTriplet> {
    (1..spec.scene.trajectory.len() - 1)
        .map(|t| synth::generate_triplet(&spec.scene, &spec.intrinsics, t).unwrap())
        .collect()
}

/// Degraded variant of a triplet's middle frame.
pub fn degrade_frame(
    triplet: &FrameTriplet,
    kind: &str,
    seed: u64,
) -> acdepth_core::PixelGrid {
    let params = DegradationParams::preset(kind).expect("known degradation kind");
    synth::degrade(
        &triplet.image_t,
        &triplet.depth_gt,
        &params,
        Rng::new(seed).fork(triplet.frame_index as u64).next_u64(),
    )
}

/// Mixed training set: one clear sample per triplet plus one per kind.
pub fn mixed_samples(triplets: &[FrameTriplet], kinds: &[&str], seed: u64) -> Vec<TrainSample> {
    let mut out = Vec::new();
    for t in triplets {
        out.push(TrainSample {
            triplet: t.clone(),
            input_t: t.image_t.clone(),
            kind: SampleKind::Clear,
        });
        for kind in kinds {
            out.push(TrainSample {
                triplet: t.clone(),
                input_t: degrade_frame(t, kind, seed),
                kind: SampleKind::Degraded(kind.to_string()),
            });
        }
    }
    out
}

/// Degraded evaluation set over held-out triplets.
pub fn eval_samples(triplets: &[FrameTriplet], kinds: &[&str], seed: u64) -> Vec<EvalSample> {
    let mut out = Vec::new();
    for kind in kinds {
        for t in triplets {
            out.push(EvalSample {
                image: degrade_frame(t, kind, seed),
                depth_gt: t.depth_gt.clone(),
                condition: kind.to_string(),
            });
        }
    }
    out
}

pub fn intrinsics(spec: &SceneSpec) -> CameraIntrinsics {
    spec.intrinsics
}

use std::sync::OnceLock;

use acdepth::report;
use acdepth_core::model::DepthNet;
use acdepth_core::trainer::{
    self, AblationRow, AblationRowResult, EvalProtocol, TrainConfig,
};
use acdepth_core::DepthEvalReport;

/// Teacher configuration for the convergence criterion: 2000 Adam steps
/// (40 triplets / batch 4 = 10 steps per epoch, 200 epochs).
pub fn convergence_teacher_config() -> TrainConfig {
    TrainConfig {
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
    }
}

/// Student base configuration for the distillation-trend criteria.
pub fn student_base_config() -> TrainConfig {
    TrainConfig {
        epochs: 25,
        batch_size: 4,
        hidden: 32,
        scales: 4,
        learning_rate: 1.5e-3,
        lr_decay_period: 20,
        fcc_start_epoch: 5,
        ..TrainConfig::default()
    }
}

pub const MKD_KINDS: [&str; 2] = ["night", "fog"];
pub const MKD_TRAIN_SEED: u64 = 1000;
pub const MKD_EVAL_SEED: u64 = 2000;
pub const MKD_ORACLE_SEED: u64 = 0x0acd;
pub const TREND_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Artifacts of one teacher-convergence pipeline run.
pub struct ConvergenceArtifacts {
    pub teacher: DepthNet,
    pub log_csv: String,
    pub metrics_csv: String,
    pub report: DepthEvalReport,
    pub train_seconds: f64,
}

/// Full criterion-5 pipeline: render, train, evaluate, serialize.
pub fn run_convergence_pipeline() -> ConvergenceArtifacts {
    let spec = convergence_spec();
    let triplets = render_triplets(&spec);
    assert_eq!(triplets.len(), 40);
    let cfg = convergence_teacher_config();
    let start = std::time::Instant::now();
    let (teacher, logs) = trainer::train_teacher(&triplets, &spec.intrinsics, &cfg).unwrap();
    let train_seconds = start.elapsed().as_secs_f64();
    let protocol = EvalProtocol::default();
    let mut reports = Vec::new();
    for t in &triplets {
        let pred = trainer::predict_depth(&teacher, &t.image_t);
        reports.push(trainer::evaluate_prediction(&pred, &t.depth_gt, &protocol).unwrap());
    }
    let report_avg = trainer::average_reports(&reports);
    let mut metrics_csv = String::from(report::EVAL_CSV_HEADER);
    metrics_csv.push_str(&report::eval_row_csv("teacher", "clear", &report_avg));
    ConvergenceArtifacts {
        teacher,
        log_csv: report::teacher_log_csv(&logs),
        metrics_csv,
        report: report_avg,
        train_seconds,
    }
}

static CONVERGENCE: OnceLock<ConvergenceArtifacts> = OnceLock::new();

pub fn convergence_artifacts() -> &'static ConvergenceArtifacts {
    CONVERGENCE.get_or_init(run_convergence_pipeline)
}

/// Artifacts shared by the distillation-trend criteria.
pub struct MkdFixture {
    pub teacher: DepthNet,
    pub teacher_log_csv: String,
    pub samples: Vec<acdepth_core::trainer::TrainSample>,
    pub eval_set: Vec<acdepth_core::trainer::EvalSample>,
    pub intrinsics: acdepth_core::CameraIntrinsics,
}

pub fn build_mkd_fixture() -> MkdFixture {
    let spec = mkd_spec();
    let triplets = render_triplets(&spec);
    let cfg = convergence_teacher_config();
    let (teacher, logs) = trainer::train_teacher(&triplets, &spec.intrinsics, &cfg).unwrap();
    let kinds: Vec<&str> = MKD_KINDS.to_vec();
    MkdFixture {
        teacher,
        teacher_log_csv: report::teacher_log_csv(&logs),
        samples: mixed_samples(&triplets, &kinds, MKD_TRAIN_SEED),
        eval_set: eval_samples(&triplets, &kinds, MKD_EVAL_SEED),
        intrinsics: spec.intrinsics,
    }
}

static MKD: OnceLock<MkdFixture> = OnceLock::new();

pub fn mkd_fixture() -> &'static MkdFixture {
    MKD.get_or_init(build_mkd_fixture)
}

/// Table-3-shaped component rows over the trend seeds.
pub fn component_rows() -> Vec<AblationRow> {
    let base = student_base_config();
    [
        ("none", false, false, false),
        ("dl", true, false, false),
        ("dl+ogd", true, true, false),
        ("full", true, true, true),
    ]
    .into_iter()
    .map(|(label, dl, ogd, fcc)| AblationRow {
        label: label.to_string(),
        config: TrainConfig {
            distillation: dl,
            ordinal: ogd,
            consistency: fcc,
            ..base.clone()
        },
        seeds: TREND_SEEDS.to_vec(),
    })
    .collect()
}

/// Table-4-shaped sampling rows (ordinal guidance on, varying G/L/W).
pub fn sampling_rows() -> Vec<AblationRow> {
    let base = TrainConfig {
        consistency: false,
        ..student_base_config()
    };
    [
        ("g", true, false, false),
        ("g+l", true, true, false),
        ("g+l+w", true, true, true),
    ]
    .into_iter()
    .map(|(label, g, l, w)| {
        let mut config = base.clone();
        config.global_pairs = g;
        config.local_pairs = l;
        config.sampling.window = w;
        AblationRow {
            label: label.to_string(),
            config,
            seeds: TREND_SEEDS.to_vec(),
        }
    })
    .collect()
}

/// Run an ablation over the MKD fixture and serialize it the same way
/// the CLI does.
pub fn run_mkd_ablation(fixture: &MkdFixture, rows: &[AblationRow]) -> (Vec<AblationRowResult>, String) {
    let results = trainer::run_ablation(
        rows,
        &fixture.samples,
        &fixture.eval_set,
        &fixture.teacher,
        &fixture.intrinsics,
        MKD_ORACLE_SEED,
        &EvalProtocol::default(),
    )
    .unwrap();
    let conditions: Vec<String> = MKD_KINDS.iter().map(|s| s.to_string()).collect();
    let csv = report::ablation_csv(&results, &conditions);
    (results, csv)
}

/// Mean absRel across the degraded conditions for one ablation row.
pub fn degraded_mean_abs_rel(row: &AblationRowResult) -> f64 {
    let vals: Vec<f64> = row.per_condition.iter().map(|(_, r)| r.abs_rel).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Cached first runs of the trend ablations, with their build times,
/// for reuse by the determinism criterion.
pub struct TrendArtifacts {
    pub results: Vec<AblationRowResult>,
    pub csv: String,
    pub seconds: f64,
}

fn build_trend(rows: &[AblationRow]) -> TrendArtifacts {
    let start = std::time::Instant::now();
    let fixture = mkd_fixture();
    let (results, csv) = run_mkd_ablation(fixture, rows);
    TrendArtifacts {
        results,
        csv,
        seconds: start.elapsed().as_secs_f64(),
    }
}

static COMPONENT_TREND: OnceLock<TrendArtifacts> = OnceLock::new();
static SAMPLING_TREND: OnceLock<TrendArtifacts> = OnceLock::new();

pub fn component_trend() -> &'static TrendArtifacts {
    COMPONENT_TREND.get_or_init(|| build_trend(&component_rows()))
}

pub fn sampling_trend() -> &'static TrendArtifacts {
    SAMPLING_TREND.get_or_init(|| build_trend(&sampling_rows()))
}
