//! End-to-end command-line tests over the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acdepth::scenes;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acdepth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!(
            "acdepth-cli-{tag}-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&p).unwrap();
        TempDir(p)
    }

    fn path(&self) -> &Path {
        &self.0
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn hash_tree(dir: &Path) -> Vec<(String, u64)> {
    let files = acdepth::dataset::file_inventory(dir).unwrap();
    files
        .iter()
        .filter(|p| !p.ends_with("run_manifest.txt") && !p.ends_with("run_manifest.json"))
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            let bytes = std::fs::read(p).unwrap();
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for b in bytes {
                h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
            }
            (rel, h)
        })
        .collect()
}

#[test]
fn synth_writes_expected_layout_and_is_reproducible() {
    let tmp = TempDir::new("synth");
    let scene = tmp.file("scene.txt", scenes::SMOKE_SCENE);
    // Output dir intentionally missing: the command creates it.
    let out_a = tmp.path().join("a/nested");
    let out = run(&[
        "synth",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
        "--kinds",
        "night,fog",
        "--seed",
        "7",
    ]);
    assert_ok(&out);

    // 10-frame trajectory -> 8 interior triplets; clean + 2 degraded
    // variants of the middle frame each.
    let sample_dirs: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .collect();
    assert_eq!(sample_dirs.len(), 8);
    let t1 = out_a.join("t0001");
    for f in [
        "clean_prev.ppm",
        "clean_t.ppm",
        "clean_next.ppm",
        "depth_t.pfm",
        "night_t.ppm",
        "fog_t.ppm",
    ] {
        assert!(t1.join(f).exists(), "missing {f}");
    }
    assert!(out_a.join("dataset.txt").exists());
    assert!(out_a.join("run_manifest.txt").exists());

    // Same seed reruns byte-identically.
    let out_b = tmp.path().join("b");
    let out = run(&[
        "synth",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--kinds",
        "night,fog",
        "--seed",
        "7",
    ]);
    assert_ok(&out);
    assert_eq!(hash_tree(&out_a), hash_tree(&out_b));

    // Different seed differs somewhere (noise draws).
    let out_c = tmp.path().join("c");
    assert_ok(&run(&[
        "synth",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--kinds",
        "night,fog",
        "--seed",
        "8",
    ]));
    assert_ne!(hash_tree(&out_a), hash_tree(&out_c));
}

#[test]
fn synth_reports_scene_errors_with_line_numbers() {
    let tmp = TempDir::new("synth-err");
    let scene = tmp.file("bad.txt", "width = 8\nheight = 8\nwat = 1\n");
    let out = run(&[
        "synth",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":3"), "stderr: {err}");
    assert!(err.contains("wat"), "stderr: {err}");
}

const FAST_TEACHER_CFG: &str = "\
epochs = 2
batch_size = 2
hidden = 8
scales = 1
learning_rate = 0.001
fcc_start_epoch = 0
";

const FAST_STUDENT_CFG: &str = "\
epochs = 2
batch_size = 2
hidden = 8
scales = 2
fcc_start_epoch = 0
";

fn synth_smoke(tmp: &TempDir) -> PathBuf {
    let scene = tmp.file("scene.txt", scenes::SMOKE_SCENE);
    let data = tmp.path().join("data");
    assert_ok(&run(&[
        "synth",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--kinds",
        "night,fog",
        "--seed",
        "3",
    ]));
    data
}

#[test]
fn train_teacher_then_student_produces_checkpoints_and_logs() {
    let tmp = TempDir::new("train");
    let data = synth_smoke(&tmp);
    let teacher_cfg = tmp.file("teacher.cfg", FAST_TEACHER_CFG);
    let teacher_out = tmp.path().join("teacher");
    assert_ok(&run(&[
        "train",
        "--role",
        "teacher",
        "--config",
        teacher_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        teacher_out.to_str().unwrap(),
        "--seed",
        "11",
    ]));
    let teacher_ckpt = teacher_out.join("teacher.ckpt");
    assert!(teacher_ckpt.exists());
    let log = std::fs::read_to_string(teacher_out.join("teacher_log.csv")).unwrap();
    assert!(log.starts_with("step,epoch,L,L_p,L_e,lr\n"));

    let student_cfg = tmp.file("student.cfg", FAST_STUDENT_CFG);
    let student_out = tmp.path().join("student");
    assert_ok(&run(&[
        "train",
        "--role",
        "student",
        "--config",
        student_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--teacher",
        teacher_ckpt.to_str().unwrap(),
        "--out",
        student_out.to_str().unwrap(),
        "--seed",
        "12",
    ]));
    assert!(student_out.join("student.ckpt").exists());
    let log = std::fs::read_to_string(student_out.join("student_log.csv")).unwrap();
    assert!(log.starts_with("step,epoch,L,L_d,L_r,L_c,lr\n"));
    assert!(log.lines().count() > 1);
}

#[test]
fn student_without_teacher_checkpoint_is_refused() {
    let tmp = TempDir::new("noteacher");
    let data = synth_smoke(&tmp);
    let out = run(&[
        "train",
        "--role",
        "student",
        "--data",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("s").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--teacher"), "stderr: {err}");

    // Pointing at a missing file also fails cleanly.
    let out = run(&[
        "train",
        "--role",
        "student",
        "--data",
        data.to_str().unwrap(),
        "--teacher",
        tmp.path().join("missing.ckpt").to_str().unwrap(),
        "--out",
        tmp.path().join("s2").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn invalid_config_key_is_refused_by_name() {
    let tmp = TempDir::new("badcfg");
    let data = synth_smoke(&tmp);
    let cfg = tmp.file("bad.cfg", "epochz = 3\n");
    let out = run(&[
        "train",
        "--role",
        "teacher",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epochz"), "stderr: {err}");
}

#[test]
fn student_with_all_toggles_off_keeps_init_weights() {
    let tmp = TempDir::new("toggles");
    let data = synth_smoke(&tmp);
    let teacher_cfg = tmp.file("teacher.cfg", FAST_TEACHER_CFG);
    let teacher_out = tmp.path().join("teacher");
    assert_ok(&run(&[
        "train",
        "--role",
        "teacher",
        "--config",
        teacher_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        teacher_out.to_str().unwrap(),
    ]));
    let teacher_ckpt = teacher_out.join("teacher.ckpt");

    let student_cfg = tmp.file("student.cfg", FAST_STUDENT_CFG);
    let student_out = tmp.path().join("student");
    assert_ok(&run(&[
        "train",
        "--role",
        "student",
        "--config",
        student_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--teacher",
        teacher_ckpt.to_str().unwrap(),
        "--out",
        student_out.to_str().unwrap(),
        "--no-dl",
        "--no-ogd",
        "--no-fcc",
    ]));
    // With every loss disabled the checkpoint equals the student's
    // initialization.
    let teacher = acdepth::checkpoint::load_checkpoint(&teacher_ckpt).unwrap();
    let student =
        acdepth::checkpoint::load_checkpoint(&student_out.join("student.ckpt")).unwrap();
    let mut cfg = acdepth::config_file::parse_config(FAST_STUDENT_CFG, "inline").unwrap();
    cfg.seed = 0; // no --seed passed
    let init = acdepth_core::trainer::student_initial_weights(&cfg, &teacher);
    let as_f32: Vec<f64> = init.weights.iter().map(|w| *w as f32 as f64).collect();
    assert_eq!(student.weights, as_f32);
}

#[test]
fn eval_debug_oracle_and_condition_filters() {
    let tmp = TempDir::new("eval");
    let data = synth_smoke(&tmp);
    let teacher_cfg = tmp.file("teacher.cfg", FAST_TEACHER_CFG);
    let teacher_out = tmp.path().join("teacher");
    assert_ok(&run(&[
        "train",
        "--role",
        "teacher",
        "--config",
        teacher_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        teacher_out.to_str().unwrap(),
    ]));
    let ckpt = teacher_out.join("teacher.ckpt");

    // Perfect oracle injection: absRel = 0 for every condition.
    let eval_out = tmp.path().join("eval1");
    assert_ok(&run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--debug-oracle",
        "--json",
    ]));
    let csv = std::fs::read_to_string(eval_out.join("metrics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3); // clear, night, fog
    for row in &rows {
        let abs_rel: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(abs_rel, 0.0, "row: {row}");
    }
    assert!(eval_out.join("metrics.json").exists());

    // x2-scaled oracle without median scaling: absRel exactly 1.
    let eval_out = tmp.path().join("eval2");
    assert_ok(&run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--debug-oracle",
        "--debug-oracle-scale",
        "2",
        "--no-scale",
        "--conditions",
        "clear",
    ]));
    let csv = std::fs::read_to_string(eval_out.join("metrics.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let abs_rel: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(abs_rel, 1.0);

    // Condition filter yields a single row; absent condition is an error.
    let eval_out = tmp.path().join("eval3");
    assert_ok(&run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--conditions",
        "night",
    ]));
    let csv = std::fs::read_to_string(eval_out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("teacher,night,"));

    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("eval4").to_str().unwrap(),
        "--conditions",
        "rain",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rain"));
}

#[test]
fn ablate_emits_table_shaped_csv() {
    let tmp = TempDir::new("ablate");
    let data = synth_smoke(&tmp);
    let teacher_cfg = tmp.file("teacher.cfg", FAST_TEACHER_CFG);
    let teacher_out = tmp.path().join("teacher");
    assert_ok(&run(&[
        "train",
        "--role",
        "teacher",
        "--config",
        teacher_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        teacher_out.to_str().unwrap(),
    ]));

    let base_cfg = tmp.file("base.cfg", FAST_STUDENT_CFG);
    let matrix = tmp.file(
        "matrix.txt",
        "row = none 0 0 0 1 1 1 seeds 1\nrow = full 1 1 1 1 1 1 seeds 1\n",
    );
    let out_dir = tmp.path().join("ablation");
    assert_ok(&run(&[
        "ablate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--config",
        base_cfg.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--teacher",
        teacher_out.join("teacher.ckpt").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--conditions",
        "night,fog",
    ]));
    let csv = std::fs::read_to_string(out_dir.join("ablation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "label,DL,OGD,FCC,G,L,W,seeds,night_absRel,night_RMSE,night_delta1,fog_absRel,fog_RMSE,fog_delta1"
    );
    assert_eq!(lines.count(), 2);

    // Malformed matrix rows are rejected with the line number.
    let bad = tmp.file("bad_matrix.txt", "row = oops 1 1 1 1 1 seeds 1\n");
    let out = run(&[
        "ablate",
        "--matrix",
        bad.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--teacher",
        teacher_out.join("teacher.ckpt").to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1"));
}

#[test]
fn gradcheck_passes_and_fault_injection_names_path() {
    let tmp = TempDir::new("gradcheck");
    let out_dir = tmp.path().join("g");
    let out = run(&[
        "gradcheck",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(out_dir.join("gradcheck.txt").exists());

    // Repeated runs with the same seed print identical reports.
    let again = run(&["gradcheck", "--seed", "5"]);
    assert_eq!(out.stdout, again.stdout);

    // Injected sign flip fails and names the path.
    let out = run(&["gradcheck", "--seed", "5", "--fault", "ranking"]);
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL ranking"), "{text}");
}

#[test]
fn unknown_command_and_flags_are_usage_errors() {
    let out = run(&["frobnicate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));

    let out = run(&["synth", "--scene"]);
    assert!(!out.status.success());
}
