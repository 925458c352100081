//! Command implementations and argument handling.
//!
//! Conventions: diagnostics go to stderr, data goes to files; every
//! command writes one run manifest next to its outputs; exit code 0
//! means no errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use acdepth_core::gradcheck;
use acdepth_core::trainer::{
    self, AblationRow, EvalProtocol, JitteredGtOracle, TrainConfig,
};
use acdepth_core::PixelGrid;

use crate::checkpoint;
use crate::config_file;
use crate::dataset;
use crate::error::{parse_err, AppError, AppResult};
use crate::manifest::RunManifest;
use crate::report;
use crate::scene_file;

const USAGE: &str = "\
usage: acdepth <command> [options]

commands:
  synth      render a dataset from a scene description
             --scene <file> --out <dir> [--kinds night,fog] [--seed N] [--json]
  train      train the teacher or the student
             --role teacher|student --data <dir> --out <dir>
             [--config <file>] [--teacher <ckpt>] [--seed N]
             [--no-dl] [--no-ogd] [--no-fcc]
             [--no-global] [--no-local] [--no-window] [--json]
  eval       evaluate a checkpoint per condition
             --checkpoint <ckpt> --data <dir> --out <dir>
             [--conditions clear,night,...] [--no-scale] [--json]
             [--debug-oracle] [--debug-oracle-scale F]
  ablate     train and evaluate an ablation matrix
             --matrix <file> --data <dir> --teacher <ckpt> --out <dir>
             [--config <file>] [--conditions ...] [--oracle-seed N] [--json]
  gradcheck  verify every analytic gradient path against finite differences
             [--seed N] [--fault <path>] [--out <dir>] [--json]

ACDEPTH_THREADS caps internal parallelism (recorded in the manifest;
the current implementation is single-threaded).
";

const BOOL_FLAGS: &[&str] = &[
    "json",
    "no-dl",
    "no-ogd",
    "no-fcc",
    "no-global",
    "no-local",
    "no-window",
    "no-scale",
    "debug-oracle",
];

struct Args {
    flags: BTreeMap<String, String>,
    bools: Vec<String>,
}

impl Args {
    fn parse(argv: &[String]) -> AppResult<Args> {
        let mut flags = BTreeMap::new();
        let mut bools = Vec::new();
        let mut i = 0;
        while i < argv.len() {
            let a = &argv[i];
            let name = a
                .strip_prefix("--")
                .ok_or_else(|| AppError::Usage(format!("unexpected argument {a:?}")))?;
            if BOOL_FLAGS.contains(&name) {
                bools.push(name.to_string());
                i += 1;
            } else {
                let value = argv
                    .get(i + 1)
                    .ok_or_else(|| AppError::Usage(format!("flag --{name} needs a value")))?;
                flags.insert(name.to_string(), value.clone());
                i += 2;
            }
        }
        Ok(Args { flags, bools })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags.get(name).map(|s| s.as_str())
    }

    fn require(&self, name: &str) -> AppResult<&str> {
        self.get(name)
            .ok_or_else(|| AppError::Usage(format!("missing required flag --{name}")))
    }

    fn has(&self, name: &str) -> bool {
        self.bools.iter().any(|b| b == name)
    }

    fn seed(&self) -> AppResult<Option<u64>> {
        match self.get("seed") {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| AppError::Usage(format!("bad --seed value {s:?}"))),
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    match dispatch(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, AppError::Usage(_)) {
                eprintln!("{USAGE}");
            }
            1
        }
    }
}

fn dispatch(argv: &[String]) -> AppResult<i32> {
    let Some(command) = argv.first() else {
        return Err(AppError::Usage("no command given".to_string()));
    };
    let args = Args::parse(&argv[1..])?;
    match command.as_str() {
        "synth" => cmd_synth(&args),
        "train" => cmd_train(&args),
        "eval" => cmd_eval(&args),
        "ablate" => cmd_ablate(&args),
        "gradcheck" => cmd_gradcheck(&args),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(0)
        }
        other => Err(AppError::Usage(format!("unknown command {other:?}"))),
    }
}

fn cmd_synth(args: &Args) -> AppResult<i32> {
    let start = Instant::now();
    let scene_path = PathBuf::from(args.require("scene")?);
    let out_dir = PathBuf::from(args.require("out")?);
    let seed = args.seed()?.unwrap_or(0);
    let kinds: Vec<String> = match args.get("kinds") {
        Some(s) if !s.is_empty() => s.split(',').map(|k| k.trim().to_string()).collect(),
        _ => vec!["night".to_string(), "fog".to_string()],
    };

    let spec = scene_file::load_scene(&scene_path)?;
    let written = dataset::write_dataset(&spec, &kinds, &out_dir, seed)?;
    eprintln!(
        "wrote {} triplets x {} variants to {}",
        written.len(),
        kinds.len() + 1,
        out_dir.display()
    );

    let mut m = RunManifest::new("synth");
    m.seeds = vec![seed];
    m.inputs.push(scene_path.display().to_string());
    m.outputs.push(out_dir.display().to_string());
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&out_dir, args.has("json"))?;
    Ok(0)
}

fn apply_toggle_flags(cfg: &mut TrainConfig, args: &Args) {
    if args.has("no-dl") {
        cfg.distillation = false;
    }
    if args.has("no-ogd") {
        cfg.ordinal = false;
    }
    if args.has("no-fcc") {
        cfg.consistency = false;
    }
    if args.has("no-global") {
        cfg.global_pairs = false;
    }
    if args.has("no-local") {
        cfg.local_pairs = false;
    }
    if args.has("no-window") {
        cfg.sampling.window = false;
    }
}

/// Desk-scale teacher defaults: more epochs than the student run, with
/// one learning-rate decay late in training.
pub fn teacher_default_config() -> TrainConfig {
    TrainConfig {
        epochs: 180,
        learning_rate: 3e-3,
        lr_decay_period: 90,
        scales: 1,
        ..TrainConfig::default()
    }
}

fn cmd_train(args: &Args) -> AppResult<i32> {
    let start = Instant::now();
    let role = args.require("role")?.to_string();
    let data_dir = PathBuf::from(args.require("data")?);
    let out_dir = PathBuf::from(args.require("out")?);
    std::fs::create_dir_all(&out_dir)?;

    let mut cfg = match (args.get("config"), role.as_str()) {
        (Some(p), _) => config_file::load_config(Path::new(p))?,
        (None, "teacher") => teacher_default_config(),
        (None, _) => TrainConfig::default(),
    };
    if let Some(seed) = args.seed()? {
        cfg.seed = seed;
    }
    apply_toggle_flags(&mut cfg, args);

    let data = dataset::load_dataset(&data_dir)?;
    let mut m = RunManifest::new("train");
    m.config_path = args.get("config").map(|s| s.to_string());
    m.seeds = vec![cfg.seed];
    m.inputs.push(data_dir.display().to_string());

    match role.as_str() {
        "teacher" => {
            let (net, logs) = trainer::train_teacher(&data.triplets(), &data.intrinsics, &cfg)?;
            let ckpt = out_dir.join("teacher.ckpt");
            checkpoint::save_checkpoint(&net, &ckpt)?;
            std::fs::write(out_dir.join("teacher_log.csv"), report::teacher_log_csv(&logs))?;
            m.outputs.push(ckpt.display().to_string());
            m.outputs.push(out_dir.join("teacher_log.csv").display().to_string());
        }
        "student" => {
            let teacher_path = args.get("teacher").ok_or_else(|| {
                AppError::Usage(
                    "student role requires --teacher <checkpoint> from a prior teacher run"
                        .to_string(),
                )
            })?;
            let teacher = checkpoint::load_checkpoint(Path::new(teacher_path))?;
            let samples = data.mixed_samples();
            let oracle = JitteredGtOracle {
                seed: cfg.seed ^ 0x07ac1e,
            };
            let (net, logs) =
                trainer::train_student(&samples, &data.intrinsics, &teacher, &oracle, &cfg)?;
            let ckpt = out_dir.join("student.ckpt");
            checkpoint::save_checkpoint(&net, &ckpt)?;
            std::fs::write(out_dir.join("student_log.csv"), report::student_log_csv(&logs))?;
            m.inputs.push(teacher_path.to_string());
            m.outputs.push(ckpt.display().to_string());
            m.outputs.push(out_dir.join("student_log.csv").display().to_string());
        }
        other => {
            return Err(AppError::Usage(format!(
                "bad --role {other:?} (expected teacher or student)"
            )))
        }
    }

    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&out_dir, args.has("json"))?;
    eprintln!("{role} training finished in {:.1}s", start.elapsed().as_secs_f64());
    Ok(0)
}

fn cmd_eval(args: &Args) -> AppResult<i32> {
    let start = Instant::now();
    let ckpt_path = PathBuf::from(args.require("checkpoint")?);
    let data_dir = PathBuf::from(args.require("data")?);
    let out_dir = PathBuf::from(args.require("out")?);
    std::fs::create_dir_all(&out_dir)?;

    let net = checkpoint::load_checkpoint(&ckpt_path)?;
    let data = dataset::load_dataset(&data_dir)?;
    let conditions: Vec<String> = match args.get("conditions") {
        Some(s) => s.split(',').map(|c| c.trim().to_string()).collect(),
        None => {
            let mut all = vec!["clear".to_string()];
            all.extend(data.conditions.iter().cloned());
            all
        }
    };
    let protocol = EvalProtocol {
        median_scaling: !args.has("no-scale"),
        ..EvalProtocol::default()
    };
    let oracle_scale: Option<f64> = if args.has("debug-oracle") {
        Some(match args.get("debug-oracle-scale") {
            Some(s) => s
                .parse()
                .map_err(|_| AppError::Usage(format!("bad --debug-oracle-scale {s:?}")))?,
            None => 1.0,
        })
    } else {
        None
    };

    let eval_samples = data.eval_samples(&conditions)?;
    let model_name = ckpt_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());

    let mut csv = String::from(report::EVAL_CSV_HEADER);
    let mut rows = Vec::new();
    for cond in &conditions {
        let subset: Vec<&trainer::EvalSample> = eval_samples
            .iter()
            .filter(|s| &s.condition == cond)
            .collect();
        let rep = match oracle_scale {
            None => trainer::evaluate_net(&net, &subset, &protocol)?,
            Some(scale) => {
                // Debug injection: the prediction is the ground truth
                // under a uniform scale, bypassing the network.
                let mut reports = Vec::new();
                for s in &subset {
                    let pred: PixelGrid = s.depth_gt.map(|d| scale * d);
                    reports.push(trainer::evaluate_prediction(&pred, &s.depth_gt, &protocol)?);
                }
                trainer::average_reports(&reports)
            }
        };
        csv.push_str(&report::eval_row_csv(&model_name, cond, &rep));
        rows.push((cond.clone(), rep));
    }
    std::fs::write(out_dir.join("metrics.csv"), &csv)?;
    if args.has("json") {
        std::fs::write(
            out_dir.join("metrics.json"),
            report::eval_rows_json(&model_name, &rows),
        )?;
    }

    let mut m = RunManifest::new("eval");
    m.inputs.push(ckpt_path.display().to_string());
    m.inputs.push(data_dir.display().to_string());
    m.outputs.push(out_dir.join("metrics.csv").display().to_string());
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&out_dir, args.has("json"))?;
    Ok(0)
}

/// Parse an ablation matrix file: one
/// `row = label dl ogd fcc g l w seeds s1 s2 ...` line per row.
pub fn parse_matrix(text: &str, file: &str, base: &TrainConfig) -> AppResult<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(file, line_no, "expected 'row = ...'"))?;
        if key.trim() != "row" {
            return Err(parse_err(
                file,
                line_no,
                format!("unknown matrix key {:?}", key.trim()),
            ));
        }
        let toks: Vec<&str> = value.split_whitespace().collect();
        if toks.len() < 9 || toks[7] != "seeds" {
            return Err(parse_err(
                file,
                line_no,
                "row needs: label dl ogd fcc g l w seeds s1 [s2 ...]",
            ));
        }
        let flag = |t: &str, what: &str| -> AppResult<bool> {
            match t {
                "1" => Ok(true),
                "0" => Ok(false),
                _ => Err(parse_err(file, line_no, format!("bad {what} flag {t:?}"))),
            }
        };
        let mut config = base.clone();
        config.distillation = flag(toks[1], "DL")?;
        config.ordinal = flag(toks[2], "OGD")?;
        config.consistency = flag(toks[3], "FCC")?;
        config.global_pairs = flag(toks[4], "G")?;
        config.local_pairs = flag(toks[5], "L")?;
        config.sampling.window = flag(toks[6], "W")?;
        let seeds: Vec<u64> = toks[8..]
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(file, line_no, "bad seed list"))?;
        rows.push(AblationRow {
            label: toks[0].to_string(),
            config,
            seeds,
        });
    }
    if rows.is_empty() {
        return Err(parse_err(file, 0, "matrix has no rows"));
    }
    Ok(rows)
}

fn cmd_ablate(args: &Args) -> AppResult<i32> {
    let start = Instant::now();
    let matrix_path = PathBuf::from(args.require("matrix")?);
    let data_dir = PathBuf::from(args.require("data")?);
    let teacher_path = PathBuf::from(args.require("teacher")?);
    let out_dir = PathBuf::from(args.require("out")?);
    std::fs::create_dir_all(&out_dir)?;

    let base = match args.get("config") {
        Some(p) => config_file::load_config(Path::new(p))?,
        None => TrainConfig::default(),
    };
    let matrix_text = std::fs::read_to_string(&matrix_path)?;
    let rows = parse_matrix(&matrix_text, &matrix_path.display().to_string(), &base)?;

    let data = dataset::load_dataset(&data_dir)?;
    let teacher = checkpoint::load_checkpoint(&teacher_path)?;
    let conditions: Vec<String> = match args.get("conditions") {
        Some(s) => s.split(',').map(|c| c.trim().to_string()).collect(),
        None => data.conditions.clone(),
    };
    let eval_set = data.eval_samples(&conditions)?;
    let oracle_seed = match args.get("oracle-seed") {
        Some(s) => s
            .parse()
            .map_err(|_| AppError::Usage(format!("bad --oracle-seed {s:?}")))?,
        None => 0x0acd,
    };

    let results = trainer::run_ablation(
        &rows,
        &data.mixed_samples(),
        &eval_set,
        &teacher,
        &data.intrinsics,
        oracle_seed,
        &EvalProtocol::default(),
    )?;
    let csv = report::ablation_csv(&results, &conditions);
    std::fs::write(out_dir.join("ablation.csv"), &csv)?;

    let mut m = RunManifest::new("ablate");
    m.config_path = args.get("config").map(|s| s.to_string());
    m.inputs.push(matrix_path.display().to_string());
    m.inputs.push(data_dir.display().to_string());
    m.inputs.push(teacher_path.display().to_string());
    m.outputs.push(out_dir.join("ablation.csv").display().to_string());
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&out_dir, args.has("json"))?;
    Ok(0)
}

fn cmd_gradcheck(args: &Args) -> AppResult<i32> {
    let start = Instant::now();
    let seed = args.seed()?.unwrap_or(2024);
    let fault = args.get("fault");
    let reports = gradcheck::run_all_with_fault(seed, fault);
    let text = report::gradcheck_text(&reports);
    print!("{text}");
    let all_pass = reports.iter().all(|r| r.pass);

    if let Some(out) = args.get("out") {
        let out_dir = PathBuf::from(out);
        std::fs::create_dir_all(&out_dir)?;
        std::fs::write(out_dir.join("gradcheck.txt"), &text)?;
        let mut m = RunManifest::new("gradcheck");
        m.seeds = vec![seed];
        m.outputs.push(out_dir.join("gradcheck.txt").display().to_string());
        m.wall_clock_s = start.elapsed().as_secs_f64();
        m.write(&out_dir, args.has("json"))?;
    }
    Ok(if all_pass { 0 } else { 2 })
}
