//! Training configuration files: `key = value` lines mapping onto the
//! trainer configuration. Unknown keys are refused by name.

use std::path::Path;

use acdepth_core::ogd::GammaMode;
use acdepth_core::trainer::TrainConfig;

use crate::error::{parse_err, AppResult};

/// Documented keys, kept in sync with [`apply_key`].
pub const CONFIG_KEYS: &[&str] = &[
    "epochs",
    "learning_rate",
    "lr_decay_factor",
    "lr_decay_period",
    "lambda1",
    "lambda2",
    "smoothness_weight",
    "theta",
    "scales",
    "hidden",
    "tau",
    "local_ratio",
    "global_ratio",
    "gamma_mode",
    "window",
    "distillation",
    "ordinal",
    "consistency",
    "global_pairs",
    "local_pairs",
    "fcc_start_epoch",
    "seed",
    "batch_size",
    "clear_fraction",
    "dl_degraded_only",
    "optimize_pose",
    "student_init_from_teacher",
];

fn parse_bool(tok: &str) -> Option<bool> {
    match tok {
        "true" | "1" | "on" | "yes" => Some(true),
        "false" | "0" | "off" | "no" => Some(false),
        _ => None,
    }
}

fn apply_key(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<(), String> {
    let f = || -> Result<f64, String> {
        value
            .trim()
            .parse()
            .map_err(|_| format!("bad float for {key:?}: {value:?}"))
    };
    let u = || -> Result<usize, String> {
        value
            .trim()
            .parse()
            .map_err(|_| format!("bad integer for {key:?}: {value:?}"))
    };
    let b = || -> Result<bool, String> {
        parse_bool(value.trim()).ok_or(format!("bad boolean for {key:?}: {value:?}"))
    };
    match key {
        "epochs" => cfg.epochs = u()?,
        "learning_rate" => cfg.learning_rate = f()?,
        "lr_decay_factor" => cfg.lr_decay_factor = f()?,
        "lr_decay_period" => cfg.lr_decay_period = u()?,
        "lambda1" => cfg.lambda1 = f()?,
        "lambda2" => cfg.lambda2 = f()?,
        "smoothness_weight" => cfg.smoothness_weight = f()?,
        "theta" => cfg.theta = f()?,
        "scales" => cfg.scales = u()?,
        "hidden" => cfg.hidden = u()?,
        "tau" => cfg.sampling.tau = f()?,
        "local_ratio" => cfg.sampling.local_ratio = f()?,
        "global_ratio" => cfg.sampling.global_ratio = f()?,
        "gamma_mode" => {
            let v = value.trim();
            cfg.sampling.gamma_mode = if v == "percentile" {
                GammaMode::Percentile95
            } else if let Some(t) = v.strip_prefix("fixed:") {
                GammaMode::Fixed(
                    t.parse()
                        .map_err(|_| format!("bad fixed gamma value {t:?}"))?,
                )
            } else {
                return Err(format!(
                    "bad gamma_mode {v:?} (expected percentile or fixed:<v>)"
                ));
            };
        }
        "window" => cfg.sampling.window = b()?,
        "distillation" => cfg.distillation = b()?,
        "ordinal" => cfg.ordinal = b()?,
        "consistency" => cfg.consistency = b()?,
        "global_pairs" => cfg.global_pairs = b()?,
        "local_pairs" => cfg.local_pairs = b()?,
        "fcc_start_epoch" => cfg.fcc_start_epoch = u()?,
        "seed" => {
            cfg.seed = value
                .trim()
                .parse()
                .map_err(|_| format!("bad seed {value:?}"))?
        }
        "batch_size" => cfg.batch_size = u()?,
        "clear_fraction" => cfg.clear_fraction = f()?,
        "dl_degraded_only" => cfg.dl_degraded_only = b()?,
        "optimize_pose" => cfg.optimize_pose = b()?,
        "student_init_from_teacher" => cfg.student_init_from_teacher = b()?,
        other => return Err(format!("unknown config key {other:?}")),
    }
    Ok(())
}

/// Parse a config on top of defaults. `file` labels diagnostics.
pub fn parse_config(text: &str, file: &str) -> AppResult<TrainConfig> {
    let mut cfg = TrainConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(file, i + 1, "expected 'key = value'"))?;
        apply_key(&mut cfg, key.trim(), value).map_err(|m| parse_err(file, i + 1, m))?;
    }
    cfg.validate().map_err(|e| parse_err(file, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> AppResult<TrainConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}
