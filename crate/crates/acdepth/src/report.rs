//! CSV and JSON serialization for logs, metric reports, ablation
//! tables, and sampled pair dumps.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical values always produce identical bytes.

use acdepth_core::ogd::{OrdinalPair, PairSet};
use acdepth_core::trainer::{AblationRowResult, StudentStepLog, TeacherStepLog};
use acdepth_core::DepthEvalReport;

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn teacher_log_csv(logs: &[TeacherStepLog]) -> String {
    let mut out = String::from("step,epoch,L,L_p,L_e,lr\n");
    for l in logs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            l.step,
            l.epoch,
            fmt(l.loss),
            fmt(l.photometric),
            fmt(l.smoothness),
            fmt(l.lr)
        ));
    }
    out
}

pub fn student_log_csv(logs: &[StudentStepLog]) -> String {
    let mut out = String::from("step,epoch,L,L_d,L_r,L_c,lr\n");
    for l in logs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            l.step,
            l.epoch,
            fmt(l.loss),
            fmt(l.distillation),
            fmt(l.ranking),
            fmt(l.consistency),
            fmt(l.lr)
        ));
    }
    out
}

pub const EVAL_CSV_HEADER: &str =
    "model,condition,absRel,sqRel,RMSE,delta1,RMSE_log,delta2,delta3,valid_pixels,scale_factor\n";

pub fn eval_row_csv(model: &str, condition: &str, r: &DepthEvalReport) -> String {
    format!(
        "{model},{condition},{},{},{},{},{},{},{},{},{}\n",
        fmt(r.abs_rel),
        fmt(r.sq_rel),
        fmt(r.rmse),
        fmt(r.delta1),
        fmt(r.rmse_log),
        fmt(r.delta2),
        fmt(r.delta3),
        r.valid_pixels,
        fmt(r.scale_factor)
    )
}

pub fn eval_rows_json(model: &str, rows: &[(String, DepthEvalReport)]) -> String {
    let mut out = String::from("[\n");
    for (i, (condition, r)) in rows.iter().enumerate() {
        out.push_str(&format!(
            "  {{\"model\": \"{model}\", \"condition\": \"{condition}\", \"absRel\": {}, \"sqRel\": {}, \"RMSE\": {}, \"delta1\": {}, \"RMSE_log\": {}, \"delta2\": {}, \"delta3\": {}, \"valid_pixels\": {}, \"scale_factor\": {}}}{}\n",
            fmt(r.abs_rel),
            fmt(r.sq_rel),
            fmt(r.rmse),
            fmt(r.delta1),
            fmt(r.rmse_log),
            fmt(r.delta2),
            fmt(r.delta3),
            r.valid_pixels,
            fmt(r.scale_factor),
            if i + 1 < rows.len() { "," } else { "" }
        ));
    }
    out.push_str("]\n");
    out
}

/// Ablation table: one row per configuration, toggles plus absRel/RMSE/
/// delta1 per condition, in the eval set's condition order.
pub fn ablation_csv(rows: &[AblationRowResult], conditions: &[String]) -> String {
    let mut out = String::from("label,DL,OGD,FCC,G,L,W,seeds");
    for c in conditions {
        out.push_str(&format!(",{c}_absRel,{c}_RMSE,{c}_delta1"));
    }
    out.push('\n');
    for row in rows {
        let seeds = row
            .seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("|");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            row.label,
            row.config.distillation as u8,
            row.config.ordinal as u8,
            row.config.consistency as u8,
            row.config.global_pairs as u8,
            row.config.local_pairs as u8,
            row.config.sampling.window as u8,
            seeds
        ));
        for c in conditions {
            match row.per_condition.iter().find(|(cond, _)| cond == c) {
                Some((_, r)) => out.push_str(&format!(
                    ",{},{},{}",
                    fmt(r.abs_rel),
                    fmt(r.rmse),
                    fmt(r.delta1)
                )),
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Debug dump of sampled ordinal pairs.
pub fn pairs_csv(local: &[OrdinalPair], global: &[OrdinalPair]) -> String {
    let mut out =
        String::from("location0_x,location0_y,location1_x,location1_y,p0,p1,p0_star,p1_star,label,tag\n");
    for p in local.iter().chain(global.iter()) {
        let tag = match p.set {
            PairSet::Local => "local",
            PairSet::Global => "global",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{tag}\n",
            p.location0.0,
            p.location0.1,
            p.location1.0,
            p.location1.1,
            fmt(p.p0),
            fmt(p.p1),
            fmt(p.p0_star),
            fmt(p.p1_star),
            p.label
        ));
    }
    out
}

/// Gradient-check report lines, one per path.
pub fn gradcheck_text(reports: &[acdepth_core::gradcheck::PathReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "{} {} max_rel_err={:.3e} checks={}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.max_rel_error,
            r.checks
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic() {
        let logs = vec![TeacherStepLog {
            step: 0,
            epoch: 0,
            loss: 0.125,
            photometric: 0.1,
            smoothness: 25.0,
            lr: 5e-4,
        }];
        let a = teacher_log_csv(&logs);
        let b = teacher_log_csv(&logs);
        assert_eq!(a, b);
        assert!(a.starts_with("step,epoch,L,L_p,L_e,lr\n"));
        assert!(a.contains("0,0,0.125,0.1,25,0.0005"));
    }

    #[test]
    fn eval_row_has_table_column_order() {
        let r = DepthEvalReport {
            abs_rel: 0.5,
            sq_rel: 0.5,
            rmse: 0.7071,
            rmse_log: 0.1,
            delta1: 50.0,
            delta2: 75.0,
            delta3: 100.0,
            valid_pixels: 2,
            scale_factor: 1.0,
        };
        let row = eval_row_csv("teacher", "night", &r);
        assert!(row.starts_with("teacher,night,0.5,0.5,0.7071,50,"));
    }
}
