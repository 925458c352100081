//! Run manifests: one per command invocation, written alongside the
//! outputs.
//!
//! All fields except `wall_clock_s` are deterministic for a given
//! invocation, so byte comparisons of reproduced runs exclude exactly
//! that line.

use std::path::Path;

use crate::error::AppResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Generator named so external reimplementations can match streams.
pub const PRNG_NAME: &str = "splitmix64";

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Value of ACDEPTH_THREADS, if set.
    pub threads_cap: Option<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            threads_cap: std::env::var("ACDEPTH_THREADS").ok(),
            wall_clock_s: 0.0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command = {}\n", self.command));
        out.push_str(&format!("tool_version = {TOOL_VERSION}\n"));
        out.push_str(&format!("prng = {PRNG_NAME}\n"));
        if let Some(c) = &self.config_path {
            out.push_str(&format!("config = {c}\n"));
        }
        if !self.seeds.is_empty() {
            let seeds = self
                .seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!("seeds = {seeds}\n"));
        }
        for i in &self.inputs {
            out.push_str(&format!("input = {i}\n"));
        }
        for o in &self.outputs {
            out.push_str(&format!("output = {o}\n"));
        }
        if let Some(t) = &self.threads_cap {
            out.push_str(&format!("threads_cap = {t}\n"));
        }
        out.push_str(&format!("wall_clock_s = {:.3}\n", self.wall_clock_s));
        out
    }

    pub fn to_json(&self) -> String {
        let list = |v: &[String]| {
            v.iter()
                .map(|s| format!("\"{s}\""))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{{\"command\": \"{}\", \"tool_version\": \"{TOOL_VERSION}\", \"prng\": \"{PRNG_NAME}\", \"config\": {}, \"seeds\": [{}], \"inputs\": [{}], \"outputs\": [{}], \"threads_cap\": {}, \"wall_clock_s\": {:.3}}}\n",
            self.command,
            self.config_path
                .as_ref()
                .map_or("null".to_string(), |c| format!("\"{c}\"")),
            self.seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            list(&self.inputs),
            list(&self.outputs),
            self.threads_cap
                .as_ref()
                .map_or("null".to_string(), |t| format!("\"{t}\"")),
            self.wall_clock_s
        )
    }

    pub fn write(&self, dir: &Path, json: bool) -> AppResult<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("run_manifest.txt"), self.to_text())?;
        if json {
            std::fs::write(dir.join("run_manifest.json"), self.to_json())?;
        }
        Ok(())
    }
}

/// Manifest text with the wall-clock line removed, for reproducibility
/// comparisons.
pub fn strip_wall_clock(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("wall_clock_s"))
        .map(|l| format!("{l}\n"))
        .collect()
}
