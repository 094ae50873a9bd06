//! Output directories, their manifests and the text formats written into them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use neckpinch_core::flow::RunResult;
use neckpinch_core::io::write_profile_string;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub role: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub config_echo: serde_json::Value,
    pub artifact_index: Vec<Artifact>,
    /// Wall-clock seconds per phase.
    pub timing: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Collects the files of one run and writes its manifest last.
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl OutputDir {
    pub fn create<C: Serialize>(root: &Path, command: &str, config: &C, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
        let config_echo = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                status: "ok".into(),
                error: None,
                config_echo,
                artifact_index: Vec::new(),
                timing: BTreeMap::new(),
                seed,
            },
            clock: Instant::now(),
        })
    }

    pub fn write(&mut self, rel: &str, role: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.manifest.artifact_index.push(Artifact { path: rel.into(), role: role.into() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, role: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write(rel, role, &text)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, rel: &str, role: &str, rows: &[T]) -> Result<(), CliError> {
        let mut text = String::new();
        for r in rows {
            text.push_str(&serde_json::to_string(r).map_err(|e| CliError::Config(e.to_string()))?);
            text.push('\n');
        }
        self.write(rel, role, &text)
    }

    /// Records the time since the previous lap under `phase`.
    pub fn lap(&mut self, phase: &str) {
        self.manifest.timing.insert(phase.into(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    pub fn set_status(&mut self, status: &str, error: Option<String>) {
        self.manifest.status = status.into();
        self.manifest.error = error;
    }

    /// Runs `body`, then writes the manifest whether or not it succeeded, so
    /// a failed run still indexes its partial outputs.
    pub fn run<F>(mut self, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut OutputDir) -> Result<(), CliError>,
    {
        let result = body(&mut self);
        if let Err(e) = &result {
            if self.manifest.status == "ok" {
                self.set_status("failed", Some(e.to_string()));
            }
        }
        self.finish()?;
        result
    }

    fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.artifact_index.push(Artifact { path: MANIFEST.into(), role: "manifest".into() });
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(self.manifest)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Fixed precision CSV: a header and rows of numbers in `%.12e` form.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{:.12e}", c[i])).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Snapshots, per-snapshot diagnostics and the classification of one run,
/// written under `prefix`.
pub fn write_run(out: &mut OutputDir, prefix: &str, run: &RunResult, extra: serde_json::Value) -> Result<(), CliError> {
    for (i, snap) in run.snapshots.iter().enumerate() {
        out.write(&format!("{prefix}snapshots/snap_{i:05}.txt"), "snapshot", &write_profile_string(&snap.grid))?;
    }
    let diagnostics: Vec<_> = run.snapshots.iter().map(|s| &s.diagnostics).collect();
    out.write_jsonl(&format!("{prefix}diagnostics.jsonl"), "diagnostics", &diagnostics)?;
    let mut report = serde_json::json!({
        "report": run.report,
        "stop": run.stop,
        "steps": run.steps,
        "snapshots": run.snapshots.len(),
    });
    if let (Some(map), serde_json::Value::Object(extra)) = (report.as_object_mut(), extra) {
        map.extend(extra);
    }
    out.write_json(&format!("{prefix}singularity.json"), "singularity report", &report)
}
