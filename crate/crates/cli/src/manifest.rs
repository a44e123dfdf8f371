use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;

/// Outcome of one stage. Ordered by exit-code priority: a hypothesis
/// violation outranks budget exhaustion outranks a failed check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum StageStatus {
    Pass,
    HypothesisViolation(String),
    BudgetExhausted(String),
    CheckFailure(String),
    Skipped(String),
}

impl StageStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageStatus::Pass | StageStatus::Skipped(_) => 0,
            StageStatus::HypothesisViolation(_) => 2,
            StageStatus::BudgetExhausted(_) => 3,
            StageStatus::CheckFailure(_) => 4,
        }
    }
}

/// Picks the process exit code: hypothesis violations dominate (downstream
/// results are meaningless), then exhausted budgets, then failed checks.
pub fn resolve_exit(statuses: &[&StageStatus]) -> i32 {
    for code in [2, 3, 4] {
        if statuses.iter().any(|s| s.exit_code() == code) {
            return code;
        }
    }
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntry {
    pub name: String,
    #[serde(flatten)]
    pub status: StageStatus,
    /// Report file, relative to the output directory; absent for skipped
    /// stages.
    pub report: Option<String>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub artifact_version: String,
    pub config_sha256: String,
    pub stages: Vec<StageEntry>,
    /// Worst stage outcome, in exit-code terms.
    pub rollup: String,
    /// Every emitted file except the manifest itself, with content hashes.
    pub files: Vec<FileEntry>,
}

pub fn rollup_name(code: i32) -> &'static str {
    match code {
        0 => "pass",
        2 => "hypothesis-violation",
        3 => "budget-exhausted",
        4 => "check-failure",
        _ => "error",
    }
}

/// Serializes a report deterministically: pretty JSON plus a trailing
/// newline, no timestamps anywhere. Reruns with the same config and seed
/// produce byte-identical files.
pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value).context("serializing report")?;
    bytes.push(b'\n');
    let path = dir.join(name);
    fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn file_entry(dir: &Path, name: &str) -> Result<FileEntry> {
    let path = dir.join(name);
    let bytes = fs::read(&path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(FileEntry {
        path: name.to_string(),
        sha256: hex(&Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Re-hashes every listed file and reports mismatches. Used by tests and
/// available to consumers who want to verify an output directory.
pub fn verify_files(dir: &Path, manifest: &Manifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let entry = file_entry(dir, &f.path)?;
        if entry.sha256 != f.sha256 || entry.bytes != f.bytes {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}
