//! Run manifests: what produced an output file, and its digest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every resolved option of the command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputDigest>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub notes: serde_json::Value,
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn digest_file(path: &Path) -> CliResult<OutputDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(OutputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>, started_at: String) -> Self {
        RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("options serialize"),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: String::new(),
            outputs: Vec::new(),
            notes: serde_json::Value::Null,
        }
    }

    /// Digest `out`, stamp the finish time and write `<out>.manifest.json`.
    pub fn finish(mut self, out: &Path) -> CliResult<PathBuf> {
        self.outputs.push(digest_file(out)?);
        self.finished_at = timestamp();
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
