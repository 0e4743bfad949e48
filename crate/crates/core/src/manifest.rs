//! Run manifests written next to every set of outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub resolved_options: BTreeMap<String, String>,
    /// Input path -> SHA-256 of its contents, hex encoded.
    pub input_digests: BTreeMap<String, String>,
    /// Counters gathered while running (rows skipped, warnings, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, String>,
    /// RFC 3339 UTC instant; the only field allowed to differ between reruns.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            resolved_options: BTreeMap::new(),
            input_digests: BTreeMap::new(),
            stats: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn option(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.resolved_options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn stat(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.stats.insert(key.to_string(), value.to_string());
        self
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.input_digests
            .insert(path.display().to_string(), digest_file(path)?);
        Ok(())
    }

    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)
    }

    pub fn read_from_dir(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn digest_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
