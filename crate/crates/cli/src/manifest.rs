//! Run manifests.
//!
//! A manifest holds no clock time and no absolute output paths, so two runs
//! on the same inputs produce the same bytes whichever directory they write
//! to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    /// As given on the command line.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved settings grouped by origin, e.g. `scenario` and `settings`.
    pub config: BTreeMap<String, BTreeMap<String, String>>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[InputRecord]) -> Self {
        RunManifest {
            tool: "sit2stand".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: BTreeMap::new(),
            inputs: inputs.to_vec(),
            outputs: Vec::new(),
        }
    }

    pub fn with_config(mut self, group: &str, entries: BTreeMap<String, String>) -> Self {
        self.config.insert(group.into(), entries);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest fields serialize");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
