//! The `sit2stand` command-line tool.
//!
//! Three commands share one pattern: read and hash the inputs, compute every
//! output in memory, then write the files and a `manifest.json` into the
//! output directory. Nothing is written when an input is rejected.
//!
//! Exit status is 0 on success, 2 when an input is missing, malformed or
//! invalid, and 1 when the run itself fails.

// `!(x > 0.0)` style checks also catch NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod compare;
pub mod manifest;
pub mod plot;
mod settings;
mod simulate;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use analyze::{analyze, AnalyzeArgs};
pub use compare::{compare, CompareArgs, COMPARISON_HEADERS};
pub use manifest::{FileRecord, InputRecord, RunManifest};
pub use settings::{Settings, SETTINGS_KEYS};
pub use simulate::{simulate, SimulateArgs};

/// Environment variable naming the default `--config` file.
pub const CONFIG_ENV: &str = "SIT2STAND_CONFIG";

/// Parameter table every command that extracts parameters writes, and
/// `compare` reads.
pub const PARAMETERS_FILE: &str = "parameters.csv";

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Missing or invalid input.
    Input(String),
    /// The run failed on valid input, or outputs could not be written.
    Runtime(String),
}

impl Failure {
    pub fn input(e: impl fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }

    /// Keeps the toolkit's own split between input and run errors.
    pub fn from_toolkit(e: sit2stand::Error) -> Self {
        if e.is_validation() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn context(self, what: impl fmt::Display) -> Self {
        match self {
            Failure::Input(m) => Failure::Input(format!("{what}: {m}")),
            Failure::Runtime(m) => Failure::Runtime(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

/// Input files read so far, with their hashes.
#[derive(Debug, Default)]
pub struct Inputs {
    records: Vec<InputRecord>,
}

impl Inputs {
    pub fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes =
            fs::read(path).map_err(|e| Failure::Input(format!("cannot read {role} {}: {e}", path.display())))?;
        self.records.push(InputRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: manifest::sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_text(&mut self, role: &str, path: &Path) -> Result<String, Failure> {
        let bytes = self.read(role, path)?;
        String::from_utf8(bytes).map_err(|_| Failure::Input(format!("{}: not UTF-8 text", path.display())))
    }

    pub fn records(&self) -> &[InputRecord] {
        &self.records
    }
}

/// Files to be written, in order, named relative to the output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        debug_assert!(!name.contains(['/', '\\']) && name != manifest::MANIFEST_FILE);
        self.files.push((name.to_string(), bytes));
    }

    /// Builds a file with a writer callback.
    pub fn with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> sit2stand::Result<()>) -> Result<(), Failure> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(Failure::runtime)?;
        self.add(name, buf);
        Ok(())
    }

    /// Writes every file and then the manifest describing them.
    pub fn write(self, out_dir: &Path, mut manifest: RunManifest) -> Result<PathBuf, Failure> {
        let io = |p: &Path, e: std::io::Error| Failure::Runtime(format!("cannot write {}: {e}", p.display()));
        fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
        for (name, bytes) in &self.files {
            let path = out_dir.join(name);
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            manifest.outputs.push(FileRecord {
                path: name.clone(),
                sha256: manifest::sha256_hex(bytes),
            });
        }
        let path = out_dir.join(manifest::MANIFEST_FILE);
        fs::write(&path, manifest.to_json()).map_err(|e| io(&path, e))?;
        Ok(path)
    }
}

/// Named values in stat-table order: the ten parameters plus F1 and F2 in %BW.
pub(crate) fn param_values(p: &sit2stand::grf::GrfParameters) -> Vec<(String, f64)> {
    sit2stand::grf::trial_statistics(std::slice::from_ref(p))
        .expect("one trial")
        .rows
        .into_iter()
        .map(|r| (r.param, r.mean))
        .collect()
}

pub(crate) fn warn_undefined(what: &str, p: &sit2stand::grf::GrfParameters) {
    for (param, why) in &p.undefined {
        eprintln!("warning: {what}: {param} undefined: {why}");
    }
}
