use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fnv::FnvHasher;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    /// FNV-1a 64 of the compact, key-sorted JSON, as 16 hex digits.
    pub digest: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Structured output of one command, printed with `--json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub timing: Timing,
    pub result: Value,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Digest of a JSON value after canonicalization (sorted keys, no whitespace).
pub fn canonical_digest(value: &Value) -> String {
    let bytes = serde_json::to_vec(value).expect("JSON values serialize");
    format!("{:016x}", fnv1a64(&bytes))
}

/// Files read by a command, in the order they were read.
pub struct Inputs {
    read: Vec<InputDigest>,
    start: Instant,
}

impl Inputs {
    pub fn new() -> Self {
        Inputs {
            read: Vec::new(),
            start: Instant::now(),
        }
    }

    /// Read `path` as JSON and record its digest.
    pub fn json(&mut self, path: &Path) -> Result<(String, Value), CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        self.read.push(InputDigest {
            path: path.display().to_string(),
            digest: canonical_digest(&value),
        });
        Ok((text, value))
    }

    pub fn finish(self, command: &str, result: Value) -> RunReport {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.read,
            timing: Timing {
                elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
            },
            result,
        }
    }
}

pub fn write_json(path: &PathBuf, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("documents serialize");
    std::fs::write(path, text + "\n").map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })
}
