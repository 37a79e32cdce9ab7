use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Enough to rerun a command and get the same bits: the command line, the
/// parsed parameters (seeds included) and a digest of any input file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub argv: Vec<String>,
    pub command: &'static str,
    pub params: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputFile>,
    pub threads_available: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        Self {
            path: path.display().to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

impl RunManifest {
    pub fn new(command: &'static str, params: Value) -> Self {
        Self {
            tool: "perm",
            version: env!("CARGO_PKG_VERSION"),
            argv: std::env::args().collect(),
            command,
            params,
            inputs: Vec::new(),
            threads_available: available_threads(),
            wall_seconds: 0.0,
        }
    }
}

pub fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
