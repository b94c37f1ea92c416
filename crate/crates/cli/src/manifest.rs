use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Cli;
use crate::run::Artifact;
use crate::CliError;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce a run's data files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// Fully resolved invocation; `global.out` is not part of it.
    pub invocation: Cli,
    pub seed: u64,
    pub version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(invocation: Cli, started_unix_ms: u128, artifacts: &[Artifact]) -> Self {
        let mut invocation = invocation;
        invocation.global.out = None;
        Self {
            seed: invocation.global.seed.unwrap_or(0),
            invocation,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms,
            finished_unix_ms: now_ms(),
            outputs: artifacts
                .iter()
                .map(|a| OutputDigest {
                    file: a.name.clone(),
                    bytes: a.content.len() as u64,
                    sha256: sha256_hex(a.content.as_bytes()),
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("unreadable manifest {}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(dir.join(FILE_NAME), text)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}
