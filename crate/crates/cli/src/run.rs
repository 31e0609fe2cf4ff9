use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Exit 1 for bad invocations or configs, 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub type CmdResult = Result<(), Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: Value,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub build: String,
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: &impl Serialize, output_dir: &Path) -> RunManifest {
        let config = serde_json::to_value(config).expect("config serializes");
        let digest = Sha256::digest(config.to_string().as_bytes());
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            config,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            build: env!("SKIRMISH_BUILD").to_string(),
            output_dir: output_dir.to_path_buf(),
        }
    }

    pub fn write(&self) -> anyhow::Result<()> {
        let path = self.output_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
