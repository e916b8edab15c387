use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Failures that end a run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or config files (exit 2).
    Config(anyhow::Error),
    /// Optimizer or numerical breakdown (exit 3).
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(anyhow::anyhow!(msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e:#}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

impl From<ineqlab::Error> for CliError {
    fn from(e: ineqlab::Error) -> Self {
        match e {
            ineqlab::Error::Numerical(_) => CliError::Numeric(e.into()),
            _ => CliError::Config(e.into()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Collects report files for one run and writes the manifest.
pub struct Output {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, format: Format) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(anyhow::anyhow!("cannot create {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), format, files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)
            .map_err(|e| CliError::Config(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// `<stem>.json`; always written since it is the canonical payload.
    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> CliResult<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(&format!("{stem}.json"), &body)
    }

    /// `<stem>.csv`, only with `--format csv`.
    pub fn csv(&mut self, stem: &str, body: String) -> CliResult<()> {
        if self.format == Format::Csv {
            self.write(&format!("{stem}.csv"), &body)?;
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write `manifest.json`. `config` is the fully resolved configuration;
    /// serde_json maps are sorted, so its serialization is canonical.
    pub fn finish(self, command: &str, seed: u64, config: &Value, passed: bool) -> CliResult<PathBuf> {
        let digest = Sha256::digest(serde_json::to_vec(config)?);
        let manifest = Manifest {
            command: command.to_string(),
            config_hash: hex::encode(digest),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            passed,
            config: config.clone(),
            outputs: self.files.clone(),
        };
        let path = self.dir.join("manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest)?;
        body.push('\n');
        fs::write(&path, body)
            .map_err(|e| CliError::Config(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    config_hash: String,
    seed: u64,
    tool_version: String,
    /// Seconds since the Unix epoch.
    timestamp: u64,
    passed: bool,
    config: Value,
    /// Report files relative to the output directory.
    outputs: Vec<String>,
}
