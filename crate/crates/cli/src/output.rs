//! Exit codes, error plumbing and deterministic file output shared by all
//! subcommands.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use egoctl_core::PipelineConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NEGATIVE: u8 = 3;

#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<egoctl_core::Error> for CliError {
    fn from(e: egoctl_core::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError(format!("json error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn fail<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError(msg.into()))
}

/// Successful runs end either with a positive or a clean negative result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Negative,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done => EXIT_OK,
            Outcome::Negative => EXIT_NEGATIVE,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError(format!("cannot create {}: {e}", dir.display())))
}

/// Collects written files and their hashes for the run manifest.
#[derive(Debug, Default)]
pub struct Writer {
    root: PathBuf,
    pub outputs: BTreeMap<String, String>,
}

impl Writer {
    pub fn new(root: &Path) -> CliResult<Self> {
        ensure_dir(root)?;
        Ok(Self { root: root.to_path_buf(), outputs: BTreeMap::new() })
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<String> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            ensure_dir(parent)?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))?;
        let hash = sha256_hex(bytes);
        self.outputs.insert(name.to_string(), hash.clone());
        Ok(hash)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<String> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    /// Writes `manifest.json`, which lists every other output of the run.
    pub fn finish<T: Serialize>(mut self, command: &str, config: &PipelineConfig, inputs: BTreeMap<String, String>, details: T) -> CliResult<()> {
        let manifest = Manifest {
            tool: "egoctl",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            outputs: self.outputs.clone(),
            config,
            details,
        };
        self.json("manifest.json", &manifest)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a, T> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    config: &'a PipelineConfig,
    details: T,
}

/// Hashes named input files for the manifest.
pub fn input_hashes(files: &[(&str, &Path)]) -> CliResult<BTreeMap<String, String>> {
    files.iter().map(|(name, path)| Ok((name.to_string(), sha256_hex(&read_bytes(path)?)))).collect()
}
