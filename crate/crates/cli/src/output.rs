use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use slmc_core::{Error, Result};

use crate::config::RunConfig;

pub const OUT_ENV: &str = "SLMC_OUT";
const DEFAULT_OUT: &str = "slmc-out";

/// `--out`, then `$SLMC_OUT`, then `./slmc-out`.
pub fn resolve_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

/// Collects a run's files; every write goes through a temp file in the
/// target directory and an atomic rename.
pub struct Outputs {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir, hash: config.hash(), written: vec![] })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| io_err(&path, e))?;
        tmp.write_all(bytes).map_err(|e| io_err(&path, e))?;
        tmp.persist(&path).map_err(|e| io_err(&path, e.error))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    /// CSV with a leading `# manifest-hash:` comment line.
    pub fn write_csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let mut buf = format!("# manifest-hash: {}\n", self.hash).into_bytes();
        body(&mut buf).map_err(|e| io_err(&self.dir.join(name), e))?;
        self.write_bytes(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `manifest.json` last, listing everything written before it.
    pub fn finish(mut self, command: &str, config: &RunConfig, details: serde_json::Value) -> Result<PathBuf> {
        let hash = self.hash.clone();
        let outputs = self.written.clone();
        let manifest = Manifest {
            tool: "slmc",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: &hash,
            config,
            outputs: &outputs,
            details,
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: &'a str,
    config: &'a RunConfig,
    outputs: &'a [String],
    /// Class label, λ, grid, scheme, adequacy outcomes and the command's summary.
    details: serde_json::Value,
}
