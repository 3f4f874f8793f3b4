//! Writing result files and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{io_error, CliError};

/// Collects output files for one command run in a directory.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV from a header and rows of already formatted fields.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(format!("writing {name}: {e}"));
        w.write_record(header).map_err(internal)?;
        for row in rows {
            w.write_record(row).map_err(internal)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Internal(format!("writing {name}: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest_<command>.json` listing everything needed to
    /// repeat the run.
    pub fn write_manifest(
        &mut self,
        command: &str,
        config: &PipelineConfig,
        arguments: serde_json::Value,
    ) -> Result<PathBuf, CliError> {
        let mut inputs = BTreeMap::new();
        let mut paths = vec![&config.articles, &config.registry];
        paths.extend(&config.stoplist);
        paths.extend(&config.gendered_signals);
        paths.extend(&config.lexicons);
        paths.extend(&config.pos_lexicon);
        for p in paths {
            inputs.insert(p.display().to_string(), file_sha256(p)?);
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.hash(),
            seed: config.seed,
            arguments,
            inputs,
            outputs: self.written.clone(),
            config,
        };
        self.write_json(&format!("manifest_{command}.json"), &manifest)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    arguments: serde_json::Value,
    /// Input path → SHA-256 of its contents.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    config: &'a PipelineConfig,
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Fixed-precision float formatting for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        x.to_string()
    }
}
