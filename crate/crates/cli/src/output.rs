//! Output files of one run, their digests, and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a RunConfig,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
    Ok(sha256_hex(&bytes))
}

/// Files written so far; removed again if the run fails.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<(String, String)>,
    created_dir: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<OutputSet, CliError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new(), created_dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.written.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Output { path: path.clone(), source })?;
        self.written.retain(|(n, _)| n != name);
        self.written.push((name.to_string(), sha256_hex(bytes)));
        tracing::info!(file = %path.display(), "wrote");
        Ok(())
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|source| CliError::Output { path: self.dir.join(name), source })?;
        self.write_bytes(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes the manifest listing config, seed, input and output digests.
    pub fn finish(mut self, cfg: &RunConfig, inputs: &[PathBuf]) -> Result<(), CliError> {
        let inputs = inputs
            .iter()
            .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: file_digest(p)? }))
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut outputs: Vec<FileDigest> =
            self.written.iter().map(|(n, d)| FileDigest { path: n.clone(), sha256: d.clone() }).collect();
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: "tenet",
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.analysis.name(),
            seed: cfg.seed,
            config: cfg,
            inputs,
            outputs,
        };
        let result = self.write_json(MANIFEST, &manifest);
        if result.is_err() {
            self.discard();
        }
        result
    }

    /// Removes every file written by this run.
    pub fn discard(self) {
        for (name, _) in &self.written {
            let _ = std::fs::remove_file(self.dir.join(name));
        }
        if self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

pub fn flush_into(buf: &mut Vec<u8>, text: &str) -> std::io::Result<()> {
    buf.write_all(text.as_bytes())
}
