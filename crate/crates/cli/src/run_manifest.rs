//! The per-run record of configuration, toolkit version and input digests.

use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    toolkit_version: &'static str,
    command: &'a str,
    started_at: &'a str,
    workers: Option<usize>,
    config: serde_json::Value,
    inputs: &'a [InputDigest],
    outputs: &'a [PathBuf],
}

pub struct Context {
    target: Option<PathBuf>,
    workers: Option<usize>,
    started_at: String,
    inputs: Vec<InputDigest>,
    outputs: Vec<PathBuf>,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file
            .read(&mut buf)
            .with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(InputDigest {
        path: path.to_path_buf(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

impl Context {
    pub fn new(target: Option<PathBuf>, workers: Option<usize>) -> Self {
        Self {
            target,
            workers,
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        if !self.inputs.iter().any(|d| d.path == path) {
            self.inputs.push(digest(path)?);
        }
        Ok(())
    }

    pub fn outputs(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.outputs.extend(paths);
    }

    /// Writes the manifest to `--run-manifest`, else into `out_dir`, else to
    /// standard error.
    pub fn finish<C: Serialize>(self, command: &str, config: &C, out_dir: Option<&Path>) -> Result<()> {
        let manifest = RunManifest {
            toolkit_version: isoscope::TOOLKIT_VERSION,
            command,
            started_at: &self.started_at,
            workers: self.workers,
            config: serde_json::to_value(config)?,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = match (&self.target, out_dir) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(dir)) => Some(dir.join("run_manifest.json")),
            (None, None) => None,
        };
        match path {
            Some(p) => {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent)?;
                }
                fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
                log::info!("run manifest written to {}", p.display());
            }
            None => eprintln!("run manifest: {}", serde_json::to_string(&manifest)?),
        }
        Ok(())
    }
}
