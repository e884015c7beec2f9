//! Run manifests: the resolved configuration, derived seeds and SHA-256
//! digests of every input and output, as flat `key = value` lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hyperfield::synth::stream_key;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects manifest lines and writes outputs into the run directory.
pub struct Run {
    dir: PathBuf,
    lines: Vec<(String, String)>,
    recorded: BTreeMap<String, String>,
}

impl Run {
    pub fn new(command: &str, cfg: &RunConfig, threads: usize, recorded: BTreeMap<String, String>) -> CliResult<Self> {
        let dir = cfg.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut lines = vec![
            ("run.command".to_string(), command.to_string()),
            ("run.version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("run.threads".to_string(), threads.to_string()),
            ("run.seed.noise".to_string(), cfg.seed.to_string()),
            ("run.seed.init".to_string(), cfg.seed.to_string()),
            ("run.seed.encoder".to_string(), stream_key(cfg.seed, 0, 0, 1).to_string()),
            ("run.seed.t1_mask".to_string(), stream_key(cfg.seed, 0, 0, 3).to_string()),
        ];
        lines.extend(cfg.entries());
        Ok(Self { dir, lines, recorded })
    }

    pub fn record(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((format!("run.{key}"), value.into()));
    }

    /// Resolves input `name` from the flag or the replayed manifest, checks
    /// its digest against the manifest, and records both.
    pub fn input(&mut self, name: &str, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let key = format!("run.input.{name}");
        let path = match flag {
            Some(p) => p,
            None => self
                .recorded
                .get(&key)
                .map(PathBuf::from)
                .ok_or_else(|| CliError::Usage(format!("missing input --{}", name.replace('_', "-"))))?,
        };
        let digest = file_digest(&path)?;
        if let Some(want) = self.recorded.get(&format!("{key}.sha256")) {
            if self.recorded.get(&key).map(PathBuf::from).as_ref() == Some(&path) && *want != digest {
                return Err(CliError::Usage(format!(
                    "input {} no longer matches the manifest digest",
                    path.display()
                )));
            }
        }
        self.lines.push((key.clone(), path.display().to_string()));
        self.lines.push((format!("{key}.sha256"), digest));
        Ok(path)
    }

    /// Writes `name` in the run directory through `fill` and records its digest.
    pub fn output<F>(&mut self, name: &str, fill: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush()?;
        drop(w);
        let digest = file_digest(&path)?;
        self.lines.push((format!("run.output.{name}.sha256"), digest));
        Ok(path)
    }

    pub fn finish(self) -> CliResult<PathBuf> {
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = String::new();
        for (k, v) in &self.lines {
            text.push_str(k);
            text.push_str(" = ");
            text.push_str(v);
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
