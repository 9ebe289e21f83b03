//! Output plumbing: every file carries the config hash, seed, and version,
//! so a run can be reproduced byte-for-byte from its own header.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Meta {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Meta {
            config_sha256,
            seed,
            version: format!("vapor-pnr {}", env!("CARGO_PKG_VERSION")),
        }
    }

    /// Comment header prepended to CSV outputs.
    pub fn csv_header(&self) -> String {
        format!(
            "# config_sha256={}\n# seed={}\n# version={}\n",
            self.config_sha256, self.seed, self.version
        )
    }
}

/// Which file formats a command writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

pub struct OutputSink {
    dir: PathBuf,
    meta: Meta,
    pub format: Format,
    written: Vec<PathBuf>,
}

impl OutputSink {
    pub fn new(dir: &Path, meta: Meta, format: Format) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            meta,
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `{ "meta": ..., "data": ... }` as pretty JSON.
    pub fn write_json(&mut self, name: &str, data: impl Serialize) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        let document = json!({
            "meta": self.meta,
            "data": data,
        });
        let mut text = serde_json::to_string_pretty(&document)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes a CSV body under the meta comment header.
    pub fn write_csv(&mut self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        let text = format!("{}{}", self.meta.csv_header(), body);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes JSON lines: a meta record first, then one record per entry.
    pub fn write_jsonl<T: Serialize>(
        &mut self,
        name: &str,
        entries: &[T],
    ) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string(&json!({ "meta": self.meta }))?;
        text.push('\n');
        for entry in entries {
            text.push_str(&serde_json::to_string(entry)?);
            text.push('\n');
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }
}
