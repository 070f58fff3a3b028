use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use jprlc_core::io::RunManifest;
use serde::Serialize;

/// Output directory that remembers what was written into it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Path for `name`, recorded as an output.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    pub fn subdir(&self, name: &str) -> Result<()> {
        let dir = self.root.join(name);
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<()> {
        let path = self.file("manifest.json");
        manifest.outputs = self.written;
        jprlc_core::io::write_json(&manifest, &path)?;
        Ok(())
    }
}

pub fn manifest(command: &str, seed: u64, config: &impl Serialize) -> Result<RunManifest> {
    Ok(RunManifest::new(
        command,
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed,
        serde_json::to_value(config)?,
    ))
}
