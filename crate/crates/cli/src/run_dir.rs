use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Output directory of one command. Every file written through it is listed
/// in `manifest.json` together with the effective configuration.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    seeds: S,
    files: &'a [String],
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing, hands a buffered writer to `body` and
    /// records the file.
    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        body(&mut writer)?;
        writer.flush().with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Records a file that some other writer produced in this directory.
    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn finish<S: Serialize>(mut self, command: &str, config: &RunConfig, seeds: S) -> Result<()> {
        let files = std::mem::take(&mut self.files);
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            seeds,
            files: &files,
        };
        self.write_json("manifest.json", &manifest)
    }
}
