//! Output directory layout: `config.toml`, `VERSION`, CSV tables, PNG plots
//! and `summary.json`, all written from the main thread.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct RunOutput {
    pub dir: PathBuf,
    command: String,
    seed: u64,
    checks: Vec<Check>,
    unconverged: Vec<String>,
    info: Map<String, Value>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    version: String,
    seed: u64,
    all_pass: bool,
    checks: &'a [Check],
    unconverged: &'a [String],
    files: &'a [String],
    info: &'a Map<String, Value>,
}

pub fn version_stamp() -> String {
    format!("aniso {} (aniso-core {})", env!("CARGO_PKG_VERSION"), aniso_core::VERSION)
}

impl RunOutput {
    pub fn create(root: &Path, command: &str, config_text: &str, seed: u64) -> anyhow::Result<Self> {
        let dir = root.join(command);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("config.toml"), config_text)?;
        fs::write(dir.join("VERSION"), version_stamp() + "\n")?;
        Ok(RunOutput {
            dir,
            command: command.into(),
            seed,
            checks: Vec::new(),
            unconverged: Vec::new(),
            info: Map::new(),
            files: vec!["config.toml".into(), "VERSION".into()],
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str) -> anyhow::Result<csv::Writer<File>> {
        Ok(csv::Writer::from_path(self.path(name))?)
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn unconverged(&mut self, what: impl Into<String>) {
        self.unconverged.push(what.into());
    }

    pub fn info(&mut self, key: &str, value: impl Serialize) -> anyhow::Result<()> {
        self.info.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn unconverged_items(&self) -> &[String] {
        &self.unconverged
    }

    pub fn finish(&mut self) -> anyhow::Result<()> {
        self.files.push("summary.json".into());
        let summary = Summary {
            command: &self.command,
            version: version_stamp(),
            seed: self.seed,
            all_pass: self.checks.iter().all(|c| c.pass),
            checks: &self.checks,
            unconverged: &self.unconverged,
            files: &self.files,
            info: &self.info,
        };
        fs::write(self.dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(())
    }
}
