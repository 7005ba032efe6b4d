//! Single-writer output directory.

use std::path::{Path, PathBuf};

use ggl_core::io::CsvTable;
use serde::Serialize;

use crate::{CliResult, Failure};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&root)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn text(&self, name: &str, body: &str) -> CliResult<()> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))
    }

    pub fn csv(&self, name: &str, table: &CsvTable) -> CliResult<()> {
        self.text(name, &table.render())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
        self.text(name, &(body + "\n"))
    }
}
