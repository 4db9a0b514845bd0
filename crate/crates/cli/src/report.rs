//! Report plumbing: every emitted report carries a header block recording
//! the command, configuration, seed, and toolkit version, so runs are
//! reproducible byte for byte under a fixed seed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub(crate) const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub(crate) struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub language: Option<String>,
    pub seed: u64,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &str, language: Option<String>, seed: u64, config: Value) -> Self {
        Meta {
            tool: "tokbias".into(),
            version: VERSION.into(),
            command: command.into(),
            language,
            seed,
            config,
        }
    }

    /// `#`-prefixed header lines for CSV/TSV reports.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: tokbias {}\n", self.version));
        out.push_str(&format!("# command: {}\n", self.command));
        if let Some(lang) = &self.language {
            out.push_str(&format!("# language: {lang}\n"));
        }
        out.push_str(&format!("# seed: {}\n", self.seed));
        out.push_str(&format!("# config: {}\n", self.config));
        out
    }
}

/// Serializes `{ "meta": ..., ...body }` with the meta block first.
pub(crate) fn json_report<T: Serialize>(meta: &Meta, body: &T) -> Result<String, CliError> {
    let mut root = serde_json::Map::new();
    root.insert("meta".into(), serde_json::to_value(meta).map_err(internal)?);
    let body = serde_json::to_value(body).map_err(internal)?;
    match body {
        Value::Object(map) => {
            for (k, v) in map {
                root.insert(k, v);
            }
        }
        other => {
            root.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).map_err(internal)?;
    text.push('\n');
    Ok(text)
}

pub(crate) fn internal(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Internal(err.into())
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Input)
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(CliError::Input)?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Input)?;
    println!("wrote {}", path.display());
    Ok(path)
}
