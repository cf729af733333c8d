//! Artifact writing. Every file gets a `<name>.meta.json` sidecar with the
//! resolved config, the tool version and the amplitude conventions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub struct Output {
    dir: PathBuf,
    command: String,
    config: Value,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new<C: Serialize>(dir: &Path, command: &str, config: &C) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.into(),
            config: serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?,
            written: Vec::new(),
        })
    }

    /// Writes `contents` to `name` plus its sidecar; `extra` lands under
    /// `results` in the sidecar.
    pub fn write(&mut self, name: &str, contents: &str, extra: Value) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        let meta = json!({
            "command": self.command,
            "version": VERSION,
            "config": self.config,
            "conventions": conventions(),
            "results": extra,
        });
        let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        write_file(&self.dir.join(format!("{name}.meta.json")), &text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn conventions() -> BTreeMap<String, String> {
    let mut m = scatter_core::quantum::convention_tags();
    m.insert("amplitude_convention".into(), scatter_core::quantum::AMPLITUDE_CONVENTION.into());
    m
}

/// Shortest round-trip decimal form; `nan` for missing values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}
