//! Small helpers for writing result files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::{Common, UsageError};

pub fn out_dir(common: &Common, command: &str) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("deteriorate-out").join(command));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses an optional JSON config, falling back to the type's defaults.
pub fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(UsageError(format!("{what} `{}` is not a readable directory", path.display())).into());
    }
    Ok(())
}
