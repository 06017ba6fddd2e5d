use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};

use crate::config::RunConfig;

/// An error in how the tool was invoked or configured (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Resolved working directory, configuration and output root.
pub struct Ctx {
    pub workdir: PathBuf,
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Ctx {
    pub fn new(workdir: &Path, config_path: Option<&Path>) -> Result<Self> {
        if !workdir.is_dir() {
            return Err(usage(format!(
                "working directory {} does not exist",
                workdir.display()
            )));
        }
        let config = match config_path {
            Some(p) => {
                let path = workdir.join(p);
                let text = fs::read_to_string(&path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                RunConfig::from_toml(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let out = workdir.join(
            config
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out")),
        );
        Ok(Ctx {
            workdir: workdir.to_path_buf(),
            config,
            out,
        })
    }

    /// An existing input file, relative to the working directory.
    pub fn input(&self, path: &Path) -> Result<PathBuf> {
        let full = self.workdir.join(path);
        if !full.exists() {
            return Err(usage(format!("input {} does not exist", full.display())));
        }
        Ok(full)
    }

    /// A path under the output root. Parent directories are created.
    pub fn output(&self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let full = self.out.join(rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(full)
    }

    /// A user-supplied output path is taken relative to the working
    /// directory; otherwise `default` under the output root.
    pub fn output_or(&self, given: Option<&Path>, default: impl AsRef<Path>) -> Result<PathBuf> {
        match given {
            Some(p) => {
                let full = self.workdir.join(p);
                if let Some(parent) = full.parent() {
                    fs::create_dir_all(parent)?;
                }
                Ok(full)
            }
            None => self.output(default),
        }
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
