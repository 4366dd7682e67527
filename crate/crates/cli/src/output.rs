//! Output files are staged in memory and written together once a command
//! has finished, so a failing run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::manifest::Manifest;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

/// `<path>.<suffix>`, keeping the full original file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

impl Outputs {
    pub fn add(&mut self, path: &Path, contents: String) {
        self.files.push((path.to_path_buf(), contents));
    }

    /// Fails before touching the file system if two outputs share a path or
    /// a target directory is missing.
    pub fn check(&self) -> Result<()> {
        for (k, (p, _)) in self.files.iter().enumerate() {
            if self.files[..k].iter().any(|(q, _)| q == p) {
                bail!("output {} given twice", p.display());
            }
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(dir) = parent {
                if !dir.is_dir() {
                    bail!("output directory {} does not exist", dir.display());
                }
            }
        }
        Ok(())
    }

    /// Writes everything plus `<primary>.manifest`.
    pub fn commit(mut self, primary: &Path, manifest: &Manifest) -> Result<()> {
        self.add(&sibling(primary, "manifest"), manifest.to_string());
        self.check()?;
        let staged: Vec<PathBuf> = self
            .files
            .iter()
            .map(|(p, _)| sibling(p, "partial"))
            .collect();
        for ((_, contents), tmp) in self.files.iter().zip(&staged) {
            if let Err(e) = fs::write(tmp, contents) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e).with_context(|| format!("writing {}", tmp.display()));
            }
        }
        for ((path, _), tmp) in self.files.iter().zip(&staged) {
            fs::rename(tmp, path).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
