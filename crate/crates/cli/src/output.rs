//! Output files are staged in memory and committed together, each through a
//! temporary file and a rename, so a failed run leaves no partial tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn text(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }

    pub fn json<T: Serialize>(
        &mut self,
        name: impl Into<String>,
        value: &T,
    ) -> Result<(), CliError> {
        let mut body =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
        body.push('\n');
        self.text(name, body);
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let pid = std::process::id();
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        for (name, bytes) in &self.files {
            let target = self.dir.join(name);
            let tmp = self.dir.join(format!(".{name}.{pid}.tmp"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(CliError::Io(format!("{}: {e}", target.display())));
            }
            staged.push((tmp, target));
        }
        let mut written = Vec::new();
        for (tmp, target) in staged {
            fs::rename(&tmp, &target)
                .map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
            written.push(target);
        }
        Ok(written)
    }
}

/// Replaces characters that do not belong in a file name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
