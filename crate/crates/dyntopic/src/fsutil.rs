//! Atomic publication of command outputs.
//!
//! Files are written next to their target and renamed into place. A command
//! that owns a whole directory stages it under a sibling name and swaps it in
//! only after every file was written, so a failed run leaves the previous
//! outputs untouched.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{AppError, AppResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| AppError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| AppError::io(&tmp, e))?;
    file.sync_all().map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn read_to_string(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// A directory being assembled before it replaces `target`.
pub struct Staging {
    target: PathBuf,
    dir: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> AppResult<Self> {
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let dir = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        Ok(Staging {
            target: target.to_path_buf(),
            dir,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn write(&self, file: &str, bytes: &[u8]) -> AppResult<()> {
        write_atomic(&self.path(file), bytes)
    }

    /// Swap the staged directory in for the target.
    pub fn publish(self) -> AppResult<()> {
        let old = self.dir.with_extension("old");
        if self.target.exists() {
            fs::rename(&self.target, &old).map_err(|e| AppError::io(&self.target, e))?;
        }
        fs::rename(&self.dir, &self.target).map_err(|e| AppError::io(&self.target, e))?;
        if old.exists() {
            fs::remove_dir_all(&old).map_err(|e| AppError::io(&old, e))?;
        }
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        // only reached with content when publish was not called
        let _ = fs::remove_dir_all(&self.dir);
    }
}
