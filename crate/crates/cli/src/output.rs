//! Output files are buffered in memory and written only once the whole
//! command has succeeded, so failures leave nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use stationary_core::{Error, Result};

#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

fn tmp_path(p: &Path) -> PathBuf {
    let mut name = p.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    p.with_file_name(name)
}

impl Outputs {
    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    pub fn add_with<F>(&mut self, path: &Path, write: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.add(path, buf);
        Ok(())
    }

    /// Write every file to a temporary sibling, then rename all of them.
    /// Any failure removes what was written.
    pub fn commit(self) -> Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        let cleanup = |paths: &[PathBuf]| {
            for p in paths {
                let _ = fs::remove_file(p);
            }
        };
        for (path, bytes) in &self.files {
            let tmp = tmp_path(path);
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&written);
                return Err(Error::Io(format!("cannot write {}: {e}", path.display())));
            }
            written.push(tmp);
        }
        for (k, (path, _)) in self.files.iter().enumerate() {
            if let Err(e) = fs::rename(&written[k], path) {
                cleanup(&written[k..]);
                for (p, _) in &self.files[..k] {
                    let _ = fs::remove_file(p);
                }
                return Err(Error::Io(format!("cannot write {}: {e}", path.display())));
            }
        }
        Ok(())
    }
}
