use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nnr_core::{encode_pgm, ImageGrid};

/// Tracks files written by a command so a failed run leaves nothing behind.
#[derive(Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn text(&mut self, path: &Path, contents: &str) -> Result<()> {
        self.bytes(path, contents.as_bytes())
    }

    pub fn pgm(&mut self, path: &Path, img: &ImageGrid) -> Result<()> {
        self.bytes(path, &encode_pgm(img))
    }

    fn bytes(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.written.push(path.to_path_buf());
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    /// Removes everything written so far.
    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}
