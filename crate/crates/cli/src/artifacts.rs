//! Artifacts named by the SHA-256 of their content.

use std::path::{Path, PathBuf};

use hrushovski::error::{Error, Result};
use sha2::{Digest, Sha256};

/// Hex characters of the digest kept in file names.
pub const NAME_DIGITS: usize = 16;

pub struct ArtifactStore {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactStore {
    pub fn open(dir: &Path) -> Result<ArtifactStore> {
        std::fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.display())))?;
        Ok(ArtifactStore {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `content` as `<kind>-<digest>.<ext>` and returns the file name.
    pub fn put(&mut self, kind: &str, ext: &str, content: &str) -> Result<String> {
        let name = format!("{kind}-{}.{ext}", digest(content));
        let path = self.dir.join(&name);
        let current = std::fs::read_to_string(&path).ok();
        if current.as_deref() != Some(content) {
            std::fs::write(&path, content).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        }
        if !self.written.contains(&path) {
            self.written.push(path);
        }
        Ok(name)
    }

    /// Paths written so far, in order of first write.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn digest(content: &str) -> String {
    let hash = Sha256::digest(content.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    hex[..NAME_DIGITS].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_content() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ArtifactStore::open(dir.path()).unwrap();
        let a = store.put("graph", "g", "graph 1\n").unwrap();
        let b = store.put("graph", "g", "graph 1\n").unwrap();
        let c = store.put("graph", "g", "graph 2\n").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(store.written().len(), 2);
        assert_eq!(std::fs::read_to_string(dir.path().join(&a)).unwrap(), "graph 1\n");
        // Known SHA-256 prefix of the empty string.
        assert_eq!(digest(""), "e3b0c44298fc1c14");
    }
}
