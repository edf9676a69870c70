use nonlocal_core::torus_field::{write_field, GridFunction};
use nonlocal_core::Result;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.txt";

/// Output directory that records a content hash for every file it writes.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.entries.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn field(&mut self, name: &str, f: &GridFunction) -> Result<()> {
        for path in write_field(&self.dir.join(name), f, name)? {
            let bytes = std::fs::read(&path)?;
            let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            self.entries.push((file, sha256_hex(&bytes)));
        }
        Ok(())
    }

    /// Writes `manifest.txt` with `<sha256>  <file>` lines sorted by file name.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.entries.sort();
        let mut text = String::new();
        for (name, hash) in &self.entries {
            let _ = writeln!(text, "{hash}  {name}");
        }
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
