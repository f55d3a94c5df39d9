//! Output-directory plumbing: single-writer lock, content digests, and the
//! run manifest.
//!
//! Every command that writes files does so through an [`OutDir`]: the
//! directory is locked for the duration of the run (`.lock`, failing fast if
//! another writer holds it), every input and output is digested, and
//! `finish` drops a `manifest.json` recording the full invocation. Reruns
//! with identical inputs produce identical output digests; only
//! `wall_time_secs` differs.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use classim::{Error, Result};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(serde::Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// A locked output directory accumulating digests for the manifest.
pub struct OutDir {
    dir: PathBuf,
    lock: PathBuf,
    started: Instant,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn file_error(path: &Path, msg: impl Into<String>) -> Error {
    Error::File {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| file_error(path, e.to_string()))?;
    Ok(digest_bytes(&bytes))
}

impl OutDir {
    /// Create the directory if needed and take the writer lock.
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| file_error(dir, e.to_string()))?;
        let lock = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(file_error(
                    &lock,
                    "output directory is locked by another run (delete the lock file if stale)",
                ));
            }
            Err(e) => return Err(file_error(&lock, e.to_string())),
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            lock,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest an input file as it was read.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: digest_file(path)?,
        });
        Ok(())
    }

    /// Write a primary output file into the directory and digest it.
    pub fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| file_error(&path, e.to_string()))?;
        log::info!("wrote {}", path.display());
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: digest_bytes(text.as_bytes()),
        });
        Ok(())
    }

    /// Digest an output file some other writer already placed in the
    /// directory (e.g. a persisted model tree).
    pub fn record_output(&mut self, rel: &str) -> Result<()> {
        let digest = digest_file(&self.dir.join(rel))?;
        self.outputs.push(FileDigest {
            path: rel.to_string(),
            sha256: digest,
        });
        Ok(())
    }

    /// Digest every file directly under `rel` (sorted by name).
    pub fn record_output_dir(&mut self, rel: &str) -> Result<()> {
        let dir = self.dir.join(rel);
        let entries = std::fs::read_dir(&dir).map_err(|e| file_error(&dir, e.to_string()))?;
        let mut names = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| file_error(&dir, e.to_string()))?;
            if entry.path().is_file() {
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        names.sort();
        for name in names {
            self.record_output(&format!("{rel}/{name}"))?;
        }
        Ok(())
    }

    /// Write `manifest.json` and release the lock.
    pub fn finish(
        self,
        seed: Option<u64>,
        format: &str,
        config: serde_json::Value,
    ) -> Result<()> {
        let command: Vec<String> = std::env::args().skip(1).collect();
        let manifest = serde_json::json!({
            "format_version": MANIFEST_FORMAT_VERSION,
            "tool": "classim",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "format": format,
            "config": config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time_secs": self.started.elapsed().as_secs_f64(),
        });
        let path = self.dir.join("manifest.json");
        let mut text =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, &text).map_err(|e| file_error(&path, e.to_string()))
        // the lock is removed by Drop
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_blocks_second_writer_and_is_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = OutDir::acquire(dir.path()).unwrap();
        let err = match OutDir::acquire(dir.path()) {
            Ok(_) => panic!("second acquire should fail"),
            Err(e) => e.to_string(),
        };
        assert!(err.contains("locked"), "{err}");
        drop(first);
        assert!(!dir.path().join(".lock").exists());
        let again = OutDir::acquire(dir.path()).unwrap();
        drop(again);
    }

    #[test]
    fn manifest_lists_inputs_and_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.txt");
        std::fs::write(&input, "hello").unwrap();
        let out_dir = dir.path().join("out");

        let mut out = OutDir::acquire(&out_dir).unwrap();
        out.record_input(&input).unwrap();
        out.write("result.csv", "a,b\n1,2\n").unwrap();
        out.finish(Some(7), "csv", serde_json::json!({"mode": "test"}))
            .unwrap();

        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["format_version"], 1);
        assert_eq!(manifest["seed"], 7);
        assert_eq!(
            manifest["inputs"][0]["sha256"],
            // sha256("hello")
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_eq!(manifest["outputs"][0]["path"], "result.csv");
        assert!(!out_dir.join(".lock").exists());
    }
}
