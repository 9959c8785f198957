use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{import_recording, write_recording_csv, Recording, Task};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub subject: u32,
    pub task: Task,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub entries: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION.to_string(),
            entries: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            version: MANIFEST_VERSION.to_string(),
            entries,
        }
    }

    pub fn resolve(&self, base: &Path, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base.join(&entry.path)
        }
    }

    /// Parses every referenced recording, optionally restricted to one task.
    pub fn load_recordings(&self, base: &Path, task: Option<Task>) -> Result<Vec<Recording>> {
        self.entries
            .iter()
            .filter(|e| task.is_none_or(|t| e.task == t))
            .map(|e| import_recording(&self.resolve(base, e), e.subject, e.task, e.label))
            .collect()
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                message: format!(
                    "version mismatch: found '{}', expected '{MANIFEST_VERSION}'",
                    self.version
                ),
            });
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if usize::from(e.label) >= super::N_CLASSES {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    message: format!("entry {} has label {} outside 0..=9", e.path.display(), e.label),
                });
            }
            if !seen.insert(e) {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    message: format!("duplicate entry {}", e.path.display()),
                });
            }
        }
        Ok(())
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Loads and validates a manifest; every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    manifest.validate(path)?;
    let base = base_dir(path);
    let missing: Vec<PathBuf> = manifest
        .entries
        .iter()
        .map(|e| manifest.resolve(&base, e))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFiles(missing));
    }
    Ok(manifest)
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    manifest.validate(path)?;
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Directory that relative entries of a manifest at `path` resolve against.
pub fn manifest_base(path: &Path) -> PathBuf {
    base_dir(path)
}

/// Writes every recording as canonical CSV under `recordings/` next to
/// `manifest_path` and saves a manifest referencing them.
pub fn export_dataset(recordings: &[Recording], manifest_path: &Path) -> Result<Manifest> {
    let base = base_dir(manifest_path);
    let dir = base.join("recordings");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut used = HashSet::new();
    let mut entries = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let stem = format!("s{:02}_{}_{}", rec.subject, rec.task.name(), rec.label);
        let mut name = format!("{stem}.csv");
        let mut n = 1;
        while !used.insert(name.clone()) {
            n += 1;
            name = format!("{stem}_{n}.csv");
        }
        let rel = PathBuf::from("recordings").join(&name);
        write_recording_csv(rec, &base.join(&rel))?;
        entries.push(ManifestEntry {
            path: rel,
            subject: rec.subject,
            task: rec.task,
            label: rec.label,
        });
    }
    let manifest = Manifest::new(entries);
    save_manifest(&manifest, manifest_path)?;
    Ok(manifest)
}
