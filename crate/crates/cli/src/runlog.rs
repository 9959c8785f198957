use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

/// Line-oriented `run.log` in the output directory, appended to by every
/// command.
pub struct RunLog {
    out: Mutex<BufWriter<File>>,
}

impl RunLog {
    pub fn open(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let path = out_dir.join("run.log");
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn line(&self, text: &str) {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(out, "[{secs:.3}] {text}");
        let _ = out.flush();
    }

    /// Writes the resolved configuration, one line per TOML line.
    pub fn config(&self, command: &str, toml: &str) {
        self.line(&format!("command {command}"));
        for l in toml.lines().filter(|l| !l.trim().is_empty()) {
            self.line(&format!("config {l}"));
        }
    }
}
