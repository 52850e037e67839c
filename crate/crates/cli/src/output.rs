//! Output staging and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

/// Files held in memory until the command has finished, then written
/// under temporary names and renamed into place.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_owned(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
        s.push('\n');
        self.add(name, s.into_bytes());
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    pub fn commit(self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let staged: Vec<(PathBuf, PathBuf)> = self
            .files
            .iter()
            .map(|(name, _)| (dir.join(format!(".{name}.partial")), dir.join(name)))
            .collect();
        let cleanup = |upto: usize| {
            for (tmp, _) in &staged[..upto] {
                let _ = fs::remove_file(tmp);
            }
        };
        for (k, ((_, bytes), (tmp, _))) in self.files.iter().zip(&staged).enumerate() {
            if let Err(e) = fs::write(tmp, bytes) {
                cleanup(k + 1);
                return Err(e.into());
            }
        }
        for (tmp, fin) in &staged {
            fs::rename(tmp, fin)?;
        }
        Ok(staged.into_iter().map(|p| p.1).collect())
    }
}

/// Everything needed to regenerate the files of one run.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
    pub files: Vec<String>,
    pub details: Value,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64, config: Value) -> Self {
        Self {
            tool: "fouqv",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            files: Vec::new(),
            details: Value::Null,
            notes: Vec::new(),
        }
    }

    /// Adds itself as `manifest.json` after listing the other files.
    pub fn finish(mut self, out: &mut Outputs) {
        self.files = out.names();
        self.files.push("manifest.json".into());
        out.add_json("manifest.json", &self);
    }
}
