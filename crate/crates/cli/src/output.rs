use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

/// Everything a command produces, held in memory until the command succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// Fully resolved configuration, hashed into the manifest.
    pub config: Value,
    pub summary: Vec<String>,
}

impl Artifacts {
    pub fn new(config: impl Serialize) -> Result<Self> {
        Ok(Artifacts {
            config: serde_json::to_value(config)?,
            ..Default::default()
        })
    }

    pub fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn json(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.file(name, bytes);
        Ok(())
    }

    pub fn with<F>(&mut self, name: impl Into<String>, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> hiersage::Result<()>,
    {
        let mut bytes = Vec::new();
        f(&mut bytes)?;
        self.file(name, bytes);
        Ok(())
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}

pub fn config_hash(config: &Value) -> String {
    // serde_json maps are ordered by key, so this serialization is canonical.
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct RunInfo<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub seed: u64,
    pub jobs: Option<usize>,
}

/// Writes artifacts plus a manifest into `dir`. On any failure, every file
/// written so far is removed, and so is `dir` if this call created it.
pub fn commit(dir: &Path, artifacts: &Artifacts, run: &RunInfo<'_>) -> Result<Vec<PathBuf>> {
    let created = !dir.exists();
    let mut written = Vec::new();
    let result = (|| -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &artifacts.files {
            let path = dir.join(name);
            written.push(path.clone());
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        let manifest = json!({
            "schema_version": MANIFEST_SCHEMA,
            "command": run.command,
            "argv": run.argv,
            "seed": run.seed,
            "jobs": run.jobs,
            "config": artifacts.config,
            "config_hash": config_hash(&artifacts.config),
            "versions": {
                "hiersage": hiersage_version(),
                "hiersage-cli": env!("CARGO_PKG_VERSION"),
            },
            "outputs": artifacts.files.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        });
        let path = dir.join(MANIFEST_FILE);
        written.push(path.clone());
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir_all(dir);
            }
            Err(e)
        }
    }
}

fn hiersage_version() -> &'static str {
    // Workspace crates share one version.
    env!("CARGO_PKG_VERSION")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":[1,2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":[1,2],"a":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn failed_commit_leaves_nothing_behind() {
        let dir = std::env::temp_dir().join(format!("hiersage-commit-{}", std::process::id()));
        let mut art = Artifacts::new(json!({})).unwrap();
        art.file("ok.txt", b"x".to_vec());
        art.file("missing/sub/dir.txt", b"y".to_vec());
        let run = RunInfo {
            command: "test",
            argv: &[],
            seed: 0,
            jobs: None,
        };
        assert!(commit(&dir, &art, &run).is_err());
        assert!(!dir.exists());
    }
}
