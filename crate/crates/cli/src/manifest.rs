//! Run manifests: every artifact on disk is traceable to the resolved
//! configuration that produced it.

use serde::Serialize;
use sparsedyn::Result;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct Manifest<C: Serialize> {
    pub command: String,
    pub config: C,
    /// FNV-1a over the serialized config; changes iff the config does.
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Tracks artifacts written during a run so they can be wiped if the
/// run fails partway.
pub struct RunDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    started: Instant,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, contents)?;
        self.written.push(p.clone());
        Ok(p)
    }

    /// Registers a file written through some other API.
    pub fn track(&mut self, p: PathBuf) {
        self.written.push(p);
    }

    pub fn cleanup(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }

    pub fn finish<C: Serialize>(&mut self, command: &str, config: &C, seed: u64) -> Result<()> {
        let config_json = serde_json::to_string_pretty(config)?;
        let manifest = Manifest {
            command: command.to_string(),
            config,
            config_hash: format!("{:016x}", fnv1a(config_json.as_bytes())),
            seed,
            artifacts: self
                .written
                .iter()
                .map(|p| p.to_string_lossy().into_owned())
                .collect(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let p = self.path("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}
