use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Failure;

/// Files written by one run, so a failed run can remove them again.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        let _ = fs::remove_file(dir.join("error.json"));
        Outputs { dir: dir.to_path_buf(), files: Vec::new() }
    }

    /// Registers `name` and returns its full path.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_owned());
        self.dir.join(name)
    }

    pub fn discard(&self) {
        for f in &self.files {
            let _ = fs::remove_file(self.dir.join(f));
        }
    }

    fn checksums(&self) -> Result<Vec<Value>, Failure> {
        self.files
            .iter()
            .map(|f| {
                let bytes = fs::read(self.dir.join(f)).map_err(|e| Failure::at("write")(e.into()))?;
                Ok(json!({ "file": f, "sha256": format!("{:x}", Sha256::digest(&bytes)) }))
            })
            .collect()
    }

    /// `<command>.json`: effective config, results and artifact checksums.
    pub fn sidecar(&mut self, cfg: &RunConfig, results: Value) -> Result<(), Failure> {
        let doc = json!({
            "windtube": env!("CARGO_PKG_VERSION"),
            "command": cfg.command.name(),
            "config": cfg.to_json(),
            "results": results,
            "artifacts": self.checksums()?,
        });
        let path = self.file(&format!("{}.json", cfg.command.name()));
        let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes") + "\n";
        fs::write(path, text).map_err(|e| Failure::at("write")(e.into()))
    }
}
