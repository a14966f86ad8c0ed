use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes artifacts that carry the resolved config and the input digest.
pub struct Emitter<'a> {
    pub config: &'a RunConfig,
    pub command: &'static str,
    pub written: Vec<PathBuf>,
}

impl<'a> Emitter<'a> {
    pub fn new(config: &'a RunConfig, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(&config.out).map_err(|e| CliError::Io(config.out.clone(), e))?;
        Ok(Emitter {
            config,
            command,
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, body: String) -> Result<(), CliError> {
        let path = self.config.out.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(path.clone(), e))?;
        self.written.push(path);
        Ok(())
    }

    fn header(&self, source: &Path, digest: &str) -> String {
        let cfg = serde_json::to_string(self.config).expect("config serializes");
        format!(
            "# command={}\n# source={}\n# run_config={cfg}\n# dataset_digest={digest}\n",
            self.command,
            source.display()
        )
    }

    pub fn json<T: Serialize>(&mut self, name: &str, source: &Path, digest: &str, result: &T) -> Result<(), CliError> {
        let envelope = json!({
            "command": self.command,
            "source": source.display().to_string(),
            "run_config": self.config,
            "dataset_digest": digest,
            "result": serde_json::to_value(result).expect("result serializes"),
        });
        let mut text = serde_json::to_string_pretty(&envelope).expect("value serializes");
        text.push('\n');
        self.put(name, text)
    }

    /// CSV (or JSON lines) body preceded by `#` comment lines.
    pub fn commented(&mut self, name: &str, source: &Path, digest: &str, body: &str) -> Result<(), CliError> {
        let text = self.header(source, digest) + body;
        self.put(name, text)
    }
}

pub fn number_key(x: f64) -> String {
    format!("{x}")
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}
