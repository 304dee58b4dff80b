use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Everything needed to reproduce a run: two runs with equal manifests
/// produce byte-identical outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDigest>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.to_path_buf(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        }
    }
}

impl RunManifest {
    pub fn new(subcommand: &'static str, config: impl Serialize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config: serde_json::to_value(config).expect("config serialises"),
            seed: None,
            input: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    /// `<output>.manifest.json` next to the output, or stderr without one.
    pub fn emit(&self, output: Option<&Path>) -> Result<(), CliError> {
        match output {
            Some(out) => {
                let mut name = out.as_os_str().to_owned();
                name.push(".manifest.json");
                let path = PathBuf::from(name);
                std::fs::write(&path, self.to_json()).map_err(|source| CliError::Write { path, source })
            }
            None => {
                eprint!("{}", self.to_json());
                Ok(())
            }
        }
    }
}
