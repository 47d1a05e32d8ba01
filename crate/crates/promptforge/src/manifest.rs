//! Run manifests: the audit record written beside every command's
//! outputs. A manifest captures the resolved settings, every named RNG
//! seed, content digests of the input files, backend identity and call
//! count, and wall-clock bounds, so a run can be replayed or billed
//! after the fact. The file is written atomically; reruns of the same
//! command differ only in their timestamps.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// File name used inside every output directory.
pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendSummary {
    pub kind: String,
    pub engine: String,
}

/// The audit record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand that ran.
    pub command: String,
    /// Fully resolved settings after flag and default merging.
    pub settings: BTreeMap<String, String>,
    /// Every named RNG seed in play.
    pub seeds: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub backend: Option<BackendSummary>,
    /// SHA-256 of each input file, keyed by the path as given.
    pub input_digests: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: Option<String>,
    /// Backend requests issued, when a backend was involved.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub call_count: Option<u64>,
    /// "success", or "failed" with the error in `failure`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    /// Start a manifest for `command` with the clock running.
    pub fn start(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            settings: BTreeMap::new(),
            seeds: BTreeMap::new(),
            backend: None,
            input_digests: BTreeMap::new(),
            started_at: timestamp(),
            finished_at: None,
            call_count: None,
            status: "running".to_string(),
            failure: None,
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.settings.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    /// Record the digest of one input file.
    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let digest = file_digest(path)?;
        self.input_digests
            .insert(path.display().to_string(), digest);
        Ok(self)
    }

    /// Close the manifest as a success or failure and stamp the end
    /// time.
    pub fn finish(&mut self, outcome: std::result::Result<(), &Error>) {
        self.finished_at = Some(timestamp());
        match outcome {
            Ok(()) => self.status = "success".to_string(),
            Err(error) => {
                self.status = "failed".to_string();
                self.failure = Some(error.to_string());
            }
        }
    }
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::io(format!("reading {} for digest", path.display()), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write the manifest into `dir` as [`MANIFEST_FILE`], atomically: the
/// JSON goes to a temporary file first and is renamed into place, so a
/// crash never leaves a truncated manifest.
pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let target = dir.join(MANIFEST_FILE);
    let temporary = dir.join(format!("{MANIFEST_FILE}.tmp"));
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Other(format!("serializing manifest: {e}")))?;
    {
        let mut file = std::fs::File::create(&temporary)
            .map_err(|e| Error::io(format!("creating {}", temporary.display()), e))?;
        file.write_all(json.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.sync_all())
            .map_err(|e| Error::io(format!("writing {}", temporary.display()), e))?;
    }
    std::fs::rename(&temporary, &target)
        .map_err(|e| Error::io(format!("renaming manifest into {}", dir.display()), e))?;
    Ok(target)
}
