//! Loader for the bundled ATC example corpus: theory files, proof scripts,
//! and a manifest describing expected outcomes.

use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Entry {
    pub name: String,
    pub theory: String,
    pub scripts: Option<String>,
    pub proof: Option<String>,
    pub conjecture: String,
    pub expected: Expected,
    pub budget_ms: u64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Proved,
    Open,
    Counterexample,
}

/// Directory holding the corpus shipped with this repository.
pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/atc")
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, String> {
    let raw = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| format!("manifest.json: {e}"))?;
    serde_json::from_str(&raw).map_err(|e| format!("manifest.json: {e}"))
}
