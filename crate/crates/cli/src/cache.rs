//! Output cache keyed by the sha256 of the canonical run description.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CACHE_ENV: &str = "STARSPEC_CACHE_DIR";
/// Written last, so an interrupted store never looks complete.
const COMPLETE: &str = ".complete";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `$STARSPEC_CACHE_DIR`, or `.starspec-cache` inside the output directory.
pub fn cache_root(out: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| out.join(".starspec-cache"))
}

pub fn load(root: &Path, key: &str) -> Option<Vec<(String, Vec<u8>)>> {
    let dir = root.join(key);
    let names = fs::read_to_string(dir.join(COMPLETE)).ok()?;
    names.lines().map(|name| fs::read(dir.join(name)).ok().map(|b| (name.to_string(), b))).collect()
}

pub fn store(root: &Path, key: &str, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let dir = root.join(key);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    }
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    let p = dir.join(COMPLETE);
    fs::write(&p, names.join("\n")).map_err(|e| CliError::io(&p, e))
}
