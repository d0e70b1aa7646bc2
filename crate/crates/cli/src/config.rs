//! Layered run configuration (defaults, JSON file, flags) and manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Merges `defaults`, the JSON file (or the `config` object of a manifest)
/// and the non-null flags, in that order of precedence, and returns the
/// typed result together with the effective JSON.
pub fn resolve<T: Serialize + DeserializeOwned>(
    defaults: Value,
    file: Option<&Path>,
    flags: &T,
) -> Result<(T, Value), CliError> {
    let mut merged = into_map(defaults);
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
        let doc = match doc {
            Value::Object(mut m) if m.contains_key("config_sha256") => m.remove("config").unwrap_or(Value::Null),
            other => other,
        };
        match doc {
            Value::Object(m) => overlay(&mut merged, m),
            _ => return Err(CliError::Config(format!("config {} must be a JSON object", path.display()))),
        }
    }
    let flags = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?;
    overlay(&mut merged, into_map(flags));
    let effective = Value::Object(merged);
    let typed = serde_json::from_value(effective.clone()).map_err(|e| CliError::Config(format!("config: {e}")))?;
    Ok((typed, effective))
}

fn into_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

/// SHA-256 of the effective configuration without its output path, so a
/// re-run into another file carries the same hash.
pub fn config_hash(effective: &Value) -> String {
    let mut v = effective.clone();
    if let Value::Object(m) = &mut v {
        m.remove("out");
    }
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub effective: &'a Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time: Duration,
    pub out: &'a Path,
}

impl Manifest<'_> {
    pub fn write(&self) -> Result<PathBuf, CliError> {
        let doc = json!({
            "tool": "memlang",
            "subcommand": self.subcommand,
            "config": self.effective,
            "config_sha256": config_hash(self.effective),
            "seed": self.seed,
            "rng": memlang_core::noise::RNG_ALGORITHM,
            "versions": {
                "memlang": env!("CARGO_PKG_VERSION"),
                "memlang-core": memlang_core::VERSION,
            },
            "platform": format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
            "threads": self.threads,
            "wall_time_s": self.wall_time.as_secs_f64(),
            "output": self.out,
        });
        let path = manifest_path(self.out);
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
