//! Option resolution shared by all commands.
//!
//! Each command's options are assembled in three layers, later ones winning:
//! built-in defaults, flags given on the command line, and an optional JSON
//! config file. The config may be a bare options object or a manifest written
//! by an earlier run, in which case its `options` member is used.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Recursive merge: objects are merged key by key, anything else is replaced.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

/// Flags that were actually given, as a JSON object.
#[derive(Default)]
pub struct Given(Map<String, Value>);

impl Given {
    pub fn put<V: Serialize>(&mut self, key: &str, v: Option<V>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

pub fn resolve<T: DeserializeOwned>(command: &str, defaults: Value, flags: Given, config: Option<&Path>) -> Result<T> {
    let mut v = defaults;
    merge(&mut v, flags.into_value());
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(obj) = cfg.as_object_mut() {
            if obj.contains_key("options") && obj.contains_key("command") {
                let from = obj["command"].as_str().unwrap_or_default();
                if from != command {
                    bail!("config {} is a `{from}` manifest, not `{command}`", path.display());
                }
                cfg = obj.remove("options").unwrap_or(Value::Null);
            }
        }
        if !cfg.is_object() {
            bail!("config {} must be a JSON object", path.display());
        }
        merge(&mut v, cfg);
    }
    serde_json::from_value(v).map_err(|e| anyhow::anyhow!("invalid {command} options: {e}"))
}

#[derive(Serialize)]
struct Manifest<'a, T> {
    command: &'a str,
    version: &'a str,
    options: &'a T,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Writes `manifest.json`. It holds every resolved option, so passing it back
/// with `--config` reproduces the run.
pub fn write_manifest<T: Serialize>(dir: &Path, command: &str, options: &T) -> Result<()> {
    let m = Manifest { command, version: env!("CARGO_PKG_VERSION"), options };
    write(&dir.join("manifest.json"), &to_json(&m)?)
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}
