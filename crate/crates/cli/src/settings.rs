//! `key = value` config files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Raw key-value pairs in file order, last occurrence wins.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
    source: String,
}

fn parse_error(source: &str, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Core(recap::Error::Parse { path: source.to_string(), line: line as u64, msg: msg.into() })
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(parse_error(source, i + 1, format!("expected `key = value`, found `{line}`")));
            };
            let key = k.trim().to_ascii_lowercase().replace('-', "_");
            if key.is_empty() {
                return Err(parse_error(source, i + 1, "empty key"));
            }
            entries.insert(key, (v.trim().to_string(), i + 1));
        }
        Ok(Self { entries, source: source.to_string() })
    }

    /// Removes and parses `key`; the caller checks for leftovers afterwards.
    pub fn take<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        let Some((value, line)) = self.entries.remove(key) else {
            return Ok(None);
        };
        value
            .parse()
            .map(Some)
            .map_err(|_| parse_error(&self.source, line, format!("cannot parse `{key} = {value}`")))
    }

    /// Removes every `prefix.name` key and returns `name -> value`.
    pub fn take_prefixed(&mut self, prefix: &str) -> Vec<(String, String, usize)> {
        let keys: Vec<String> =
            self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let (v, line) = self.entries.remove(&k).unwrap();
                (k[prefix.len()..].to_string(), v, line)
            })
            .collect()
    }

    pub fn finish(self) -> CliResult {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (_, line))) => Err(parse_error(&self.source, line, format!("unknown key `{k}`"))),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Overrides named numeric fields of a serde struct.
pub fn apply_numeric<T: Serialize + DeserializeOwned>(
    base: &T,
    overrides: &[(String, String, usize)],
    source: &str,
) -> CliResult<T> {
    let mut value = serde_json::to_value(base)?;
    let obj = value.as_object_mut().expect("prior structs serialize to objects");
    for (name, raw, line) in overrides {
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_error(source, *line, format!("`{raw}` is not a number")))?;
        match obj.get_mut(name.as_str()) {
            Some(slot) if slot.is_number() => *slot = serde_json::json!(v),
            _ => return Err(parse_error(source, *line, format!("unknown prior `{name}`"))),
        }
    }
    Ok(serde_json::from_value(value)?)
}
