//! Flat `key = value` run files whose keys mirror long flag names.
//!
//! ```text
//! # sweep defaults
//! precisions = uint8,int16
//! n-vectors = 2000
//! ```
//!
//! Values are spliced into the argument list right after the subcommand, so
//! anything given on the command line wins.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_config(text: &str, origin: &Path) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(HarnessError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigMap> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text, path)
}

/// How a known flag consumes a config value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagKind {
    Value,
    Switch,
}

/// Turns config entries into flag tokens. Keys rejected by `lookup` are
/// skipped; switches are emitted only for `true`, `yes` or `1`.
pub fn config_to_args(map: &ConfigMap, lookup: impl Fn(&str) -> Option<FlagKind>) -> Vec<String> {
    let mut out = Vec::new();
    for (key, value) in map {
        match lookup(key) {
            Some(FlagKind::Value) => out.push(format!("--{key}={value}")),
            Some(FlagKind::Switch) => {
                if matches!(value.to_ascii_lowercase().as_str(), "true" | "yes" | "1") {
                    out.push(format!("--{key}"));
                }
            }
            None => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes_keys() {
        let m = parse_config("# c\nprecision = uint8\n--n_vectors=20\n\n", Path::new("c")).unwrap();
        assert_eq!(m["precision"], "uint8");
        assert_eq!(m["n-vectors"], "20");
        assert!(parse_config("oops\n", Path::new("c")).is_err());
        assert!(parse_config("= 3\n", Path::new("c")).is_err());
    }

    #[test]
    fn filters_unknown_keys() {
        let m = parse_config("a = 1\nb = true\nc = 2\nd = no\n", Path::new("c")).unwrap();
        let args = config_to_args(&m, |k| match k {
            "a" => Some(FlagKind::Value),
            "b" | "d" => Some(FlagKind::Switch),
            _ => None,
        });
        assert_eq!(args, ["--a=1", "--b"]);
    }
}
