//! Flat key=value configuration with section headers, flag overrides, and a
//! canonical hash of the resolved parameter set.
//!
//! Configuration precedence, lowest to highest: built-in default, config file
//! entry, command-line flag. File entries may live in a `[section]` named
//! after a verb (looked up as `verb.key`) or at top level (bare `key`); the
//! sectioned entry wins over the bare one for that verb.
//!
//! Every parameter that influences the output is recorded while it is
//! resolved; the sorted `key=value` listing is the canonical spec whose
//! SHA-256 digest stamps every CSV row an experiment writes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use sha2::{Digest, Sha256};

/// Parsed config file contents.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// Parses `key=value` lines. `#` or `;` start a comment, blank lines are
    /// skipped, `[section]` prefixes following keys as `section.key`.
    pub fn parse(text: &str) -> Result<ConfigMap> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(anyhow!("line {}: empty section name", lineno + 1));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got '{line}'", lineno + 1))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(anyhow!("line {}: empty key", lineno + 1));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            entries.insert(full, value.trim().to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<ConfigMap> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    fn lookup(&self, verb: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&format!("{verb}.{key}"))
            .or_else(|| self.entries.get(key))
            .map(String::as_str)
    }
}

/// Resolves typed parameters (flag > config > default) and accumulates the
/// canonical spec for hashing.
pub struct Resolver {
    map: ConfigMap,
    verb: &'static str,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(verb: &'static str, map: ConfigMap) -> Resolver {
        let mut resolved = BTreeMap::new();
        resolved.insert("verb".to_string(), verb.to_string());
        Resolver {
            map,
            verb,
            resolved,
        }
    }

    /// Resolves one parameter and records it in the canonical spec.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        <T as FromStr>::Err: std::fmt::Display,
    {
        let out = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.map.lookup(self.verb, key) {
            raw.parse::<T>()
                .map_err(|e| anyhow!("config key '{key}': cannot parse '{raw}': {e}"))?
        } else {
            default
        };
        self.resolved.insert(key.to_string(), out.to_string());
        Ok(out)
    }

    /// Records a derived value that affects artifacts but is not user-set.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Resolves a delivery location (flag > config > default) without
    /// recording it: where artifacts land does not change what they contain,
    /// so output paths stay out of the canonical spec and its hash.
    pub fn location(&self, key: &str, flag: Option<String>, default: &str) -> String {
        if let Some(v) = flag {
            v
        } else if let Some(raw) = self.map.lookup(self.verb, key) {
            raw.to_string()
        } else {
            default.to_string()
        }
    }

    /// Canonical spec text: sorted `key=value` lines.
    pub fn canonical_spec(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.resolved {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 digest of the canonical spec.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_spec().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_flat_keys() {
        let text = "# global\nseed = 7\n[bench]\ndose = 64\n; trailing comment\nangles=180\n";
        let map = ConfigMap::parse(text).unwrap();
        assert_eq!(map.lookup("bench", "seed"), Some("7"));
        assert_eq!(map.lookup("bench", "dose"), Some("64"));
        assert_eq!(map.lookup("bench", "angles"), Some("180"));
        assert_eq!(map.lookup("noise", "dose"), None);
        assert_eq!(map.lookup("noise", "seed"), Some("7"));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigMap::parse("no equals sign").is_err());
        assert!(ConfigMap::parse("= value").is_err());
        assert!(ConfigMap::parse("[]\n").is_err());
    }

    #[test]
    fn precedence_is_flag_over_config_over_default() {
        let map = ConfigMap::parse("dose = 64\n").unwrap();
        let mut r = Resolver::new("bench", map.clone());
        assert_eq!(r.value("dose", Some(32.0), 128.0).unwrap(), 32.0);
        let mut r = Resolver::new("bench", map);
        assert_eq!(r.value::<f64>("dose", None, 128.0).unwrap(), 64.0);
        let mut r = Resolver::new("bench", ConfigMap::default());
        assert_eq!(r.value::<f64>("dose", None, 128.0).unwrap(), 128.0);
    }

    #[test]
    fn sectioned_key_beats_bare_key() {
        let map = ConfigMap::parse("dose=1\n[bench]\ndose=2\n").unwrap();
        let mut r = Resolver::new("bench", map.clone());
        assert_eq!(r.value::<f64>("dose", None, 0.0).unwrap(), 2.0);
        let mut r = Resolver::new("noise", map);
        assert_eq!(r.value::<f64>("dose", None, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn hash_tracks_resolved_values_only() {
        let mut a = Resolver::new("bench", ConfigMap::default());
        a.value::<f64>("dose", None, 128.0).unwrap();
        let mut b = Resolver::new("bench", ConfigMap::parse("dose=128\n").unwrap());
        b.value::<f64>("dose", None, 64.0).unwrap();
        // Same effective value, same hash, regardless of where it came from.
        assert_eq!(a.config_hash(), b.config_hash());

        let mut c = Resolver::new("bench", ConfigMap::default());
        c.value::<f64>("dose", None, 64.0).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn locations_never_reach_the_hash() {
        let map = ConfigMap::parse("out=from_config\n").unwrap();
        let mut r = Resolver::new("bench", map);
        r.value::<f64>("dose", None, 128.0).unwrap();
        let before = r.config_hash();
        assert_eq!(r.location("out", None, "fallback"), "from_config");
        assert_eq!(
            r.location("out", Some("flagged".to_string()), "fallback"),
            "flagged"
        );
        assert_eq!(r.location("missing", None, "fallback"), "fallback");
        assert_eq!(r.config_hash(), before);
        assert!(!r.canonical_spec().contains("out="));
    }
}
