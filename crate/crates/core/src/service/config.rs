use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::belief::DEFAULT_RESOLUTION;
use crate::error::{Error, Result};
use crate::recommender::DEFAULT_RECOMMENDATION_SIZE;
use crate::selectors::SelectorKind;

pub const DEFAULT_TTL_SECS: u64 = 24 * 60 * 60;

/// Service settings: a TOML file, then `VAA_*` environment overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub model: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub default_selector: SelectorKind,
    pub m: usize,
    pub resolution: usize,
    /// Session database file; sessions live in memory when unset.
    pub store: Option<PathBuf>,
    pub session_ttl_secs: u64,
    /// Directory served under `/` (the browser client bundle).
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            model: None,
            data_dir: None,
            default_selector: SelectorKind::PosteriorRmse,
            m: DEFAULT_RECOMMENDATION_SIZE,
            resolution: DEFAULT_RESOLUTION,
            store: None,
            session_ttl_secs: DEFAULT_TTL_SECS,
            static_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let base = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => Self::default(),
        };
        base.with_overrides(|k| std::env::var(k).ok())
    }

    /// Applies `VAA_BIND`, `VAA_MODEL`, `VAA_DATA_DIR`, `VAA_SELECTOR`,
    /// `VAA_M`, `VAA_RESOLUTION`, `VAA_STORE`, `VAA_SESSION_TTL_SECS` and
    /// `VAA_STATIC_DIR` as looked up by `var`.
    pub fn with_overrides(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self> {
        fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
            v.parse().map_err(|_| Error::input(format!("{key}: not a number: {v}")))
        }
        if let Some(v) = var("VAA_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("VAA_MODEL") {
            self.model = Some(v.into());
        }
        if let Some(v) = var("VAA_DATA_DIR") {
            self.data_dir = Some(v.into());
        }
        if let Some(v) = var("VAA_SELECTOR") {
            self.default_selector = v.parse()?;
        }
        if let Some(v) = var("VAA_M") {
            self.m = num("VAA_M", v)?;
        }
        if let Some(v) = var("VAA_RESOLUTION") {
            self.resolution = num("VAA_RESOLUTION", v)?;
        }
        if let Some(v) = var("VAA_STORE") {
            self.store = Some(v.into());
        }
        if let Some(v) = var("VAA_SESSION_TTL_SECS") {
            self.session_ttl_secs = num("VAA_SESSION_TTL_SECS", v)?;
        }
        if let Some(v) = var("VAA_STATIC_DIR") {
            self.static_dir = Some(v.into());
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_environment() {
        let cfg =
            ServiceConfig::from_toml("bind = \"0.0.0.0:9000\"\nm = 10\ndefault_selector = \"uncertainty\"\n").unwrap();
        assert_eq!(cfg.bind, "0.0.0.0:9000");
        assert_eq!(cfg.m, 10);
        assert_eq!(cfg.resolution, DEFAULT_RESOLUTION);
        let cfg = cfg
            .with_overrides(|k| match k {
                "VAA_M" => Some("5".into()),
                "VAA_SELECTOR" => Some("fixed_gini".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(cfg.m, 5);
        assert_eq!(cfg.default_selector, SelectorKind::FixedGini);
        assert_eq!(cfg.bind, "0.0.0.0:9000");
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(ServiceConfig::from_toml("colour = 1").is_err());
        let bad = ServiceConfig::default().with_overrides(|k| (k == "VAA_M").then(|| "many".into()));
        assert!(bad.is_err());
        let bad = ServiceConfig::default().with_overrides(|k| (k == "VAA_SELECTOR").then(|| "best".into()));
        assert!(matches!(bad, Err(Error::UnknownSelector { .. })));
    }
}
