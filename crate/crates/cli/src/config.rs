//! Optional TOML configuration. Every key can be overridden by the matching
//! command-line flag; relative paths are resolved against the directory of
//! the config file.
//!
//! ```toml
//! seed = 7
//! strategy = "REALISTIC"
//! pools = "data/pools"
//! rules = "policy.rules"
//! roles = "roles.tsv"
//! ledger = "/secure/ledger.jsonl"
//! gazetteer = "gazetteer.tsv"
//! standoff = "annotations.tsv"
//! detectors = ["url", "email", "phone", "hashtag", "username"]
//!
//! [serve]
//! addr = "127.0.0.1:8080"
//! audit_log = "review-audit.jsonl"
//! ui = "review_ui/dist"
//! lease_minutes = 15
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

/// Environment variable naming the pool directory. A `--pools` flag wins
/// over it; it wins over the config file.
pub const POOLS_ENV: &str = "REDACTOR_POOLS";

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub strategy: Option<String>,
    pub pools: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub roles: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub standoff: Option<PathBuf>,
    pub detectors: Option<Vec<String>>,
    #[serde(default)]
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: Option<String>,
    pub audit_log: Option<PathBuf>,
    pub ui: Option<PathBuf>,
    pub lease_minutes: Option<u64>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut config: FileConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(base) = origin.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.pools);
        fix(&mut self.rules);
        fix(&mut self.roles);
        fix(&mut self.ledger);
        fix(&mut self.gazetteer);
        fix(&mut self.standoff);
        fix(&mut self.serve.audit_log);
        fix(&mut self.serve.ui);
    }
}

/// First of `flag`, then `fallback`.
pub fn pick<T: Clone>(flag: &Option<T>, fallback: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| fallback.clone())
}

/// Pool directory from the flag, the environment, or the config file.
pub fn pools_dir(flag: &Option<PathBuf>, env: Option<String>, config: &FileConfig) -> Option<PathBuf> {
    flag.clone()
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| config.pools.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let text = "seed = 3\nrules = \"p.rules\"\nledger = \"/abs/l.jsonl\"\n[serve]\nui = \"dist\"\n";
        let c = FileConfig::parse(text, Path::new("/etc/redactor/config.toml")).unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.rules.unwrap(), Path::new("/etc/redactor/p.rules"));
        assert_eq!(c.ledger.unwrap(), Path::new("/abs/l.jsonl"));
        assert_eq!(c.serve.ui.unwrap(), Path::new("/etc/redactor/dist"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = FileConfig::parse("sede = 3\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn pools_precedence() {
        let config = FileConfig {
            pools: Some("from-config".into()),
            ..Default::default()
        };
        let flag = Some(PathBuf::from("from-flag"));
        assert_eq!(pools_dir(&flag, Some("from-env".into()), &config).unwrap(), Path::new("from-flag"));
        assert_eq!(pools_dir(&None, Some("from-env".into()), &config).unwrap(), Path::new("from-env"));
        assert_eq!(pools_dir(&None, Some(String::new()), &config).unwrap(), Path::new("from-config"));
        assert_eq!(pools_dir(&None, None, &FileConfig::default()), None);
    }
}
