//! Crawl run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

pub const MAX_WORKERS: usize = 200;
pub const DEFAULT_WORKERS: usize = 50;
pub const DEFAULT_PER_HOST_RATE: u32 = 60;

/// One portal to crawl: the adapter spec file and the endpoint it targets.
#[derive(Debug, Clone, Deserialize)]
pub struct AdapterBinding {
    pub spec: PathBuf,
    pub endpoint: String,
}

/// Crawl run configuration, loaded from TOML. Relative paths resolve against
/// the config file's directory.
#[derive(Debug, Clone, Deserialize)]
pub struct CrawlConfig {
    pub adapters: Vec<AdapterBinding>,
    pub targets: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Requests per minute per portal endpoint.
    #[serde(default = "default_per_host_rate")]
    pub per_host_rate: u32,
    #[serde(default = "default_egress_pool")]
    pub egress_pool: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    pub output_path: PathBuf,
    /// Optional session-transcript JSONL output.
    #[serde(default)]
    pub transcripts_path: Option<PathBuf>,
}

fn default_workers() -> usize {
    DEFAULT_WORKERS
}

fn default_per_host_rate() -> u32 {
    DEFAULT_PER_HOST_RATE
}

fn default_egress_pool() -> Vec<String> {
    vec!["egress-0".to_string()]
}

impl CrawlConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: CrawlConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        if let Some(dir) = path.parent() {
            config.resolve_relative(dir);
        }
        config.validate()?;
        Ok(config)
    }

    fn resolve_relative(&mut self, dir: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&p);
            }
        };
        resolve(&mut self.targets);
        resolve(&mut self.output_path);
        for binding in &mut self.adapters {
            resolve(&mut binding.spec);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.adapters.is_empty() {
            return Err(ConfigError::Invalid("no adapters configured".into()));
        }
        if self.workers == 0 || self.workers > MAX_WORKERS {
            return Err(ConfigError::Invalid(format!(
                "workers must be in 1..={MAX_WORKERS}, got {}",
                self.workers
            )));
        }
        if self.per_host_rate == 0 {
            return Err(ConfigError::Invalid("per_host_rate must be positive".into()));
        }
        if self.egress_pool.is_empty() {
            return Err(ConfigError::Invalid("egress_pool must not be empty".into()));
        }
        for binding in &self.adapters {
            if binding.endpoint.trim().is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "adapter {} has an empty endpoint",
                    binding.spec.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn loads_and_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("crawl.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        write!(
            f,
            r#"
targets = "targets.csv"
output_path = "out/dataset.jsonl"
seed = 7

[[adapters]]
spec = "adapters/att.toml"
endpoint = "http://127.0.0.1:4001"
"#
        )
        .unwrap();
        let config = CrawlConfig::load(&path).unwrap();
        assert_eq!(config.workers, DEFAULT_WORKERS);
        assert_eq!(config.per_host_rate, DEFAULT_PER_HOST_RATE);
        assert!(config.targets.starts_with(dir.path()));
        assert!(config.adapters[0].spec.starts_with(dir.path()));
    }

    #[test]
    fn worker_bounds_are_enforced() {
        let config = CrawlConfig {
            adapters: vec![AdapterBinding {
                spec: "a.toml".into(),
                endpoint: "http://x".into(),
            }],
            targets: "t.csv".into(),
            workers: 201,
            per_host_rate: 60,
            egress_pool: vec!["e".into()],
            seed: 0,
            output_path: "o.jsonl".into(),
            transcripts_path: None,
        };
        assert!(config.validate().is_err());
        let ok = CrawlConfig { workers: 200, ..config };
        assert!(ok.validate().is_ok());
    }
}
