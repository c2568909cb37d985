use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::service::DEFAULT_TOKEN_LIFETIME;

/// Server settings, read from a TOML file and then overridden by environment
/// variables:
///
/// | key                  | env                           | default            |
/// |----------------------|-------------------------------|--------------------|
/// | `listen`             | `CLASSGIT_LISTEN`             | `127.0.0.1:8080`   |
/// | `store_dir`          | `CLASSGIT_STORE_DIR`          | `classgit-data`    |
/// | `token_lifetime_secs`| `CLASSGIT_TOKEN_LIFETIME_SECS`| `86400`            |
/// | `pbkdf2_rounds`      | `CLASSGIT_PBKDF2_ROUNDS`      | `100000`           |
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: SocketAddr,
    pub store_dir: PathBuf,
    pub token_lifetime_secs: i64,
    pub pbkdf2_rounds: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: ([127, 0, 0, 1], 8080).into(),
            store_dir: PathBuf::from("classgit-data"),
            token_lifetime_secs: DEFAULT_TOKEN_LIFETIME,
            pbkdf2_rounds: crate::auth::DEFAULT_PBKDF2_ROUNDS,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{var}={value:?}: {reason}")]
    Env { var: &'static str, value: String, reason: String },
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Reads `path` if given, then applies overrides from `env`.
    pub fn load(
        path: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_owned(),
                    source,
                })?;
                Self::from_toml(&text, p)?
            }
            None => Config::default(),
        };
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::Env {
                var,
                reason: e.to_string(),
                value,
            })
        }
        if let Some(v) = env("CLASSGIT_LISTEN") {
            config.listen = parse("CLASSGIT_LISTEN", v)?;
        }
        if let Some(v) = env("CLASSGIT_STORE_DIR") {
            config.store_dir = PathBuf::from(v);
        }
        if let Some(v) = env("CLASSGIT_TOKEN_LIFETIME_SECS") {
            config.token_lifetime_secs = parse("CLASSGIT_TOKEN_LIFETIME_SECS", v)?;
        }
        if let Some(v) = env("CLASSGIT_PBKDF2_ROUNDS") {
            config.pbkdf2_rounds = parse("CLASSGIT_PBKDF2_ROUNDS", v)?;
        }
        Ok(config)
    }
}
