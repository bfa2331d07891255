//! `key = value` config files and flag > file > default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::anyhow;

use crate::{CliError, CliResult};

/// Every key any subcommand understands. Unknown keys are treated as typos
/// and rejected outright; keys a given subcommand does not use are ignored,
/// so one file can configure a whole pipeline.
const KNOWN_KEYS: &[&str] = &[
    "aggregation",
    "batch-size",
    "candidates",
    "checkpoint",
    "clusters",
    "d-img",
    "d-txt",
    "epochs",
    "image-emb",
    "input",
    "layer-dims",
    "lr",
    "margin",
    "max-positives",
    "modality",
    "modality-split",
    "mode",
    "momentum",
    "negatives",
    "optimizer",
    "out",
    "outfit-size",
    "outfits",
    "products-per-cluster",
    "queries",
    "resample",
    "scorer",
    "seed",
    "sigma",
    "test-fraction",
    "text-emb",
    "threads",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Parses `key = value` lines; blank lines and `#` comment lines are
    /// skipped. Keys are the long flag names without the leading dashes.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(anyhow!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(anyhow!(
                    "config line {} is not `key = value`: {raw}",
                    index + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(anyhow!(
                    "unknown config key `{key}` on line {}",
                    index + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn parsed<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Usage(anyhow!("config key `{key}` has invalid value `{raw}`: {e}"))
            }),
        }
    }

    /// Flag > config file > built-in default.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(match flag {
            Some(value) => value,
            None => self.parsed(key)?.unwrap_or(default),
        })
    }

    /// Flag > config file; `None` when neither supplies the key.
    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(match flag {
            Some(value) => Some(value),
            None => self.parsed(key)?,
        })
    }

    /// Flag > config file, and the key must be supplied by one of them.
    pub fn require<T>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.resolve_opt(flag, key)?.ok_or_else(|| {
            CliError::Usage(anyhow!("missing --{key} (flag or `{key}` config entry)"))
        })
    }
}
