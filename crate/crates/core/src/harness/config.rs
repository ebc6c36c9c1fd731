use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adapt::HyperParams;
use crate::bench::ScenarioSpec;
use crate::error::{Error, Result};

/// Prefix of environment variables that override config keys.
pub const ENV_PREFIX: &str = "RELIATTA_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Reliability-filtered adaptation with learned fusion weights.
    #[default]
    Robusttouch,
    /// Equal-weight fusion, no updates.
    NoAdapt,
    /// Mean fused-prediction entropy over every sample, equal weights.
    EntropyMinAll,
    /// Reliability-filtered adaptation with fusion pinned to (0.5, 0.5).
    StaticFusion,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Robusttouch,
        Method::NoAdapt,
        Method::EntropyMinAll,
        Method::StaticFusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Robusttouch => "robusttouch",
            Method::NoAdapt => "no_adapt",
            Method::EntropyMinAll => "entropy_min_all",
            Method::StaticFusion => "static_fusion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Pre-computed embeddings plus the shape the run expects them to have.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveSource {
    pub path: PathBuf,
    pub classes: usize,
    pub dim: usize,
}

/// Values to sweep; an empty axis keeps the base config's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub lr: Vec<f64>,
    pub fusion_lr: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub method: Vec<Method>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.lr.is_empty()
            && self.fusion_lr.is_empty()
            && self.alpha.is_empty()
            && self.lambda.is_empty()
            && self.method.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub hyper: HyperParams,
    /// Synthetic stream. The run seed replaces `scenario.seed` and
    /// `hyper.batch_size` replaces `scenario.batch_size`.
    pub scenario: Option<ScenarioSpec>,
    pub archive: Option<ArchiveSource>,
    pub out_dir: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub sweep: SweepAxes,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            hyper: HyperParams::default(),
            scenario: Some(ScenarioSpec::default()),
            archive: None,
            out_dir: None,
            seeds: vec![0],
            sweep: SweepAxes::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        match (&self.scenario, &self.archive) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "config names both a scenario and an archive; pick one".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("config needs a scenario or an archive".into()))
            }
            (Some(s), None) => s.validate()?,
            (None, Some(a)) => {
                if !a.path.is_file() {
                    return Err(Error::Config(format!(
                        "archive {} does not exist",
                        a.path.display()
                    )));
                }
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: context.to_string(),
            source,
        })
    }

    /// Reads a config file. A relative archive path is resolved against the
    /// directory holding the config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        if let (Some(a), Some(dir)) = (cfg.archive.as_mut(), path.parent()) {
            if a.path.is_relative() {
                a.path = dir.join(&a.path);
            }
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides. Keys are dotted paths into the JSON
    /// form of the config; values parse as JSON and fall back to strings.
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut doc = serde_json::to_value(self).map_err(|source| Error::Json {
            context: "config".into(),
            source,
        })?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            set_path(&mut doc, key.trim(), parse_value(raw.trim()))?;
        }
        serde_json::from_value(doc).map_err(|source| Error::Json {
            context: "config overrides".into(),
            source,
        })
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    if key.is_empty() {
        return Err(Error::Config("empty override key".into()));
    }
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let Value::Object(map) = node else {
            return Err(Error::Config(format!(
                "override `{key}`: `{}` is not an object",
                parts[..i].join(".")
            )));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// `RELIATTA_HYPER__LR=1e-5` becomes `hyper.lr=1e-5`: the prefix is
/// dropped, `__` separates path segments and keys are lowercased.
pub fn env_overrides<I>(vars: I) -> Vec<String>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut out: Vec<String> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            (!rest.is_empty()).then(|| format!("{}={v}", rest.to_lowercase().replace("__", ".")))
        })
        .collect();
    out.sort();
    out
}
