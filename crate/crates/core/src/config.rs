//! Run configuration: one TOML file with a section per stage, plus
//! `section.key=value` overrides.
//!
//! ```toml
//! [data]
//! dataset = "synthetic"        # or weibo / twitter / aps
//! cascades = "cascades.txt"    # omitted: generate from [synthetic]
//! global_graph = "global.txt"
//! out_dir = "runs/demo"
//!
//! [tokenizer]
//! num_patches = 8
//! max_len = 16
//!
//! [backbone]
//! dim = 32
//! layers = 2
//!
//! [train]
//! lr = 1e-3
//! patience = 16
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapter::ShellConfig;
use crate::backbone::BackboneConfig;
use crate::cascade::SyntheticConfig;
use crate::global::GlobalEmbedConfig;
use crate::local::LocalEmbedConfig;
use crate::tokenizer::TokenizerConfig;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: String,
    pub cascades: Option<PathBuf>,
    pub global_graph: Option<PathBuf>,
    /// Seconds; the dataset preset when absent.
    pub observation_time: Option<f64>,
    pub split: [f64; 3],
    pub split_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
            cascades: None,
            global_graph: None,
            observation_time: None,
            split: [0.7, 0.15, 0.15],
            split_seed: 42,
            out_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub synthetic: SyntheticConfig,
    pub local: LocalEmbedConfig,
    pub global: GlobalEmbedConfig,
    pub tokenizer: TokenizerConfig,
    pub backbone: BackboneConfig,
    pub shell: ShellConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let v: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(v)
    }

    fn from_table(t: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(t)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, applies `overrides` (`section.key=value`, value in TOML
    /// syntax or a bare string), then validates. Relative data paths are
    /// resolved against the config file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut t: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut t, o)?;
        }
        let mut cfg = Self::from_table(t)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.cascades, &mut cfg.data.global_graph].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.data.out_dir.is_relative() {
            cfg.data.out_dir = base.join(&cfg.data.out_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.local.validate()?;
        self.global.validate()?;
        self.tokenizer.validate()?;
        self.backbone.validate()?;
        self.train.validate()?;
        if self.data.cascades.is_none() {
            self.synthetic.validate()?;
        }
        if self.tokenizer.num_patches - 1 > self.backbone.max_context {
            return Err(Error::Config(format!(
                "tokenizer.num_patches - 1 = {} exceeds backbone.max_context = {}",
                self.tokenizer.num_patches - 1,
                self.backbone.max_context
            )));
        }
        Ok(())
    }
}

/// Sets `section.key` (any depth) in `t`.
pub fn apply_override(t: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key '{key}' is malformed")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = t;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': {p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
