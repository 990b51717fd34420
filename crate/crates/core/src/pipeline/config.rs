//! Run configuration, stored as TOML.
//!
//! Relative paths in a config file resolve against the file's directory.
//! Any field can be replaced with a dotted `key=value` override, where the
//! value is parsed as a TOML literal and falls back to a plain string.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, DEFAULT_DEVIATION_FRACTION};
use crate::error::{Error, Result};
use crate::render::RenderConfig;
use crate::twin::{FitOptions, LossKind, SearchSpace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub id: String,
    pub mesh: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub deviation_fraction: f64,
    /// Augmented samples per run, across all classes.
    pub n: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            deviation_fraction: DEFAULT_DEVIATION_FRACTION,
            n: 600,
        }
    }
}

/// How targets get their pseudo label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentRule {
    /// Nearest canonical-view features.
    Canonical,
    /// Lowest loss after a short twin fit against every asset.
    #[default]
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignSection {
    pub rule: AssignmentRule,
    /// Coordinate-descent epochs per asset under the `fit` rule.
    pub max_epochs: usize,
}

impl Default for AssignSection {
    fn default() -> Self {
        AssignSection {
            rule: AssignmentRule::Fit,
            max_epochs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistBaselineSection {
    /// Renderings per candidate when scoring a shared attribute vector.
    pub jitter_draws: usize,
    /// Jitter standard deviation as a fraction of each grid step.
    pub jitter_step_fraction: f64,
    pub max_epochs: usize,
}

impl Default for DistBaselineSection {
    fn default() -> Self {
        DistBaselineSection {
            jitter_draws: 8,
            jitter_step_fraction: 0.25,
            max_epochs: 2,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_coreset() -> usize {
    8
}

fn default_epochs() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub targets_dir: PathBuf,
    pub assets: Vec<AssetEntry>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Coreset size `O` per class.
    #[serde(default = "default_coreset")]
    pub coreset_per_class: usize,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub assign: AssignSection,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub dist_baseline: DistBaselineSection,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub search: SearchSpace,
}

impl PipelineConfig {
    pub fn new(targets_dir: PathBuf, assets: Vec<AssetEntry>, output_dir: PathBuf) -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            targets_dir,
            assets,
            output_dir,
            seed: 0,
            coreset_per_class: default_coreset(),
            loss: LossKind::default(),
            max_epochs: default_epochs(),
            assign: AssignSection::default(),
            augment: AugmentSection::default(),
            dist_baseline: DistBaselineSection::default(),
            render: RenderConfig::default(),
            search: SearchSpace::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Invariant(format!("config to TOML: {e}")))
    }

    /// Read a config file and anchor its relative paths at the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        anchor(&mut cfg.targets_dir);
        anchor(&mut cfg.output_dir);
        cfg.assets.iter_mut().for_each(|a| anchor(&mut a.mesh));
        Ok(cfg)
    }

    /// Replace the field at dotted `key` with `value`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let mut root = toml::Value::try_from(&*self)
            .map_err(|e| Error::Invariant(format!("config to TOML: {e}")))?;
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));

        let mut slot = &mut root;
        for part in key.split('.') {
            slot = match slot {
                toml::Value::Table(t) => t
                    .get_mut(part)
                    .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?,
                toml::Value::Array(a) => part
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| a.get_mut(i))
                    .ok_or_else(|| Error::Config(format!("bad index in `{key}`")))?,
                _ => return Err(Error::Config(format!("`{key}` goes through a scalar"))),
            };
        }
        // integers given where floats live, e.g. `render.ambient=0`
        *slot = match (&*slot, parsed) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        *self = root
            .try_into()
            .map_err(|e| Error::Config(format!("override `{key}={value}`: {e}")))?;
        Ok(())
    }

    /// Apply `key=value` strings in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            self.apply_override(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Structural checks that need no filesystem access.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.assets.is_empty() {
            return Err(Error::Config("at least one asset is required".into()));
        }
        let mut ids: Vec<&str> = self.assets.iter().map(|a| a.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate asset id `{}`", w[0])));
        }
        if self.coreset_per_class == 0 {
            return Err(Error::Config("coreset_per_class must be at least 1".into()));
        }
        if self.augment.n < self.coreset_per_class {
            return Err(Error::Config(format!(
                "augment.n = {} must be at least coreset_per_class = {}",
                self.augment.n, self.coreset_per_class
            )));
        }
        if self.max_epochs == 0 || self.dist_baseline.max_epochs == 0 || self.assign.max_epochs == 0
        {
            return Err(Error::Config("epoch counts must be at least 1".into()));
        }
        if self.dist_baseline.jitter_draws < 2 {
            return Err(Error::Config(
                "dist_baseline.jitter_draws must be at least 2".into(),
            ));
        }
        if !(self.dist_baseline.jitter_step_fraction >= 0.0) {
            return Err(Error::Config(
                "dist_baseline.jitter_step_fraction must be >= 0".into(),
            ));
        }
        self.augment_config(0).validate()?;
        self.render.validate()?;
        self.search
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// [`validate`](Self::validate) plus existence of every input path.
    pub fn validate_paths(&self) -> Result<()> {
        self.validate()?;
        if !self.targets_dir.is_dir() {
            return Err(Error::Config(format!(
                "targets_dir {} is not a directory",
                self.targets_dir.display()
            )));
        }
        for a in &self.assets {
            if !a.mesh.is_file() {
                return Err(Error::Config(format!(
                    "mesh for asset `{}` not found at {}",
                    a.id,
                    a.mesh.display()
                )));
            }
        }
        Ok(())
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            loss: self.loss,
            max_epochs: self.max_epochs,
        }
    }

    pub fn augment_config(&self, seed: u64) -> AugmentConfig {
        AugmentConfig {
            deviation_fraction: self.augment.deviation_fraction,
            n: self.augment.n,
            seed,
        }
    }
}

/// Independent 64-bit seed for a named purpose (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    let mut z = purpose.bytes().fold(seed ^ 0x9E37_79B9_7F4A_7C15, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    });
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
