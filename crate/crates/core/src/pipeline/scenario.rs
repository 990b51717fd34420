//! Synthetic target domain: the renderer itself plays the "real" camera,
//! drawing attributes from hidden biased distributions.
//!
//! Layout written under the scenario directory:
//!
//! ```text
//! assets/<id>.obj
//! targets/target_NNNN.png
//! targets/labels.jsonl   hidden ground truth, one record per target
//! config.toml            pipeline config pointing at the above
//! ```

use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assets;
use crate::attributes::{normalize_psi, AttributeVector};
use crate::augment::sample_rng;
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_jsonl};
use crate::par;
use crate::render::{render, RenderConfig};

use super::config::{AssetEntry, PipelineConfig};

pub const LABELS_FILE: &str = "labels.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    /// Azimuth concentrated around one direction.
    Unimodal,
    /// Half the targets face one way, half the opposite way.
    #[default]
    Bimodal,
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unimodal" => Ok(Modality::Unimodal),
            "bimodal" => Ok(Modality::Bimodal),
            other => Err(format!(
                "unknown modality `{other}` (expected unimodal or bimodal)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub modality: Modality,
    pub targets_per_asset: usize,
    pub seed: u64,
    pub render: RenderConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            modality: Modality::Bimodal,
            targets_per_asset: 20,
            seed: 0,
            render: RenderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetLabel {
    pub file: String,
    pub asset_id: String,
    pub psi: AttributeVector,
}

/// (mean, standard deviation) per attribute, azimuth excluded.
const HIDDEN_BIAS: [(f64, f64); 5] = [
    (0.0, 8.0),
    (35.0, 8.0),
    (65.0, 8.0),
    (45.0, 20.0),
    (75.0, 8.0),
];
const AZIMUTH_SD: f64 = 15.0;

fn draw_psi(modality: Modality, index: usize, rng: &mut impl Rng) -> Result<AttributeVector> {
    let azimuth_mean = match modality {
        Modality::Unimodal => 60.0,
        Modality::Bimodal if index % 2 == 0 => 0.0,
        Modality::Bimodal => 180.0,
    };
    let mut raw = [0.0; 6];
    let params = std::iter::once((azimuth_mean, AZIMUTH_SD)).chain(HIDDEN_BIAS);
    for (v, (mean, sd)) in raw.iter_mut().zip(params) {
        *v = Normal::new(mean, sd)
            .map_err(|e| Error::Invariant(format!("scenario distribution: {e}")))?
            .sample(rng);
    }
    Ok(normalize_psi(raw))
}

/// Write the scenario into `dir` and return its pipeline config (paths
/// anchored at `dir`, as if loaded from `dir/config.toml`).
pub fn synth_targets(dir: &Path, scenario: &ScenarioConfig) -> Result<PipelineConfig> {
    if scenario.targets_per_asset == 0 {
        return Err(Error::Config("targets_per_asset must be at least 1".into()));
    }
    scenario.render.validate()?;
    let catalogue = assets::catalogue();
    let mut entries = Vec::new();
    for (id, mesh) in &catalogue {
        let rel = format!("assets/{id}.obj");
        write_atomic(&dir.join(&rel), mesh.to_obj_string().as_bytes())?;
        entries.push(AssetEntry {
            id: id.clone(),
            mesh: rel.into(),
        });
    }

    // targets interleave classes so no file name reveals its label
    let total = scenario.targets_per_asset * catalogue.len();
    let labels = par::try_map_range(total, |i| {
        let class = i % catalogue.len();
        let mut rng = sample_rng(scenario.seed, i as u64);
        let psi = draw_psi(scenario.modality, i / catalogue.len(), &mut rng)?;
        let (img, _) = render(&catalogue[class].1, &psi, &scenario.render)?;
        let file = format!("target_{i:04}.png");
        img.write_png(dir.join("targets").join(&file))?;
        Ok::<_, Error>(TargetLabel {
            file,
            asset_id: catalogue[class].0.clone(),
            psi,
        })
    })?;
    write_jsonl(&dir.join("targets").join(LABELS_FILE), &labels)?;

    let mut cfg = PipelineConfig::new("targets".into(), entries, "out".into());
    cfg.render = scenario.render.clone();
    cfg.seed = scenario.seed;
    let path = dir.join("config.toml");
    write_atomic(&path, cfg.to_toml()?.as_bytes())?;
    PipelineConfig::load(&path)
}
