//! End-to-end dataset synthesis: assign, select, fit, augment, render,
//! evaluate, plus the two comparison baselines and a synthetic scenario
//! generator that stands in for a real target domain.
//!
//! Every stage persists its output as line-delimited JSON under the run's
//! output directory, so stages can be inspected or rerun one at a time.

mod baselines;
mod build;
mod config;
mod evaluate;
mod manifest;
mod scenario;

use std::path::{Path, PathBuf};

pub use baselines::{dist_baseline, random_attributes, random_baseline, DistTraceEntry};
pub use build::{
    build_dataset, class_slots, stage_assign, stage_augment, stage_fit, stage_render, stage_select,
    BuildOutput, ClassCoreset, ClassSummary, RunReport, SampleRecord, TargetRecord, TwinRecord,
    TwinSummary,
};
pub use config::{
    derive_seed, AssetEntry, AssignSection, AssignmentRule, AugmentSection, DistBaselineSection,
    PipelineConfig, SCHEMA_VERSION,
};
pub use evaluate::{evaluate, ClassCounts, EvaluationReport};
pub use manifest::{
    render_jobs, DatasetManifest, ManifestRecord, Origin, RenderJob, MANIFEST_FILE,
};
pub use scenario::{synth_targets, Modality, ScenarioConfig, TargetLabel, LABELS_FILE};

use crate::attributes::AttributeVector;
use crate::error::{Error, Result};
use crate::mesh::{load_mesh, Mesh};
use crate::metrics::{extract_features, FeatureVector};
use crate::par;
use crate::render::{render, RasterImage, RenderConfig};
use crate::twin::{fit_twin, FitOptions, SearchSpace};

/// File layout of one run's output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }

    pub fn targets(&self) -> PathBuf {
        self.root.join("targets.jsonl")
    }

    pub fn coreset(&self) -> PathBuf {
        self.root.join("coreset.jsonl")
    }

    pub fn twins(&self) -> PathBuf {
        self.root.join("twins.jsonl")
    }

    pub fn samples(&self) -> PathBuf {
        self.root.join("samples.jsonl")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn random_baseline(&self) -> PathBuf {
        self.root.join("random-baseline")
    }

    pub fn dist_baseline(&self) -> PathBuf {
        self.root.join("dist-baseline")
    }
}

/// A target image and its file name inside the targets directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub file: String,
    pub image: RasterImage,
}

/// Every `*.png` in `dir`, sorted by file name; sizes must match `cfg`.
pub fn load_targets(dir: &Path, cfg: &RenderConfig) -> Result<Vec<Target>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") && !name.starts_with('.') {
            files.push(name);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no PNG targets in {}",
            dir.display()
        )));
    }
    par::try_map(&files, |name| {
        let path = dir.join(name);
        let image = RasterImage::read_png(&path)?;
        if image.width() != cfg.image_width || image.height() != cfg.image_height {
            return Err(Error::Image {
                path,
                message: format!(
                    "is {}x{} but the render config expects {}x{}",
                    image.width(),
                    image.height(),
                    cfg.image_width,
                    cfg.image_height
                ),
            });
        }
        Ok(Target {
            file: name.clone(),
            image,
        })
    })
}

/// Load the configured meshes in config order.
pub fn load_assets(cfg: &PipelineConfig) -> Result<Vec<(String, Mesh)>> {
    cfg.assets
        .iter()
        .map(|a| Ok((a.id.clone(), load_mesh(&a.mesh)?)))
        .collect()
}

/// Features of every asset rendered at one canonical attribute vector.
#[derive(Debug, Clone)]
pub struct CanonicalViews {
    features: Vec<FeatureVector>,
}

impl CanonicalViews {
    pub fn new<'a>(
        meshes: impl IntoIterator<Item = &'a Mesh>,
        cfg: &RenderConfig,
        canonical: &AttributeVector,
    ) -> Result<Self> {
        let features = meshes
            .into_iter()
            .map(|m| extract_features(&render(m, canonical, cfg)?.0))
            .collect::<Result<Vec<_>>>()?;
        if features.is_empty() {
            return Err(Error::InvalidInput("no assets to assign".into()));
        }
        Ok(CanonicalViews { features })
    }

    /// Index of the nearest canonical view; ties go to the lowest index.
    pub fn assign(&self, target: &FeatureVector) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, f) in self.features.iter().enumerate() {
            let d = f.distance(target);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Pseudo label: the asset whose canonical rendering has the nearest
/// features to `target`. Returns an index into `assets`.
pub fn assign_asset(target: &RasterImage, assets: &[Mesh], cfg: &RenderConfig) -> Result<usize> {
    let views = CanonicalViews::new(assets, cfg, &SearchSpace::default().canonical())?;
    Ok(views.assign(&extract_features(target)?))
}

/// Pseudo label by synthesis: fit every asset from the canonical view and
/// keep the lowest final loss. Ties go to the lowest index.
pub fn assign_asset_by_fit(
    target: &RasterImage,
    assets: &[Mesh],
    cfg: &RenderConfig,
    space: &SearchSpace,
    options: &FitOptions,
) -> Result<usize> {
    if assets.is_empty() {
        return Err(Error::InvalidInput("no assets to assign".into()));
    }
    let init = space.canonical();
    let mut best = (0, f64::INFINITY);
    for (i, mesh) in assets.iter().enumerate() {
        let loss = fit_twin(target, mesh, space, cfg, options, &init)?.final_loss;
        if loss < best.1 {
            best = (i, loss);
        }
    }
    Ok(best.0)
}
