//! Domain-gap score of a generated set against the target images.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::metrics::{extract_features, frechet_distance, FeatureVector};
use crate::par;
use crate::render::RasterImage;

use super::manifest::{DatasetManifest, Origin};
use super::scenario::{TargetLabel, LABELS_FILE};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub generated: usize,
    pub targets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Fréchet feature distance, generated set vs all targets.
    pub ffd: f64,
    /// Per class where both sides hold at least two images. Target classes
    /// come from the targets directory's label file when it has one.
    pub per_class_ffd: BTreeMap<String, f64>,
    pub generated: usize,
    pub targets: usize,
    pub per_class: BTreeMap<String, ClassCounts>,
    pub per_origin: BTreeMap<Origin, usize>,
}

fn png_files(dir: &Path) -> Result<Vec<String>> {
    let mut files: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png") && !n.starts_with('.'))
        .collect();
    files.sort();
    Ok(files)
}

fn features_of(paths: &[std::path::PathBuf]) -> Result<Vec<FeatureVector>> {
    par::try_map(paths, |p| extract_features(&RasterImage::read_png(p)?))
}

pub fn evaluate(manifest: &DatasetManifest, targets_dir: &Path) -> Result<EvaluationReport> {
    let generated_paths: Vec<_> = manifest
        .records
        .iter()
        .map(|r| manifest.image_path(r))
        .collect();
    let generated = features_of(&generated_paths)?;
    let files = png_files(targets_dir)?;
    let target_paths: Vec<_> = files.iter().map(|f| targets_dir.join(f)).collect();
    let targets = features_of(&target_paths)?;
    if generated.len() < 2 || targets.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "evaluation needs at least 2 images per side, got {} generated and {} targets",
            generated.len(),
            targets.len()
        )));
    }
    let ffd = frechet_distance(&generated, &targets)?;

    let labels_path = targets_dir.join(LABELS_FILE);
    let labels: BTreeMap<String, String> = if labels_path.is_file() {
        read_jsonl::<TargetLabel>(&labels_path)?
            .into_iter()
            .map(|l| (l.file, l.asset_id))
            .collect()
    } else {
        BTreeMap::new()
    };

    let mut per_class: BTreeMap<String, ClassCounts> = BTreeMap::new();
    let mut per_origin = BTreeMap::new();
    for r in &manifest.records {
        per_class.entry(r.asset_id.clone()).or_default().generated += 1;
        *per_origin.entry(r.origin).or_insert(0) += 1;
    }
    for f in &files {
        if let Some(id) = labels.get(f) {
            per_class.entry(id.clone()).or_default().targets += 1;
        }
    }

    let mut per_class_ffd = BTreeMap::new();
    for (id, counts) in &per_class {
        if counts.generated < 2 || counts.targets < 2 {
            continue;
        }
        let gen: Vec<FeatureVector> = manifest
            .records
            .iter()
            .zip(&generated)
            .filter(|(r, _)| &r.asset_id == id)
            .map(|(_, f)| f.clone())
            .collect();
        let tgt: Vec<FeatureVector> = files
            .iter()
            .zip(&targets)
            .filter(|(f, _)| labels.get(*f) == Some(id))
            .map(|(_, f)| f.clone())
            .collect();
        per_class_ffd.insert(id.clone(), frechet_distance(&gen, &tgt)?);
    }

    Ok(EvaluationReport {
        ffd,
        per_class_ffd,
        generated: generated.len(),
        targets: targets.len(),
        per_class,
        per_origin,
    })
}
