//! The full synthesis run: assign, select, fit, augment, render.

use serde::{Deserialize, Serialize};

use crate::attributes::AttributeVector;
use crate::augment::sample_augmented;
use crate::coreset::{select_coreset, SeedRule};
use crate::error::{Error, Result, StageContext};
use crate::io::{write_json_pretty, write_jsonl};
use crate::mesh::Mesh;
use crate::metrics::{extract_features, FeatureVector};
use crate::par;
use crate::twin::{fit_twin, FitOptions, FitResult};

use super::config::{derive_seed, AssignmentRule, PipelineConfig, SCHEMA_VERSION};
use super::manifest::{render_jobs, DatasetManifest, Origin, RenderJob};
use super::{assign_asset_by_fit, load_assets, load_targets, CanonicalViews, RunPaths, Target};

/// One target with its features and pseudo label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub index: usize,
    pub file: String,
    pub asset_id: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCoreset {
    pub asset_id: String,
    /// Target indices assigned to this class, ascending.
    pub members: Vec<usize>,
    /// Selected target indices in selection order.
    pub selected: Vec<usize>,
    pub cover_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinRecord {
    pub twin: usize,
    pub asset_id: String,
    pub target_index: usize,
    pub target_file: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub draw_index: usize,
    pub source_twin: usize,
    pub asset_id: String,
    pub psi: AttributeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub asset_id: String,
    pub targets: usize,
    pub coreset_size: usize,
    pub cover_radius: Option<f64>,
    pub selected_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSummary {
    pub twin: usize,
    pub asset_id: String,
    pub target_file: String,
    pub psi: AttributeVector,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Written as `report.json`; holds no timings so reruns compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub classes: Vec<ClassSummary>,
    pub twins: Vec<TwinSummary>,
    pub augmented: usize,
    pub images: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub manifest: DatasetManifest,
    pub report: RunReport,
}

fn asset_index(assets: &[(String, Mesh)], id: &str) -> Result<usize> {
    assets
        .iter()
        .position(|(a, _)| a == id)
        .ok_or_else(|| Error::InvalidInput(format!("unknown asset id `{id}`")))
}

/// Features and pseudo labels for every target.
pub fn stage_assign(
    cfg: &PipelineConfig,
    targets: &[Target],
    assets: &[(String, Mesh)],
) -> Result<Vec<TargetRecord>> {
    let views = CanonicalViews::new(
        assets.iter().map(|(_, m)| m),
        &cfg.render,
        &cfg.search.canonical(),
    )?;
    let meshes: Vec<Mesh> = assets.iter().map(|(_, m)| m.clone()).collect();
    let options = FitOptions {
        max_epochs: cfg.assign.max_epochs,
        ..cfg.fit_options()
    };
    par::try_map_range(targets.len(), |i| {
        let features = extract_features(&targets[i].image)?;
        let asset = match cfg.assign.rule {
            AssignmentRule::Canonical => views.assign(&features),
            AssignmentRule::Fit => assign_asset_by_fit(
                &targets[i].image,
                &meshes,
                &cfg.render,
                &cfg.search,
                &options,
            )?,
        };
        Ok(TargetRecord {
            index: i,
            file: targets[i].file.clone(),
            asset_id: assets[asset].0.clone(),
            features,
        })
    })
}

/// Farthest-point coreset per class, in asset order. Classes with fewer
/// targets than requested keep all of them and produce a warning.
pub fn stage_select(
    cfg: &PipelineConfig,
    records: &[TargetRecord],
    assets: &[(String, Mesh)],
) -> Result<(Vec<ClassCoreset>, Vec<String>)> {
    let mut classes = Vec::new();
    let mut warnings = Vec::new();
    for (id, _) in assets {
        let members: Vec<usize> = records
            .iter()
            .filter(|r| &r.asset_id == id)
            .map(|r| r.index)
            .collect();
        if members.is_empty() {
            warnings.push(format!("class `{id}` received no targets"));
            continue;
        }
        let count = cfg.coreset_per_class.min(members.len());
        if count < cfg.coreset_per_class {
            warnings.push(format!(
                "class `{id}` has {} targets, fewer than coreset_per_class = {}; using all",
                members.len(),
                cfg.coreset_per_class
            ));
        }
        let features: Vec<FeatureVector> = members
            .iter()
            .map(|&i| records[i].features.clone())
            .collect();
        let sel = select_coreset(&features, count, SeedRule::NearestToMean)?;
        classes.push(ClassCoreset {
            asset_id: id.clone(),
            selected: sel.selected_indices.iter().map(|&k| members[k]).collect(),
            members,
            cover_radius: sel.cover_radius,
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((classes, warnings))
}

/// Fit a twin to every selected target; twins are numbered class by class
/// in selection order.
pub fn stage_fit(
    cfg: &PipelineConfig,
    targets: &[Target],
    coresets: &[ClassCoreset],
    assets: &[(String, Mesh)],
) -> Result<Vec<TwinRecord>> {
    let mut work = Vec::new();
    for class in coresets {
        let asset = asset_index(assets, &class.asset_id)?;
        for &t in &class.selected {
            if t >= targets.len() {
                return Err(Error::InvalidInput(format!(
                    "coreset names target {t} but only {} targets exist",
                    targets.len()
                )));
            }
            work.push((asset, t));
        }
    }
    let init = cfg.search.canonical();
    let options = cfg.fit_options();
    par::try_map_range(work.len(), |twin| {
        let (asset, t) = work[twin];
        let fit = fit_twin(
            &targets[t].image,
            &assets[asset].1,
            &cfg.search,
            &cfg.render,
            &options,
            &init,
        )?;
        log::debug!(
            "twin {twin} ({}): loss {:.4}",
            targets[t].file,
            fit.final_loss
        );
        Ok(TwinRecord {
            twin,
            asset_id: assets[asset].0.clone(),
            target_index: t,
            target_file: targets[t].file.clone(),
            fit,
        })
    })
}

/// `augment.n` samples around uniformly chosen twins.
pub fn stage_augment(cfg: &PipelineConfig, twins: &[TwinRecord]) -> Result<Vec<SampleRecord>> {
    let centers: Vec<AttributeVector> = twins.iter().map(|t| t.fit.psi_star).collect();
    let aug = cfg.augment_config(derive_seed(cfg.seed, "augment"));
    Ok(sample_augmented(&centers, &aug)?
        .into_iter()
        .map(|s| SampleRecord {
            draw_index: s.draw_index,
            source_twin: s.source_twin,
            asset_id: twins[s.source_twin].asset_id.clone(),
            psi: s.psi,
        })
        .collect())
}

/// Render twins then samples into `root` and return the manifest.
pub fn stage_render(
    cfg: &PipelineConfig,
    assets: &[(String, Mesh)],
    twins: &[TwinRecord],
    samples: &[SampleRecord],
    root: &std::path::Path,
) -> Result<DatasetManifest> {
    let mut jobs = Vec::with_capacity(twins.len() + samples.len());
    for t in twins {
        jobs.push(RenderJob {
            asset: asset_index(assets, &t.asset_id)?,
            psi: t.fit.psi_star,
            origin: Origin::Twin,
            source_twin: Some(t.twin),
        });
    }
    for s in samples {
        jobs.push(RenderJob {
            asset: asset_index(assets, &s.asset_id)?,
            psi: s.psi,
            origin: Origin::Augmented,
            source_twin: Some(s.source_twin),
        });
    }
    render_jobs(assets, &jobs, &cfg.render, root)
}

/// Class weights shared by the baselines: one slot per selected twin.
pub fn class_slots(coresets: &[ClassCoreset]) -> Vec<String> {
    coresets
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.asset_id.clone(), c.selected.len()))
        .collect()
}

/// Run every stage and write the dataset, intermediates and report into
/// `cfg.output_dir`.
pub fn build_dataset(cfg: &PipelineConfig) -> Result<BuildOutput> {
    cfg.validate_paths()?;
    let paths = RunPaths::new(&cfg.output_dir);
    let assets = load_assets(cfg).stage("load assets")?;
    let targets = load_targets(&cfg.targets_dir, &cfg.render).stage("load targets")?;

    let records = stage_assign(cfg, &targets, &assets).stage("assign")?;
    write_jsonl(&paths.targets(), &records)?;

    let (coresets, warnings) = stage_select(cfg, &records, &assets).stage("select")?;
    write_jsonl(&paths.coreset(), &coresets)?;

    let twins = stage_fit(cfg, &targets, &coresets, &assets).stage("fit")?;
    write_jsonl(&paths.twins(), &twins)?;

    let samples = stage_augment(cfg, &twins).stage("augment")?;
    write_jsonl(&paths.samples(), &samples)?;

    let manifest = stage_render(cfg, &assets, &twins, &samples, &paths.root).stage("render")?;
    manifest.write()?;

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        classes: assets
            .iter()
            .map(|(id, _)| {
                let class = coresets.iter().find(|c| &c.asset_id == id);
                ClassSummary {
                    asset_id: id.clone(),
                    targets: class.map_or(0, |c| c.members.len()),
                    coreset_size: class.map_or(0, |c| c.selected.len()),
                    cover_radius: class.map(|c| c.cover_radius),
                    selected_files: class.map_or_else(Vec::new, |c| {
                        c.selected
                            .iter()
                            .map(|&i| targets[i].file.clone())
                            .collect()
                    }),
                }
            })
            .collect(),
        twins: twins
            .iter()
            .map(|t| TwinSummary {
                twin: t.twin,
                asset_id: t.asset_id.clone(),
                target_file: t.target_file.clone(),
                psi: t.fit.psi_star,
                initial_loss: t.fit.initial_loss,
                final_loss: t.fit.final_loss,
                epochs_run: t.fit.epochs_run,
            })
            .collect(),
        augmented: samples.len(),
        images: manifest.records.len(),
        warnings,
    };
    write_json_pretty(&paths.report(), &report)?;
    Ok(BuildOutput { manifest, report })
}
