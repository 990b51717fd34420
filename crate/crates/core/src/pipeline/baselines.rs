//! Comparison baselines: uniformly random attributes, and a single shared
//! attribute vector per class fitted at the distribution level.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attributes::{normalize_psi, Attribute, AttributeVector, ATTRIBUTE_COUNT};
use crate::augment::{sample_augmented, sample_rng};
use crate::error::{Error, Result, StageContext};
use crate::io::{write_json_pretty, write_jsonl};
use crate::mesh::Mesh;
use crate::metrics::{extract_features, frechet_distance, FeatureVector};
use crate::par;
use crate::render::{render, RenderConfig};
use crate::twin::SearchSpace;

use super::build::{class_slots, stage_assign, stage_select, ClassCoreset, TargetRecord};
use super::config::{derive_seed, DistBaselineSection, PipelineConfig};
use super::manifest::{render_jobs, DatasetManifest, Origin, RenderJob};
use super::{load_assets, load_targets, RunPaths};

/// `n` vectors with every attribute uniform over its continuous range.
pub fn random_attributes(n: usize, seed: u64) -> Result<Vec<AttributeVector>> {
    if n == 0 {
        return Err(Error::InvalidInput("random baseline needs n >= 1".into()));
    }
    Ok(par::map_range(n, |j| {
        let mut rng = sample_rng(seed, j as u64);
        let raw = Attribute::ALL.map(|a| {
            let (lo, hi) = a.range();
            if a.is_angular() {
                rng.random_range(lo..hi)
            } else {
                rng.random_range(lo..=hi)
            }
        });
        normalize_psi(raw)
    }))
}

fn class_assets(
    cfg: &PipelineConfig,
) -> Result<(Vec<(String, Mesh)>, Vec<TargetRecord>, Vec<ClassCoreset>)> {
    cfg.validate_paths()?;
    let assets = load_assets(cfg).stage("load assets")?;
    let targets = load_targets(&cfg.targets_dir, &cfg.render).stage("load targets")?;
    let records = stage_assign(cfg, &targets, &assets).stage("assign")?;
    let (coresets, _) = stage_select(cfg, &records, &assets).stage("select")?;
    Ok((assets, records, coresets))
}

fn index_of(assets: &[(String, Mesh)], id: &str) -> usize {
    assets.iter().position(|(a, _)| a == id).unwrap_or(0)
}

/// `augment.n` uniformly random attribute vectors. Classes are drawn with
/// the same weights the full pipeline gives them (one per twin slot).
pub fn random_baseline(cfg: &PipelineConfig) -> Result<DatasetManifest> {
    let (assets, _, coresets) = class_assets(cfg)?;
    let slots = class_slots(&coresets);
    let seed = derive_seed(cfg.seed, "random-baseline");
    let psis = random_attributes(cfg.augment.n, seed).stage("sample")?;
    let class_seed = derive_seed(cfg.seed, "random-baseline-class");
    let jobs: Vec<RenderJob> = psis
        .iter()
        .enumerate()
        .map(|(j, psi)| {
            let slot = sample_rng(class_seed, j as u64).random_range(0..slots.len());
            RenderJob {
                asset: index_of(&assets, &slots[slot]),
                psi: *psi,
                origin: Origin::RandomBaseline,
                source_twin: None,
            }
        })
        .collect();
    let root = RunPaths::new(&cfg.output_dir).random_baseline();
    let manifest = render_jobs(&assets, &jobs, &cfg.render, &root).stage("render")?;
    manifest.write()?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistTraceEntry {
    pub asset_id: String,
    pub epoch: usize,
    pub attribute: Attribute,
    pub value: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DistClassResult {
    asset_id: String,
    psi: AttributeVector,
    initial_objective: f64,
    final_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DistReport {
    method: String,
    note: String,
    classes: Vec<DistClassResult>,
    images: usize,
}

/// Fixed jitter offsets shared by every candidate (common random numbers).
fn jitter_offsets(
    space: &SearchSpace,
    section: &DistBaselineSection,
    seed: u64,
) -> Result<Vec<[f64; ATTRIBUTE_COUNT]>> {
    let sigmas =
        Attribute::ALL.map(|a| section.jitter_step_fraction * space.grid(a).step().unwrap_or(0.0));
    (0..section.jitter_draws)
        .map(|m| {
            let mut rng = sample_rng(seed, m as u64);
            let mut out = [0.0; ATTRIBUTE_COUNT];
            for (o, &s) in out.iter_mut().zip(&sigmas) {
                if s > 0.0 {
                    let normal = Normal::new(0.0, s)
                        .map_err(|e| Error::InvalidInput(format!("jitter sigma {s}: {e}")))?;
                    *o = normal.sample(&mut rng);
                }
            }
            Ok(out)
        })
        .collect()
}

/// Distance between the jittered renderings of `psi` and the target group.
fn group_objective(
    mesh: &Mesh,
    psi: &AttributeVector,
    offsets: &[[f64; ATTRIBUTE_COUNT]],
    targets: &[FeatureVector],
    cfg: &RenderConfig,
) -> Result<f64> {
    let rendered = offsets
        .iter()
        .map(|o| {
            let mut raw = psi.components();
            raw.iter_mut().zip(o).for_each(|(v, d)| *v += d);
            extract_features(&render(mesh, &normalize_psi(raw), cfg)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    if targets.len() >= 2 {
        return frechet_distance(&rendered, targets);
    }
    // a single target has no covariance; fall back to the mean term
    let dim = rendered[0].dim();
    let mean: Vec<f64> = (0..dim)
        .map(|k| rendered.iter().map(|f| f.0[k]).sum::<f64>() / rendered.len() as f64)
        .collect();
    Ok(FeatureVector(mean).distance(&targets[0]).powi(2))
}

/// Coordinate descent over the search grids on the group objective.
/// The incumbent is always rescored, so the trace never rises.
pub(crate) fn fit_shared_vector(
    mesh: &Mesh,
    asset_id: &str,
    targets: &[FeatureVector],
    cfg: &RenderConfig,
    space: &SearchSpace,
    section: &DistBaselineSection,
    seed: u64,
) -> Result<(AttributeVector, f64, f64, Vec<DistTraceEntry>)> {
    if targets.is_empty() {
        return Err(Error::InvalidInput(format!(
            "class `{asset_id}` has no targets"
        )));
    }
    let offsets = jitter_offsets(space, section, seed)?;
    let mut psi = space.canonical();
    let initial = group_objective(mesh, &psi, &offsets, targets, cfg)?;
    let mut current = initial;
    let mut trace = Vec::new();
    for epoch in 1..=section.max_epochs {
        let mut changed = false;
        for &attribute in &space.sweep_order {
            let grid = &space.grid(attribute).values;
            let scores = par::try_map(grid, |&v| {
                group_objective(mesh, &psi.with(attribute, v), &offsets, targets, cfg)
            })?;
            let incumbent = psi.get(attribute);
            let (mut best_v, mut best) = (incumbent, current);
            for (&v, &s) in grid.iter().zip(&scores) {
                if s < best || (s == best && v < best_v) {
                    best_v = v;
                    best = s;
                }
            }
            if best_v != incumbent {
                changed = true;
                psi.set(attribute, best_v);
            }
            current = best;
            trace.push(DistTraceEntry {
                asset_id: asset_id.to_string(),
                epoch,
                attribute,
                value: best_v,
                objective: best,
            });
        }
        if !changed {
            break;
        }
    }
    Ok((psi, initial, current, trace))
}

/// One shared attribute vector per class, fitted to the whole class by the
/// Fréchet feature distance, then `augment.n` samples drawn around it with
/// the same Gaussian rule as the full pipeline. Writes into the run's
/// `dist-baseline` directory.
pub fn dist_baseline(cfg: &PipelineConfig) -> Result<DatasetManifest> {
    let (assets, records, coresets) = class_assets(cfg)?;
    let jitter_seed = derive_seed(cfg.seed, "dist-baseline-jitter");
    let mut optima = Vec::new();
    let mut trace = Vec::new();
    let mut results = Vec::new();
    for class in &coresets {
        let asset = index_of(&assets, &class.asset_id);
        let feats: Vec<FeatureVector> = class
            .members
            .iter()
            .map(|&i| records[i].features.clone())
            .collect();
        let (psi, initial, fin, t) = fit_shared_vector(
            &assets[asset].1,
            &class.asset_id,
            &feats,
            &cfg.render,
            &cfg.search,
            &cfg.dist_baseline,
            jitter_seed,
        )
        .stage("fit shared vector")?;
        optima.push((asset, psi));
        trace.extend(t);
        results.push(DistClassResult {
            asset_id: class.asset_id.clone(),
            psi,
            initial_objective: initial,
            final_objective: fin,
        });
    }

    // one center per twin slot so classes keep the pipeline's weights
    let mut centers = Vec::new();
    let mut center_asset = Vec::new();
    for (class, &(asset, psi)) in coresets.iter().zip(&optima) {
        for _ in 0..class.selected.len() {
            centers.push(psi);
            center_asset.push(asset);
        }
    }
    let samples = sample_augmented(
        &centers,
        &cfg.augment_config(derive_seed(cfg.seed, "dist-baseline")),
    )
    .stage("sample")?;
    let jobs: Vec<RenderJob> = samples
        .iter()
        .map(|s| RenderJob {
            asset: center_asset[s.source_twin],
            psi: s.psi,
            origin: Origin::DistBaseline,
            source_twin: None,
        })
        .collect();

    let root = RunPaths::new(&cfg.output_dir).dist_baseline();
    let manifest = render_jobs(&assets, &jobs, &cfg.render, &root).stage("render")?;
    manifest.write()?;
    write_jsonl(&root.join("trace.jsonl"), &trace)?;
    write_json_pretty(
        &root.join("report.json"),
        &DistReport {
            method: "dist-baseline".into(),
            note: "single shared attribute vector per class; a simplified stand-in for distribution-level attribute search".into(),
            classes: results,
            images: manifest.records.len(),
        },
    )?;
    Ok(manifest)
}
