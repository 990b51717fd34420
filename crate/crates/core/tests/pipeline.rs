use std::path::Path;

use twinsynth::assets;
use twinsynth::attributes::{Attribute, AttributeVector};
use twinsynth::io::read_jsonl;
use twinsynth::mesh::Mesh;
use twinsynth::par;
use twinsynth::pipeline::*;
use twinsynth::render::{bbox_from_mask, render, RasterImage, RenderConfig};

fn small_render() -> RenderConfig {
    RenderConfig {
        image_width: 32,
        image_height: 32,
        ..RenderConfig::default()
    }
}

/// Write `meshes` and one target per `(asset, psi)` into `dir`; returns a
/// config with output under `dir/out`.
fn scene(
    dir: &Path,
    meshes: &[(&str, Mesh)],
    targets: &[(usize, AttributeVector)],
    render_cfg: &RenderConfig,
) -> PipelineConfig {
    let mut entries = Vec::new();
    for (id, mesh) in meshes {
        let path = dir.join(format!("{id}.obj"));
        std::fs::write(&path, mesh.to_obj_string()).unwrap();
        entries.push(AssetEntry {
            id: id.to_string(),
            mesh: path,
        });
    }
    let targets_dir = dir.join("targets");
    std::fs::create_dir_all(&targets_dir).unwrap();
    let loaded: Vec<Mesh> = entries
        .iter()
        .map(|e| twinsynth::mesh::load_mesh(&e.mesh).unwrap())
        .collect();
    for (i, (asset, psi)) in targets.iter().enumerate() {
        let (img, _) = render(&loaded[*asset], psi, render_cfg).unwrap();
        img.write_png(targets_dir.join(format!("t{i:03}.png")))
            .unwrap();
    }
    let mut cfg = PipelineConfig::new(targets_dir, entries, dir.join("out"));
    cfg.render = render_cfg.clone();
    cfg
}

fn psi(v: [f64; 6]) -> AttributeVector {
    AttributeVector::new(v)
}

#[test]
fn self_rendered_target_yields_its_own_twin() {
    let dir = tempfile::tempdir().unwrap();
    let truth = psi([60.0, 0.0, 40.0, 60.0, 30.0, 70.0]);
    let mut cfg = scene(
        dir.path(),
        &[("spindle", assets::spindle())],
        &[(0, truth)],
        &RenderConfig::default(),
    );
    cfg.coreset_per_class = 1;
    cfg.augment.n = 1;
    let out = build_dataset(&cfg).unwrap();

    let twins: Vec<_> = out
        .manifest
        .records
        .iter()
        .filter(|r| r.origin == Origin::Twin)
        .collect();
    assert_eq!(twins.len(), 1);
    assert_eq!(twins[0].psi, truth);
    assert_eq!(out.report.twins.len(), 1);
    assert_eq!(out.report.twins[0].psi, truth);
    assert_eq!(out.report.twins[0].final_loss, 0.0);
    assert_eq!(out.manifest.records.len(), 2);
}

#[test]
fn degenerate_deviation_copies_the_twins() {
    let dir = tempfile::tempdir().unwrap();
    let targets = [
        (0, psi([0.0, 0.0, 40.0, 50.0, 0.0, 60.0])),
        (0, psi([90.0, 0.0, 60.0, 50.0, 30.0, 80.0])),
        (0, psi([210.0, 30.0, 50.0, 40.0, 60.0, 70.0])),
    ];
    let mut cfg = scene(
        dir.path(),
        &[("spindle", assets::spindle())],
        &targets,
        &small_render(),
    );
    cfg.coreset_per_class = 3;
    cfg.augment.n = 3;
    cfg.augment.deviation_fraction = 1e-14;
    let out = build_dataset(&cfg).unwrap();

    let twin_psis: Vec<AttributeVector> = out.report.twins.iter().map(|t| t.psi).collect();
    let augmented: Vec<_> = out
        .manifest
        .records
        .iter()
        .filter(|r| r.origin == Origin::Augmented)
        .collect();
    assert_eq!(augmented.len(), 3);
    for r in augmented {
        let source = twin_psis[r.source_twin.unwrap()];
        for a in Attribute::ALL {
            let mut d = (r.psi.get(a) - source.get(a)).abs();
            if a.is_angular() {
                d = d.min(360.0 - d);
            }
            assert!(d < 1e-9, "{a}: {} vs {}", r.psi.get(a), source.get(a));
        }
    }
}

#[test]
fn reruns_and_worker_counts_give_identical_trees() {
    let dir = tempfile::tempdir().unwrap();
    let targets: Vec<(usize, AttributeVector)> = (0..6)
        .map(|i| (i % 2, psi([30.0 * i as f64, 0.0, 40.0, 50.0, 30.0, 70.0])))
        .collect();
    let mut cfg = scene(
        dir.path(),
        &[
            ("spindle", assets::spindle()),
            ("box", assets::product_box()),
        ],
        &targets,
        &small_render(),
    );
    cfg.coreset_per_class = 2;
    cfg.augment.n = 12;
    cfg.max_epochs = 1;

    let run = |name: &str, workers: Option<usize>| {
        let mut c = cfg.clone();
        c.output_dir = dir.path().join(name);
        par::with_workers(workers, || build_dataset(&c)).unwrap();
        c.output_dir
    };
    let a = run("a", None);
    let b = run("b", None);
    let c = run("c", Some(1));
    let manifest = std::fs::read(a.join(MANIFEST_FILE)).unwrap();
    let records: Vec<ManifestRecord> = read_jsonl(&a.join(MANIFEST_FILE)).unwrap();
    for other in [&b, &c] {
        assert_eq!(std::fs::read(other.join(MANIFEST_FILE)).unwrap(), manifest);
        assert_eq!(
            std::fs::read(other.join("report.json")).unwrap(),
            std::fs::read(a.join("report.json")).unwrap()
        );
        for r in &records {
            assert_eq!(
                std::fs::read(other.join(&r.image_path)).unwrap(),
                std::fs::read(a.join(&r.image_path)).unwrap()
            );
        }
    }
}

#[test]
fn manifest_labels_match_the_rendered_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let targets: Vec<(usize, AttributeVector)> = (0..6)
        .map(|i| (i % 3, psi([60.0 * i as f64, 0.0, 40.0, 60.0, 30.0, 70.0])))
        .collect();
    let catalogue = assets::catalogue();
    let meshes: Vec<(&str, Mesh)> = catalogue
        .iter()
        .map(|(id, m)| (id.as_str(), m.clone()))
        .collect();
    let mut cfg = scene(dir.path(), &meshes, &targets, &small_render());
    cfg.coreset_per_class = 2;
    cfg.augment.n = 9;
    let out = build_dataset(&cfg).unwrap();
    let loaded = load_assets(&cfg).unwrap();

    for r in out.manifest.records.iter().step_by(2) {
        let stored = RasterImage::read_png(out.manifest.image_path(r)).unwrap();
        for (id, mesh) in &loaded {
            let (img, mask) = render(mesh, &r.psi, &cfg.render).unwrap();
            if *id == r.asset_id {
                assert_eq!(img, stored, "{}", r.image_path);
                assert_eq!(bbox_from_mask(&mask), r.bbox);
            } else {
                assert_ne!(img, stored, "{} also matches {id}", r.image_path);
            }
        }
    }
}

#[test]
fn coreset_orders_are_prefix_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let targets: Vec<(usize, AttributeVector)> = (0..10)
        .map(|i| {
            (
                0,
                psi([
                    36.0 * i as f64,
                    0.0,
                    10.0 * (i % 5) as f64,
                    50.0,
                    30.0 * i as f64,
                    70.0,
                ]),
            )
        })
        .collect();
    let mut cfg = scene(
        dir.path(),
        &[("spindle", assets::spindle())],
        &targets,
        &small_render(),
    );
    cfg.assign.rule = AssignmentRule::Canonical;
    let assets = load_assets(&cfg).unwrap();
    let loaded = load_targets(&cfg.targets_dir, &cfg.render).unwrap();
    let records = stage_assign(&cfg, &loaded, &assets).unwrap();
    let orders: Vec<Vec<usize>> = (1..=10)
        .map(|o| {
            cfg.coreset_per_class = o;
            let (classes, warnings) = stage_select(&cfg, &records, &assets).unwrap();
            assert!(warnings.is_empty());
            classes[0].selected.clone()
        })
        .collect();
    for o in 1..10 {
        assert_eq!(orders[o][..o], orders[o - 1][..], "O = {}", o + 1);
    }
}

#[test]
fn underpopulated_and_empty_classes_warn() {
    let dir = tempfile::tempdir().unwrap();
    let targets = [
        (0, psi([0.0, 0.0, 40.0, 50.0, 0.0, 60.0])),
        (0, psi([120.0, 0.0, 40.0, 50.0, 0.0, 60.0])),
    ];
    let mut cfg = scene(
        dir.path(),
        &[
            ("spindle", assets::spindle()),
            ("box", assets::product_box()),
        ],
        &targets,
        &small_render(),
    );
    cfg.coreset_per_class = 4;
    cfg.augment.n = 4;
    cfg.max_epochs = 1;
    let out = build_dataset(&cfg).unwrap();
    assert_eq!(out.report.warnings.len(), 2, "{:?}", out.report.warnings);
    assert!(out
        .report
        .warnings
        .iter()
        .any(|w| w.contains("`spindle` has 2 targets")));
    assert!(out
        .report
        .warnings
        .iter()
        .any(|w| w.contains("`box` received no targets")));
    assert_eq!(out.report.twins.len(), 2);
    assert!(out.manifest.records.iter().all(|r| r.asset_id == "spindle"));
}

#[test]
fn evaluation_of_the_targets_themselves_is_zero_and_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ScenarioConfig {
        targets_per_asset: 4,
        render: small_render(),
        ..ScenarioConfig::default()
    };
    let cfg = synth_targets(dir.path(), &scenario).unwrap();
    let labels: Vec<TargetLabel> = read_jsonl(&cfg.targets_dir.join(LABELS_FILE)).unwrap();
    let as_manifest = |root: &Path| DatasetManifest {
        root: root.to_path_buf(),
        records: labels
            .iter()
            .map(|l| ManifestRecord {
                image_path: l.file.clone(),
                asset_id: l.asset_id.clone(),
                bbox: None,
                psi: l.psi,
                origin: Origin::Twin,
                source_twin: None,
            })
            .collect(),
    };
    let own = evaluate(&as_manifest(&cfg.targets_dir), &cfg.targets_dir).unwrap();
    assert!(own.ffd <= 1e-6, "{}", own.ffd);
    assert_eq!(own.generated, 12);
    assert_eq!(own.targets, 12);
    assert!(own
        .per_class
        .values()
        .all(|c| c.generated == 4 && c.targets == 4));
    assert!(own.per_class_ffd.values().all(|&d| d <= 1e-6));

    let mut random_cfg = cfg.clone();
    random_cfg.augment.n = 12;
    let random = random_baseline(&random_cfg).unwrap();
    let forward = evaluate(&random, &cfg.targets_dir).unwrap();
    // the other direction: random images play the targets
    let backward = evaluate(&as_manifest(&cfg.targets_dir), &random.root.join("images")).unwrap();
    assert!(forward.ffd > 0.0);
    assert!((forward.ffd - backward.ffd).abs() <= 1e-9 * forward.ffd.max(1.0));

    assert!(evaluate(
        &DatasetManifest {
            root: cfg.targets_dir.clone(),
            records: vec![]
        },
        &cfg.targets_dir
    )
    .is_err());
}

#[test]
fn random_baseline_is_reproducible_and_rejects_zero() {
    let dir = tempfile::tempdir().unwrap();
    let targets = [
        (0, psi([0.0, 0.0, 40.0, 50.0, 0.0, 60.0])),
        (0, psi([90.0, 0.0, 40.0, 50.0, 0.0, 60.0])),
    ];
    let mut cfg = scene(
        dir.path(),
        &[("spindle", assets::spindle())],
        &targets,
        &small_render(),
    );
    cfg.coreset_per_class = 1;
    cfg.augment.n = 10;
    let a = random_baseline(&cfg).unwrap();
    let first = std::fs::read(a.root.join(MANIFEST_FILE)).unwrap();
    let b = random_baseline(&cfg).unwrap();
    assert_eq!(std::fs::read(b.root.join(MANIFEST_FILE)).unwrap(), first);
    assert_eq!(a.records.len(), 10);
    assert!(a
        .records
        .iter()
        .all(|r| r.origin == Origin::RandomBaseline && r.source_twin.is_none()));

    cfg.augment.n = 0;
    assert!(random_baseline(&cfg).is_err());
}

#[test]
fn dist_baseline_trace_never_rises() {
    let dir = tempfile::tempdir().unwrap();
    let targets: Vec<(usize, AttributeVector)> = (0..4)
        .map(|i| (0, psi([90.0 * (i % 2) as f64, 0.0, 40.0, 50.0, 30.0, 70.0])))
        .collect();
    let mut cfg = scene(
        dir.path(),
        &[("spindle", assets::spindle())],
        &targets,
        &small_render(),
    );
    cfg.coreset_per_class = 2;
    cfg.augment.n = 6;
    cfg.dist_baseline.max_epochs = 1;
    let manifest = dist_baseline(&cfg).unwrap();
    assert_eq!(manifest.records.len(), 6);
    assert!(manifest
        .records
        .iter()
        .all(|r| r.origin == Origin::DistBaseline));
    let trace: Vec<DistTraceEntry> = read_jsonl(&manifest.root.join("trace.jsonl")).unwrap();
    assert_eq!(trace.len(), Attribute::ALL.len());
    assert!(trace.windows(2).all(|w| w[1].objective <= w[0].objective));
}

#[test]
fn config_file_round_trip_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_targets(
        dir.path(),
        &ScenarioConfig {
            targets_per_asset: 1,
            render: small_render(),
            ..ScenarioConfig::default()
        },
    )
    .unwrap();
    let mut loaded = PipelineConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(loaded, cfg);
    loaded
        .apply_overrides(&[
            "coreset_per_class=3",
            "render.ambient=0",
            "assign.rule=canonical",
            "assets.1.id=flask",
        ])
        .unwrap();
    assert_eq!(loaded.coreset_per_class, 3);
    assert_eq!(loaded.render.ambient, 0.0);
    assert_eq!(loaded.assign.rule, AssignmentRule::Canonical);
    assert_eq!(loaded.assets[1].id, "flask");
    assert!(loaded.apply_overrides(&["nope=1"]).is_err());
    assert!(loaded.apply_overrides(&["augment.n"]).is_err());
}
