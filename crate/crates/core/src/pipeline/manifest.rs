//! Labeled dataset manifests and the final rendering stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attributes::AttributeVector;
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};
use crate::mesh::Mesh;
use crate::par;
use crate::render::{bbox_from_mask, render, BoundingBox, RenderConfig};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Twin,
    Augmented,
    RandomBaseline,
    DistBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub asset_id: String,
    pub bbox: Option<BoundingBox>,
    pub psi: AttributeVector,
    pub origin: Origin,
    pub source_twin: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory the image paths are relative to.
    pub root: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let records = read_jsonl(path)?;
        Ok(DatasetManifest {
            root: path.parent().unwrap_or(Path::new("")).to_path_buf(),
            records,
        })
    }

    /// Write `manifest.jsonl` into [`root`](Self::root).
    pub fn write(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        write_jsonl(&path, &self.records)?;
        Ok(path)
    }

    pub fn image_path(&self, record: &ManifestRecord) -> PathBuf {
        self.root.join(&record.image_path)
    }
}

/// One image to render.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderJob {
    /// Index into the asset list.
    pub asset: usize,
    pub psi: AttributeVector,
    pub origin: Origin,
    pub source_twin: Option<usize>,
}

/// Render every job to `root/images/NNNNNN.png` in parallel and return the
/// manifest in job order.
pub fn render_jobs(
    assets: &[(String, Mesh)],
    jobs: &[RenderJob],
    cfg: &RenderConfig,
    root: &Path,
) -> Result<DatasetManifest> {
    let records = par::try_map_range(jobs.len(), |i| {
        let job = &jobs[i];
        let (id, mesh) = assets.get(job.asset).ok_or_else(|| {
            Error::Invariant(format!("render job {i} names missing asset {}", job.asset))
        })?;
        let (img, mask) = render(mesh, &job.psi, cfg)?;
        let rel = format!("images/{i:06}.png");
        img.write_png(root.join(&rel))?;
        Ok::<_, Error>(ManifestRecord {
            image_path: rel,
            asset_id: id.clone(),
            bbox: bbox_from_mask(&mask),
            psi: job.psi,
            origin: job.origin,
            source_twin: job.source_twin,
        })
    })?;
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::render::RasterImage;

    #[test]
    fn render_write_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let meshes = vec![("cube".to_string(), assets::colored_box())];
        let psi = AttributeVector::new([30.0, 0.0, 50.0, 50.0, 90.0, 50.0]);
        let jobs = vec![
            RenderJob {
                asset: 0,
                psi,
                origin: Origin::Twin,
                source_twin: None,
            },
            RenderJob {
                asset: 0,
                psi,
                origin: Origin::Augmented,
                source_twin: Some(0),
            },
        ];
        let cfg = RenderConfig::default();
        let manifest = render_jobs(&meshes, &jobs, &cfg, dir.path()).unwrap();
        let path = manifest.write().unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(back, manifest);
        let rec = &back.records[1];
        assert_eq!(rec.image_path, "images/000001.png");
        let img = RasterImage::read_png(back.image_path(rec)).unwrap();
        assert_eq!(img, render(&meshes[0].1, &psi, &cfg).unwrap().0);
        let bbox = rec.bbox.unwrap();
        assert!(bbox.max_x < cfg.image_width && bbox.max_y < cfg.image_height);
    }

    #[test]
    fn origin_names() {
        assert_eq!(
            serde_json::to_string(&Origin::RandomBaseline).unwrap(),
            "\"random-baseline\""
        );
        assert_eq!(serde_json::to_string(&Origin::Twin).unwrap(), "\"twin\"");
    }

    #[test]
    fn missing_asset_is_internal() {
        let dir = tempfile::tempdir().unwrap();
        let jobs = vec![RenderJob {
            asset: 3,
            psi: AttributeVector::new([0.0; 6]),
            origin: Origin::Twin,
            source_twin: None,
        }];
        let e = render_jobs(&[], &jobs, &RenderConfig::default(), dir.path()).unwrap_err();
        assert!(matches!(e, Error::Invariant(_)));
    }
}
