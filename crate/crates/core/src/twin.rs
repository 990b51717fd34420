//! Per-image coordinate descent over the discrete attribute grids.
//!
//! One iteration scans every grid value of a single attribute with all other
//! attributes held fixed and keeps the value with the lowest loss. One epoch
//! visits every attribute once in the sweep order. The incumbent value is part
//! of every scan, so the loss never increases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attributes::{Attribute, AttributeVector, ATTRIBUTE_COUNT};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::metrics::{
    embedding_distance, perceptual_embedding, ssim, style_distance, ScaleResponse,
};
use crate::par;
use crate::render::{render, RasterImage, RenderConfig};

/// Image distance minimized by the twin fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[default]
    Perceptual,
    /// `1 - ssim`
    SsimAsLoss,
    Style,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Perceptual => "perceptual",
            LossKind::SsimAsLoss => "ssim-as-loss",
            LossKind::Style => "style",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "perceptual" => Ok(LossKind::Perceptual),
            "ssim-as-loss" | "ssim" => Ok(LossKind::SsimAsLoss),
            "style" => Ok(LossKind::Style),
            other => Err(format!(
                "unknown loss `{other}` (expected perceptual, ssim-as-loss or style)"
            )),
        }
    }
}

/// A target image prepared once for repeated loss evaluations.
pub(crate) enum PreparedTarget<'a> {
    Perceptual(Vec<ScaleResponse>),
    Ssim(&'a RasterImage),
    Style(&'a RasterImage),
}

impl<'a> PreparedTarget<'a> {
    pub fn new(target: &'a RasterImage, loss: LossKind) -> Self {
        match loss {
            LossKind::Perceptual => PreparedTarget::Perceptual(perceptual_embedding(target)),
            LossKind::SsimAsLoss => PreparedTarget::Ssim(target),
            LossKind::Style => PreparedTarget::Style(target),
        }
    }

    pub fn loss(&self, rendered: &RasterImage) -> Result<f64> {
        match self {
            PreparedTarget::Perceptual(emb) => {
                if emb.first().map(|s| s.positions) != Some(rendered.width() * rendered.height()) {
                    return Err(Error::DimensionMismatch(
                        "rendered image does not match the target".into(),
                    ));
                }
                Ok(embedding_distance(emb, &perceptual_embedding(rendered)))
            }
            PreparedTarget::Ssim(t) => Ok(1.0 - ssim(t, rendered)?),
            PreparedTarget::Style(t) => style_distance(t, rendered),
        }
    }
}

/// Evaluate `loss(target, render(mesh, psi))`.
pub fn image_loss(
    target: &RasterImage,
    mesh: &Mesh,
    psi: &AttributeVector,
    cfg: &RenderConfig,
    loss: LossKind,
) -> Result<f64> {
    let (img, _) = render(mesh, psi, cfg)?;
    check_target(target, cfg)?;
    PreparedTarget::new(target, loss).loss(&img)
}

/// Ordered candidate values for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeGrid {
    pub values: Vec<f64>,
    /// Angular attributes wrap modulo 360.
    pub wrap: bool,
}

impl AttributeGrid {
    pub fn stepped(start: f64, step: f64, count: usize, wrap: bool) -> Self {
        AttributeGrid {
            values: (0..count).map(|i| start + step * i as f64).collect(),
            wrap,
        }
    }

    pub fn single(value: f64, wrap: bool) -> Self {
        AttributeGrid {
            values: vec![value],
            wrap,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.values.contains(&value)
    }

    /// Middle entry (upper middle for even lengths).
    pub fn midpoint(&self) -> Option<f64> {
        self.values.get(self.values.len() / 2).copied()
    }

    pub fn step(&self) -> Option<f64> {
        (self.values.len() >= 2).then(|| self.values[1] - self.values[0])
    }
}

/// Discrete search space: one grid per attribute plus the sweep order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub azimuth: AttributeGrid,
    pub in_plane_rotation: AttributeGrid,
    pub camera_distance: AttributeGrid,
    pub camera_height: AttributeGrid,
    pub light_azimuth: AttributeGrid,
    pub light_intensity: AttributeGrid,
    #[serde(default = "default_order")]
    pub sweep_order: Vec<Attribute>,
}

fn default_order() -> Vec<Attribute> {
    Attribute::ALL.to_vec()
}

impl Default for SearchSpace {
    /// Angles `{0, 30, ..., 330}`, bounded attributes `{0, 10, ..., 100}`.
    fn default() -> Self {
        let angle = AttributeGrid::stepped(0.0, 30.0, 12, true);
        let bounded = AttributeGrid::stepped(0.0, 10.0, 11, false);
        SearchSpace {
            azimuth: angle.clone(),
            in_plane_rotation: angle.clone(),
            camera_distance: bounded.clone(),
            camera_height: bounded.clone(),
            light_azimuth: angle,
            light_intensity: bounded,
            sweep_order: default_order(),
        }
    }
}

impl SearchSpace {
    pub fn grid(&self, attribute: Attribute) -> &AttributeGrid {
        match attribute {
            Attribute::Azimuth => &self.azimuth,
            Attribute::InPlaneRotation => &self.in_plane_rotation,
            Attribute::CameraDistance => &self.camera_distance,
            Attribute::CameraHeight => &self.camera_height,
            Attribute::LightAzimuth => &self.light_azimuth,
            Attribute::LightIntensity => &self.light_intensity,
        }
    }

    pub fn grid_mut(&mut self, attribute: Attribute) -> &mut AttributeGrid {
        match attribute {
            Attribute::Azimuth => &mut self.azimuth,
            Attribute::InPlaneRotation => &mut self.in_plane_rotation,
            Attribute::CameraDistance => &mut self.camera_distance,
            Attribute::CameraHeight => &mut self.camera_height,
            Attribute::LightAzimuth => &mut self.light_azimuth,
            Attribute::LightIntensity => &mut self.light_intensity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for attribute in Attribute::ALL {
            let grid = self.grid(attribute);
            if grid.values.is_empty() {
                return Err(Error::Config(format!("empty grid for {attribute}")));
            }
            if grid.wrap != attribute.is_angular() {
                return Err(Error::Config(format!(
                    "wrap flag of {attribute} must be {}",
                    attribute.is_angular()
                )));
            }
            if grid.values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Config(format!(
                    "grid for {attribute} must be strictly increasing"
                )));
            }
            if let Some(&bad) = grid.values.iter().find(|&&v| attribute.normalize(v) != v) {
                return Err(Error::Config(format!(
                    "grid value {bad} outside the range of {attribute}"
                )));
            }
        }
        let mut order = self.sweep_order.clone();
        order.sort();
        order.dedup();
        if order.len() != self.sweep_order.len() || order.len() != ATTRIBUTE_COUNT {
            return Err(Error::Config(
                "sweep_order must list every attribute exactly once".into(),
            ));
        }
        Ok(())
    }

    /// The grid midpoint of every attribute.
    pub fn midpoint(&self) -> AttributeVector {
        let mut raw = [0.0; ATTRIBUTE_COUNT];
        for attribute in Attribute::ALL {
            raw[attribute.index()] = self.grid(attribute).midpoint().unwrap_or(0.0);
        }
        AttributeVector::new(raw)
    }

    /// Reference view for pseudo labeling: linear attributes at their grid
    /// midpoint, wrapped attributes at their first grid value (a circle has
    /// no midpoint, and 0° is the frontal, upright, front-lit pose).
    pub fn canonical(&self) -> AttributeVector {
        let mut raw = [0.0; ATTRIBUTE_COUNT];
        for attribute in Attribute::ALL {
            let grid = self.grid(attribute);
            let value = if grid.wrap {
                grid.values.first().copied()
            } else {
                grid.midpoint()
            };
            raw[attribute.index()] = value.unwrap_or(0.0);
        }
        AttributeVector::new(raw)
    }

    pub fn contains(&self, psi: &AttributeVector) -> bool {
        Attribute::ALL
            .iter()
            .all(|&a| self.grid(a).contains(psi.get(a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub loss: LossKind,
    pub max_epochs: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            loss: LossKind::Perceptual,
            max_epochs: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub epoch: usize,
    pub attribute: Attribute,
    pub value: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub psi_star: AttributeVector,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub trace: Vec<TraceEntry>,
    pub epochs_run: usize,
}

impl FitResult {
    /// True when no iteration raised the loss.
    pub fn is_monotone(&self) -> bool {
        let mut last = self.initial_loss;
        for e in &self.trace {
            if e.loss > last {
                return false;
            }
            last = e.loss;
        }
        true
    }
}

fn check_target(target: &RasterImage, cfg: &RenderConfig) -> Result<()> {
    if target.width() != cfg.image_width || target.height() != cfg.image_height {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{} but the renderer produces {}x{}",
            target.width(),
            target.height(),
            cfg.image_width,
            cfg.image_height
        )));
    }
    Ok(())
}

fn step_prepared(
    target: &PreparedTarget<'_>,
    mesh: &Mesh,
    psi: &AttributeVector,
    attribute: Attribute,
    grid: &AttributeGrid,
    cfg: &RenderConfig,
) -> Result<(f64, f64)> {
    if grid.values.is_empty() {
        return Err(Error::InvalidInput(format!("empty grid for {attribute}")));
    }
    let mut candidates = grid.values.clone();
    let incumbent = psi.get(attribute);
    if !grid.contains(incumbent) {
        candidates.push(incumbent);
    }
    let losses = par::try_map(&candidates, |&z| {
        let (img, _) = render(mesh, &psi.with(attribute, z), cfg)?;
        target.loss(&img)
    })?;
    let mut best = 0;
    for i in 1..candidates.len() {
        let better = losses[i] < losses[best]
            || (losses[i] == losses[best] && candidates[i] < candidates[best]);
        if better {
            best = i;
        }
    }
    Ok((candidates[best], losses[best]))
}

/// Exhaustive scan of one attribute's grid (plus the incumbent value when it
/// is off-grid). Returns the minimizing value and its loss; ties go to the
/// smallest value.
pub fn coordinate_step(
    target: &RasterImage,
    mesh: &Mesh,
    psi: &AttributeVector,
    attribute: Attribute,
    grid: &AttributeGrid,
    cfg: &RenderConfig,
    loss: LossKind,
) -> Result<(f64, f64)> {
    check_target(target, cfg)?;
    step_prepared(
        &PreparedTarget::new(target, loss),
        mesh,
        psi,
        attribute,
        grid,
        cfg,
    )
}

/// Fit the attribute vector whose rendering best matches `target`.
pub fn fit_twin(
    target: &RasterImage,
    mesh: &Mesh,
    space: &SearchSpace,
    cfg: &RenderConfig,
    options: &FitOptions,
    init: &AttributeVector,
) -> Result<FitResult> {
    check_target(target, cfg)?;
    space.validate()?;
    if options.max_epochs == 0 {
        return Err(Error::InvalidInput("max_epochs must be at least 1".into()));
    }
    if let Some(a) = Attribute::ALL
        .iter()
        .find(|&&a| !space.grid(a).contains(init.get(a)))
    {
        return Err(Error::InvalidInput(format!(
            "initial {a} = {} is not on its grid",
            init.get(*a)
        )));
    }

    let prepared = PreparedTarget::new(target, options.loss);
    let mut psi = *init;
    let (img, _) = render(mesh, &psi, cfg)?;
    let initial_loss = prepared.loss(&img)?;
    let mut current = initial_loss;
    let mut trace = Vec::new();
    let mut epochs_run = 0;

    for epoch in 1..=options.max_epochs {
        epochs_run = epoch;
        let mut changed = false;
        for &attribute in &space.sweep_order {
            let (value, loss) =
                step_prepared(&prepared, mesh, &psi, attribute, space.grid(attribute), cfg)?;
            if loss > current {
                return Err(Error::Invariant(format!(
                    "coordinate step on {attribute} raised the loss from {current} to {loss}"
                )));
            }
            if value != psi.get(attribute) {
                changed = true;
                psi.set(attribute, value);
            }
            current = loss;
            trace.push(TraceEntry {
                epoch,
                attribute,
                value,
                loss,
            });
        }
        if !changed {
            break;
        }
    }

    Ok(FitResult {
        psi_star: psi,
        initial_loss,
        final_loss: current,
        trace,
        epochs_run,
    })
}
