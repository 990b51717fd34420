//! Scene attribute vectors.
//!
//! Every run uses the same six attributes in a fixed canonical order. Angular
//! attributes live in `[0, 360)` and wrap; the remaining attributes live in
//! the closed range `[0, 100]` and clamp.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of scene attributes in an [`AttributeVector`].
pub const ATTRIBUTE_COUNT: usize = 6;

/// One searchable scene attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Azimuth,
    InPlaneRotation,
    CameraDistance,
    CameraHeight,
    LightAzimuth,
    LightIntensity,
}

impl Attribute {
    pub const ALL: [Attribute; ATTRIBUTE_COUNT] = [
        Attribute::Azimuth,
        Attribute::InPlaneRotation,
        Attribute::CameraDistance,
        Attribute::CameraHeight,
        Attribute::LightAzimuth,
        Attribute::LightIntensity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Attribute> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Azimuth => "azimuth",
            Attribute::InPlaneRotation => "in_plane_rotation",
            Attribute::CameraDistance => "camera_distance",
            Attribute::CameraHeight => "camera_height",
            Attribute::LightAzimuth => "light_azimuth",
            Attribute::LightIntensity => "light_intensity",
        }
    }

    /// Angular attributes wrap modulo 360, the rest clamp.
    pub fn is_angular(self) -> bool {
        matches!(
            self,
            Attribute::Azimuth | Attribute::InPlaneRotation | Attribute::LightAzimuth
        )
    }

    /// Declared range. Angular ranges are half-open `[0, 360)`, bounded ones closed.
    pub fn range(self) -> (f64, f64) {
        if self.is_angular() {
            (0.0, 360.0)
        } else {
            (0.0, 100.0)
        }
    }

    pub fn span(self) -> f64 {
        let (lo, hi) = self.range();
        hi - lo
    }

    /// Map an arbitrary real onto this attribute's domain.
    pub fn normalize(self, value: f64) -> f64 {
        let (lo, hi) = self.range();
        if self.is_angular() {
            let wrapped = value.rem_euclid(360.0);
            // rem_euclid can round up to exactly 360 for tiny negative inputs
            if wrapped >= 360.0 {
                0.0
            } else {
                wrapped
            }
        } else if value.is_nan() {
            lo
        } else {
            value.clamp(lo, hi)
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attribute::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown attribute `{s}`"))
    }
}

/// The scene parameterization handed to the renderer.
///
/// Construction always normalizes, so a value of this type satisfies the
/// range invariants of every attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "AttributeRecord", from = "AttributeRecord")]
pub struct AttributeVector([f64; ATTRIBUTE_COUNT]);

impl AttributeVector {
    /// Build from raw components in canonical attribute order, wrapping
    /// angles and clamping bounded values.
    pub fn new(raw: [f64; ATTRIBUTE_COUNT]) -> Self {
        normalize_psi(raw)
    }

    pub fn get(&self, attribute: Attribute) -> f64 {
        self.0[attribute.index()]
    }

    /// Copy of `self` with one coordinate replaced (and normalized).
    pub fn with(&self, attribute: Attribute, value: f64) -> Self {
        let mut raw = self.0;
        raw[attribute.index()] = attribute.normalize(value);
        AttributeVector(raw)
    }

    pub fn set(&mut self, attribute: Attribute, value: f64) {
        self.0[attribute.index()] = attribute.normalize(value);
    }

    pub fn components(&self) -> [f64; ATTRIBUTE_COUNT] {
        self.0
    }

    pub fn azimuth(&self) -> f64 {
        self.get(Attribute::Azimuth)
    }

    pub fn in_plane_rotation(&self) -> f64 {
        self.get(Attribute::InPlaneRotation)
    }

    pub fn camera_distance(&self) -> f64 {
        self.get(Attribute::CameraDistance)
    }

    pub fn camera_height(&self) -> f64 {
        self.get(Attribute::CameraHeight)
    }

    pub fn light_azimuth(&self) -> f64 {
        self.get(Attribute::LightAzimuth)
    }

    pub fn light_intensity(&self) -> f64 {
        self.get(Attribute::LightIntensity)
    }
}

/// Wrap angular components to `[0, 360)` and clamp bounded ones to `[0, 100]`.
pub fn normalize_psi(raw: [f64; ATTRIBUTE_COUNT]) -> AttributeVector {
    let mut out = [0.0; ATTRIBUTE_COUNT];
    for attribute in Attribute::ALL {
        out[attribute.index()] = attribute.normalize(raw[attribute.index()]);
    }
    AttributeVector(out)
}

/// Named-field form used for every serialized attribute vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct AttributeRecord {
    azimuth: f64,
    in_plane_rotation: f64,
    camera_distance: f64,
    camera_height: f64,
    light_azimuth: f64,
    light_intensity: f64,
}

impl From<AttributeVector> for AttributeRecord {
    fn from(v: AttributeVector) -> Self {
        AttributeRecord {
            azimuth: v.azimuth(),
            in_plane_rotation: v.in_plane_rotation(),
            camera_distance: v.camera_distance(),
            camera_height: v.camera_height(),
            light_azimuth: v.light_azimuth(),
            light_intensity: v.light_intensity(),
        }
    }
}

impl From<AttributeRecord> for AttributeVector {
    fn from(r: AttributeRecord) -> Self {
        AttributeVector::new([
            r.azimuth,
            r.in_plane_rotation,
            r.camera_distance,
            r.camera_height,
            r.light_azimuth,
            r.light_intensity,
        ])
    }
}
