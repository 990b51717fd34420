//! Deterministic software renderer.
//!
//! Scene model: the object sits at the origin and is turned by the azimuth
//! about the world vertical (+Y) axis. The camera sits on the +Z side at a
//! horizontal distance and a height given by the linear attribute maps, looks
//! at the origin and is rolled about its viewing axis by the in-plane
//! rotation. A directional light at fixed 45° elevation is turned about +Y by
//! the light azimuth. Triangles are depth-buffered and shaded with a flat
//! Lambertian term.

use std::io::Write as _;
use std::path::Path;

use image::ImageEncoder as _;
use serde::{Deserialize, Serialize};

use crate::attributes::AttributeVector;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::mesh::{Mesh, Rgb, Vec3};

const LIGHT_ELEVATION_DEG: f64 = 45.0;
const NEAR_PLANE: f64 = 1e-3;

/// Linear map from an abstract `[0, 100]` attribute onto world units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub min: f64,
    pub max: f64,
}

impl LinearMap {
    pub const fn new(min: f64, max: f64) -> Self {
        LinearMap { min, max }
    }

    pub fn apply(&self, attribute_value: f64) -> f64 {
        self.min + (self.max - self.min) * (attribute_value / 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub image_width: usize,
    pub image_height: usize,
    /// Horizontal camera distance in world units.
    pub distance_map: LinearMap,
    pub height_map: LinearMap,
    /// Diffuse scale; both ends must lie in `[0, 1]`.
    pub intensity_map: LinearMap,
    pub ambient: f64,
    pub background_color: [u8; 3],
    /// Vertical field of view in degrees.
    pub field_of_view: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            image_width: 64,
            image_height: 64,
            distance_map: LinearMap::new(3.0, 5.0),
            height_map: LinearMap::new(-0.5, 0.5),
            intensity_map: LinearMap::new(0.4, 1.0),
            ambient: 0.25,
            background_color: [40, 40, 40],
            field_of_view: 40.0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image dimensions must be positive".into());
        }
        for (name, map) in [
            ("distance_map", self.distance_map),
            ("height_map", self.height_map),
            ("intensity_map", self.intensity_map),
        ] {
            if !(map.min.is_finite() && map.max.is_finite() && map.min < map.max) {
                return bad(format!("{name} requires min < max, got {map:?}"));
            }
        }
        let im = self.intensity_map;
        if !(0.0..=1.0).contains(&im.min) || !(0.0..=1.0).contains(&im.max) {
            return bad(format!("intensity_map must lie within [0, 1], got {im:?}"));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return bad(format!("ambient must lie in [0, 1], got {}", self.ambient));
        }
        if !(self.field_of_view > 0.0 && self.field_of_view < 180.0) {
            return bad(format!(
                "field_of_view must lie in (0, 180), got {}",
                self.field_of_view
            ));
        }
        Ok(())
    }
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&color);
        }
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    pub fn from_raw(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "pixel buffer of {} bytes for {width}x{height} RGB",
                pixels.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    pub fn same_size(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 20);
        let _ = write!(out, "P6\n{} {}\n255\n", self.width, self.height);
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("PPM: {m}"));
        // header: magic, width, height, maxval separated by whitespace
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("only 8-bit P6 is supported"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let body = bytes.get(pos + 1..).ok_or_else(|| bad("missing body"))?;
        RasterImage::from_raw(width, height, body.to_vec())
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        image::codecs::png::PngEncoder::new(&mut buf)
            .write_image(
                &self.pixels,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        write_atomic(path, &buf)
    }

    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        RasterImage::from_raw(w as usize, h as usize, rgb.into_raw())
    }
}

/// Per-pixel object coverage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SilhouetteMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SilhouetteMask {
    pub fn new(width: usize, height: usize) -> Self {
        SilhouetteMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

/// Tight box around the set bits; `None` when the mask is empty.
pub fn bbox_from_mask(mask: &SilhouetteMask) -> Option<BoundingBox> {
    let mut bbox: Option<BoundingBox> = None;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if !mask.get(x, y) {
                continue;
            }
            bbox = Some(match bbox {
                None => BoundingBox {
                    min_x: x,
                    min_y: y,
                    max_x: x,
                    max_y: y,
                },
                Some(b) => BoundingBox {
                    min_x: b.min_x.min(x),
                    min_y: b.min_y.min(y),
                    max_x: b.max_x.max(x),
                    max_y: b.max_y.max(y),
                },
            });
        }
    }
    bbox
}

struct Camera {
    position: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    focal_px: f64,
    cx: f64,
    cy: f64,
}

impl Camera {
    fn new(psi: &AttributeVector, cfg: &RenderConfig) -> Result<Camera> {
        let dist = cfg.distance_map.apply(psi.camera_distance());
        let height = cfg.height_map.apply(psi.camera_height());
        let position = Vec3::new(0.0, height, dist);
        let len = position.norm();
        if len == 0.0 || !len.is_finite() {
            return Err(Error::DegenerateCamera(format!(
                "camera maps to {position:?} for distance {} / height {}",
                psi.camera_distance(),
                psi.camera_height()
            )));
        }
        let forward = -position / len;
        let mut right = forward.cross(&Vec3::y());
        if right.norm() < 1e-12 {
            // looking straight up or down
            right = Vec3::x();
        } else {
            right = right.normalize();
        }
        let up = right.cross(&forward);

        let (s, c) = psi.in_plane_rotation().to_radians().sin_cos();
        let rolled_right = right * c + up * s;
        let rolled_up = up * c - right * s;

        let focal_px =
            (cfg.image_height as f64 / 2.0) / (cfg.field_of_view.to_radians() / 2.0).tan();
        Ok(Camera {
            position,
            right: rolled_right,
            up: rolled_up,
            forward,
            focal_px,
            cx: cfg.image_width as f64 / 2.0,
            cy: cfg.image_height as f64 / 2.0,
        })
    }

    /// Screen position (pixels, y down) and view depth.
    fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let d = p - self.position;
        let x = d.dot(&self.right);
        let y = d.dot(&self.up);
        let z = d.dot(&self.forward);
        (
            self.cx + self.focal_px * x / z,
            self.cy - self.focal_px * y / z,
            z,
        )
    }
}

fn rotate_y(v: &Vec3, sin: f64, cos: f64) -> Vec3 {
    Vec3::new(cos * v.x + sin * v.z, v.y, -sin * v.x + cos * v.z)
}

fn light_direction(azimuth_deg: f64) -> Vec3 {
    let (se, ce) = LIGHT_ELEVATION_DEG.to_radians().sin_cos();
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    Vec3::new(ce * sa, se, ce * ca)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Shaded color before quantization. Exposed for the monotone-light property.
pub fn shade(albedo: &Rgb, normal: &Vec3, light: &Vec3, ambient: f64, diffuse: f64) -> [f64; 3] {
    let lambert = normal.dot(light).max(0.0);
    let k = ambient + diffuse * lambert;
    [albedo[0] * k, albedo[1] * k, albedo[2] * k]
}

#[inline]
fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Top-left fill rule for an edge whose interior lies where `edge > 0`
/// (screen y pointing down).
#[inline]
fn is_top_left(ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let dx = bx - ax;
    let dy = by - ay;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Render `mesh` under attributes `psi`.
pub fn render(
    mesh: &Mesh,
    psi: &AttributeVector,
    cfg: &RenderConfig,
) -> Result<(RasterImage, SilhouetteMask)> {
    cfg.validate()?;
    if mesh.triangles().is_empty() {
        return Err(Error::InvalidMesh("cannot render an empty mesh".into()));
    }
    let camera = Camera::new(psi, cfg)?;
    let (w, h) = (cfg.image_width, cfg.image_height);

    let (sin_az, cos_az) = psi.azimuth().to_radians().sin_cos();
    let light = light_direction(psi.light_azimuth());
    let diffuse = cfg.intensity_map.apply(psi.light_intensity());

    let projected: Vec<(f64, f64, f64)> = mesh
        .vertices()
        .iter()
        .map(|v| camera.project(&rotate_y(v, sin_az, cos_az)))
        .collect();

    let mut image = RasterImage::filled(w, h, cfg.background_color);
    let mut mask = SilhouetteMask::new(w, h);
    let mut inv_depth = vec![0.0f64; w * h];

    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        let (pa, pb, pc) = (projected[a], projected[b], projected[c]);
        if pa.2 <= NEAR_PLANE || pb.2 <= NEAR_PLANE || pc.2 <= NEAR_PLANE {
            continue;
        }
        let mut area = edge(pa.0, pa.1, pb.0, pb.1, pc.0, pc.1);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        // orient so the interior is on the positive side of every edge
        let (v0, v1, v2) = if area > 0.0 {
            (pa, pb, pc)
        } else {
            area = -area;
            (pa, pc, pb)
        };

        let n = mesh.normals();
        let sum = n[a] + n[b] + n[c];
        let face_normal = if sum.norm() > 1e-12 {
            sum.normalize()
        } else {
            let vs = mesh.vertices();
            (vs[b] - vs[a]).cross(&(vs[c] - vs[a])).normalize()
        };
        let normal = rotate_y(&face_normal, sin_az, cos_az);
        let rgb = shade(&mesh.albedo()[t], &normal, &light, cfg.ambient, diffuse);
        let color = [quantize(rgb[0]), quantize(rgb[1]), quantize(rgb[2])];

        let min_x = v0.0.min(v1.0).min(v2.0).floor().max(0.0) as usize;
        let min_y = v0.1.min(v1.1).min(v2.1).floor().max(0.0) as usize;
        let max_x = (v0.0.max(v1.0).max(v2.0).ceil().min(w as f64) as usize).min(w);
        let max_y = (v0.1.max(v1.1).max(v2.1).ceil().min(h as f64) as usize).min(h);

        let tl0 = is_top_left(v1.0, v1.1, v2.0, v2.1);
        let tl1 = is_top_left(v2.0, v2.1, v0.0, v0.1);
        let tl2 = is_top_left(v0.0, v0.1, v1.0, v1.1);

        for y in min_y..max_y {
            let py = y as f64 + 0.5;
            for x in min_x..max_x {
                let px = x as f64 + 0.5;
                let e0 = edge(v1.0, v1.1, v2.0, v2.1, px, py);
                let e1 = edge(v2.0, v2.1, v0.0, v0.1, px, py);
                let e2 = edge(v0.0, v0.1, v1.0, v1.1, px, py);
                let inside = (e0 > 0.0 || (e0 == 0.0 && tl0))
                    && (e1 > 0.0 || (e1 == 0.0 && tl1))
                    && (e2 > 0.0 || (e2 == 0.0 && tl2));
                if !inside {
                    continue;
                }
                let inv_z = (e0 / v0.2 + e1 / v1.2 + e2 / v2.2) / area;
                let slot = y * w + x;
                if inv_z > inv_depth[slot] {
                    inv_depth[slot] = inv_z;
                    image.set(x, y, color);
                    mask.set(x, y, true);
                }
            }
        }
    }
    Ok((image, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn mid() -> AttributeVector {
        AttributeVector::new([180.0, 180.0, 50.0, 50.0, 180.0, 50.0])
    }

    #[test]
    fn bbox_single_point() {
        let mut m = SilhouetteMask::new(10, 10);
        m.set(3, 5, true);
        assert_eq!(
            bbox_from_mask(&m),
            Some(BoundingBox {
                min_x: 3,
                min_y: 5,
                max_x: 3,
                max_y: 5
            })
        );
    }

    #[test]
    fn bbox_empty() {
        assert_eq!(bbox_from_mask(&SilhouetteMask::new(4, 4)), None);
    }

    #[test]
    fn bbox_two_points() {
        let mut m = SilhouetteMask::new(10, 10);
        m.set(1, 2, true);
        m.set(7, 4, true);
        assert_eq!(
            bbox_from_mask(&m),
            Some(BoundingBox {
                min_x: 1,
                min_y: 2,
                max_x: 7,
                max_y: 4
            })
        );
    }

    #[test]
    fn render_is_deterministic() {
        let mesh = assets::colored_box();
        let cfg = RenderConfig::default();
        let a = render(&mesh, &mid(), &cfg).unwrap();
        let b = render(&mesh, &mid(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.1.count() > 0);
    }

    #[test]
    fn full_turn_azimuth_is_identical() {
        let mesh = assets::colored_box();
        let cfg = RenderConfig::default();
        let p0 = AttributeVector::new([0.0, 30.0, 40.0, 60.0, 90.0, 70.0]);
        let p360 = AttributeVector::new([360.0, 30.0, 40.0, 60.0, 90.0, 70.0]);
        assert_eq!(
            render(&mesh, &p0, &cfg).unwrap(),
            render(&mesh, &p360, &cfg).unwrap()
        );
    }

    #[test]
    fn dark_scene_is_black_on_object() {
        let mesh = assets::colored_box();
        let cfg = RenderConfig {
            intensity_map: LinearMap::new(0.0, 1.0),
            ambient: 0.0,
            ..RenderConfig::default()
        };
        let psi = mid().with(crate::Attribute::LightIntensity, 0.0);
        let (img, mask) = render(&mesh, &psi, &cfg).unwrap();
        assert!(mask.count() > 0);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let expect = if mask.get(x, y) {
                    [0, 0, 0]
                } else {
                    cfg.background_color
                };
                assert_eq!(img.get(x, y), expect);
            }
        }
    }

    #[test]
    fn degenerate_camera_rejected() {
        let cfg = RenderConfig {
            distance_map: LinearMap::new(0.0, 5.0),
            height_map: LinearMap::new(0.0, 5.0),
            ..RenderConfig::default()
        };
        let psi = AttributeVector::new([0.0, 0.0, 0.0, 0.0, 0.0, 50.0]);
        let e = render(&assets::colored_box(), &psi, &cfg).unwrap_err();
        assert!(matches!(e, Error::DegenerateCamera(_)));
    }

    #[test]
    fn straight_down_view_renders() {
        let cfg = RenderConfig {
            distance_map: LinearMap::new(0.0, 5.0),
            ..RenderConfig::default()
        };
        let psi = AttributeVector::new([0.0, 0.0, 0.0, 100.0, 0.0, 50.0]);
        let (_, mask) = render(&assets::colored_box(), &psi, &cfg).unwrap();
        assert!(mask.count() > 0);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = RenderConfig {
            field_of_view: 180.0,
            ..RenderConfig::default()
        };
        assert!(matches!(
            render(&assets::colored_box(), &mid(), &cfg),
            Err(Error::Config(_))
        ));
        let cfg = RenderConfig {
            distance_map: LinearMap::new(3.0, 3.0),
            ..RenderConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn shared_edge_pixels_are_not_double_covered() {
        // two triangles forming a square, seen head-on; every interior pixel
        // must be covered and the diagonal must not leave holes
        let v = |x: f64, y: f64| Vec3::new(x, y, 0.0);
        let mesh = Mesh::with_uniform_albedo(
            vec![v(-1.0, -1.0), v(1.0, -1.0), v(1.0, 1.0), v(-1.0, 1.0)],
            vec![[0, 1, 2], [0, 2, 3]],
            [1.0, 1.0, 1.0],
        )
        .unwrap();
        let cfg = RenderConfig {
            height_map: LinearMap::new(0.0, 1.0),
            ..RenderConfig::default()
        };
        let psi = AttributeVector::new([0.0, 0.0, 50.0, 0.0, 0.0, 50.0]);
        let (_, mask) = render(&mesh, &psi, &cfg).unwrap();
        let bbox = bbox_from_mask(&mask).unwrap();
        for y in bbox.min_y..=bbox.max_y {
            for x in bbox.min_x..=bbox.max_x {
                assert!(mask.get(x, y), "hole at {x},{y}");
            }
        }
    }

    #[test]
    fn ppm_round_trip() {
        let img = render(&assets::colored_box(), &mid(), &RenderConfig::default())
            .unwrap()
            .0;
        assert_eq!(RasterImage::from_ppm(&img.to_ppm()).unwrap(), img);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = render(&assets::colored_box(), &mid(), &RenderConfig::default())
            .unwrap()
            .0;
        img.write_png(&path).unwrap();
        assert_eq!(RasterImage::read_png(&path).unwrap(), img);
    }
}
