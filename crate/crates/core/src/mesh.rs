//! Triangle meshes and the ASCII mesh format.
//!
//! The accepted subset of the OBJ format:
//!
//! ```text
//! # comment
//! v  x y z        vertex position
//! vn x y z        vertex normal (if present, exactly one per vertex)
//! kd r g b        albedo for the faces that follow, components in [0, 1]
//! f  i j k        triangle, 1-based vertex indices (`i/t/n` forms accepted)
//! ```
//!
//! Other OBJ keywords (`o`, `g`, `s`, `vt`, `usemtl`, `mtllib`) are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Rgb = [f64; 3];

pub const DEFAULT_ALBEDO: Rgb = [0.8, 0.8, 0.8];

const NORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    albedo: Vec<Rgb>,
}

impl Mesh {
    /// Build a mesh from raw parts. Missing normals are recomputed as
    /// area-weighted vertex normals and the mesh is recentered on its
    /// bounding-box center.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        normals: Option<Vec<Vec3>>,
        albedo: Vec<Rgb>,
    ) -> Result<Mesh> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has zero triangles".into()));
        }
        if let Some(bad) = triangles.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(Error::InvalidMesh(format!(
                "vertex index {bad} out of range for {} vertices",
                vertices.len()
            )));
        }
        if albedo.len() != triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} albedo entries for {} triangles",
                albedo.len(),
                triangles.len()
            )));
        }
        if albedo.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidMesh("albedo outside [0, 1]".into()));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }

        let normals = match normals {
            Some(given) => {
                if given.len() != vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "{} normals for {} vertices",
                        given.len(),
                        vertices.len()
                    )));
                }
                given
                    .into_iter()
                    .map(|n| {
                        let len = n.norm();
                        if len > 0.0 && len.is_finite() {
                            Ok(n / len)
                        } else {
                            Err(Error::InvalidMesh("zero-length vertex normal".into()))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => area_weighted_normals(&vertices, &triangles),
        };

        let mut mesh = Mesh {
            vertices,
            triangles,
            normals,
            albedo,
        };
        mesh.recenter();
        Ok(mesh)
    }

    pub fn with_uniform_albedo(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        albedo: Rgb,
    ) -> Result<Mesh> {
        let n = triangles.len();
        Mesh::new(vertices, triangles, None, vec![albedo; n])
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn albedo(&self) -> &[Rgb] {
        &self.albedo
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bounds(&self.vertices)
    }

    fn recenter(&mut self) {
        let (lo, hi) = bounds(&self.vertices);
        let center = (lo + hi) * 0.5;
        for v in &mut self.vertices {
            *v -= center;
        }
    }

    /// Check every structural invariant. Used by tests and by loaders of
    /// externally produced meshes.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has zero triangles".into()));
        }
        if self
            .triangles
            .iter()
            .flatten()
            .any(|&i| i >= self.vertices.len())
        {
            return Err(Error::InvalidMesh("triangle index out of range".into()));
        }
        if self
            .normals
            .iter()
            .any(|n| (n.norm() - 1.0).abs() > NORMAL_TOLERANCE)
        {
            return Err(Error::InvalidMesh("non-unit normal".into()));
        }
        let (lo, hi) = self.bounding_box();
        if ((lo + hi) * 0.5).norm() > 1e-9 {
            return Err(Error::InvalidMesh("mesh is not centered".into()));
        }
        Ok(())
    }

    /// Serialize to the ASCII format read by [`parse_mesh`].
    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for n in &self.normals {
            let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
        }
        let mut current: Option<Rgb> = None;
        for (tri, color) in self.triangles.iter().zip(&self.albedo) {
            if current != Some(*color) {
                let _ = writeln!(out, "kd {} {} {}", color[0], color[1], color[2]);
                current = Some(*color);
            }
            let _ = writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
        }
        out
    }
}

fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if points.is_empty() {
        (Vec3::zeros(), Vec3::zeros())
    } else {
        (lo, hi)
    }
}

/// Sum of unnormalized face normals (twice the face area) around each vertex.
fn area_weighted_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for &[a, b, c] in triangles {
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                Vec3::y()
            }
        })
        .collect()
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, &path.display().to_string())
}

/// Parse mesh text. `origin` names the source in error messages.
pub fn parse_mesh(text: &str, origin: &str) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::MeshParse {
        path: origin.to_string(),
        line,
        message,
    };

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut faces: Vec<([usize; 3], usize)> = Vec::new();
    let mut albedo = Vec::new();
    let mut current = DEFAULT_ALBEDO;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        match keyword {
            "v" | "vn" | "kd" => {
                if args.len() != 3 {
                    return Err(err(
                        line_no,
                        format!("`{keyword}` expects 3 numbers, found {}", args.len()),
                    ));
                }
                let mut xyz = [0.0; 3];
                for (slot, arg) in xyz.iter_mut().zip(&args) {
                    *slot = arg
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(line_no, format!("bad number `{arg}`")))?;
                }
                match keyword {
                    "v" => vertices.push(Vec3::from(xyz)),
                    "vn" => normals.push(Vec3::from(xyz)),
                    _ => {
                        if xyz.iter().any(|c| !(0.0..=1.0).contains(c)) {
                            return Err(err(line_no, "albedo outside [0, 1]".into()));
                        }
                        current = xyz;
                    }
                }
            }
            "f" => {
                if args.len() != 3 {
                    return Err(err(
                        line_no,
                        format!("non-triangular face with {} vertices", args.len()),
                    ));
                }
                let mut tri = [0usize; 3];
                for (slot, arg) in tri.iter_mut().zip(&args) {
                    let first = arg.split('/').next().unwrap_or("");
                    let one_based: usize = first
                        .parse()
                        .map_err(|_| err(line_no, format!("bad face index `{arg}`")))?;
                    if one_based == 0 {
                        return Err(err(line_no, "face indices are 1-based".into()));
                    }
                    *slot = one_based - 1;
                }
                faces.push((tri, line_no));
                albedo.push(current);
            }
            "o" | "g" | "s" | "vt" | "usemtl" | "mtllib" => {}
            other => return Err(err(line_no, format!("unsupported keyword `{other}`"))),
        }
    }

    for &(tri, line_no) in &faces {
        if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
            return Err(err(
                line_no,
                format!(
                    "face index {} out of range ({} vertices)",
                    bad + 1,
                    vertices.len()
                ),
            ));
        }
    }
    if faces.is_empty() {
        return Err(err(
            text.lines().count().max(1),
            "mesh has zero triangles".into(),
        ));
    }
    if !normals.is_empty() && normals.len() != vertices.len() {
        return Err(err(
            text.lines().count().max(1),
            format!(
                "{} normals for {} vertices; normals must be per-vertex",
                normals.len(),
                vertices.len()
            ),
        ));
    }

    let triangles = faces.into_iter().map(|(t, _)| t).collect();
    let normals = (!normals.is_empty()).then_some(normals);
    Mesh::new(vertices, triangles, normals, albedo).map_err(|e| match e {
        Error::InvalidMesh(message) => err(0, message),
        other => other,
    })
}
