//! Procedural stand-ins for scanned product assets.

use std::f64::consts::TAU;

use crate::mesh::{Mesh, Rgb, Vec3};

/// Face colors of [`colored_box`] in the order +X, -X, +Y, -Y, +Z, -Z.
pub const BOX_FACE_COLORS: [Rgb; 6] = [
    [0.9, 0.2, 0.2],
    [0.2, 0.8, 0.3],
    [0.95, 0.9, 0.3],
    [0.3, 0.3, 0.9],
    [0.9, 0.5, 0.9],
    [0.2, 0.8, 0.85],
];

/// Axis-aligned box with separate vertices per face so every face keeps its
/// own normal and color.
pub fn box_mesh(size: Vec3, face_colors: [Rgb; 6]) -> Mesh {
    let half = size * 0.5;
    let mut vertices = Vec::with_capacity(24);
    let mut triangles = Vec::with_capacity(12);
    let mut albedo = Vec::with_capacity(12);
    let axes = [
        Vec3::x(),
        -Vec3::x(),
        Vec3::y(),
        -Vec3::y(),
        Vec3::z(),
        -Vec3::z(),
    ];
    for (face, n) in axes.iter().enumerate() {
        // tangent frame with u x v = n
        let u = if n.x.abs() > 0.5 {
            Vec3::new(0.0, 0.0, -n.x)
        } else if n.y.abs() > 0.5 {
            Vec3::new(n.y, 0.0, 0.0)
        } else {
            Vec3::new(n.z, 0.0, 0.0)
        };
        let v = n.cross(&u);
        let center = n.component_mul(&half);
        let hu = u.component_mul(&half);
        let hv = v.component_mul(&half);
        let base = vertices.len();
        vertices.push(center - hu - hv);
        vertices.push(center + hu - hv);
        vertices.push(center + hu + hv);
        vertices.push(center - hu + hv);
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
        albedo.push(face_colors[face]);
        albedo.push(face_colors[face]);
    }
    Mesh::new(vertices, triangles, None, albedo).expect("box mesh is well formed")
}

/// Unit cube with a distinct color on every face.
pub fn colored_box() -> Mesh {
    box_mesh(Vec3::new(1.0, 1.0, 1.0), BOX_FACE_COLORS)
}

/// Unit cube with one color on every face; 90° symmetric about the vertical axis.
pub fn uniform_box(color: Rgb) -> Mesh {
    box_mesh(Vec3::new(1.0, 1.0, 1.0), [color; 6])
}

/// Product-like box: taller than wide, red palette, lighter front than back.
pub fn product_box() -> Mesh {
    box_mesh(
        Vec3::new(0.9, 1.3, 0.5),
        [
            [0.75, 0.2, 0.15],
            [0.55, 0.15, 0.1],
            [0.9, 0.5, 0.45],
            [0.3, 0.1, 0.1],
            [0.86, 0.6, 0.55],
            [0.42, 0.17, 0.16],
        ],
    )
}

/// Upright cylinder whose front half (+Z side) carries a label.
pub fn bottle(segments: usize, body: Rgb, label: Rgb, cap: Rgb) -> Mesh {
    let segments = segments.max(3);
    let (radius, half_h) = (0.35, 0.7);
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    let mut albedo = Vec::new();

    // side: ring of bottom/top vertex pairs with radial normals
    for i in 0..segments {
        let a = TAU * i as f64 / segments as f64;
        let (s, c) = a.sin_cos();
        let radial = Vec3::new(s, 0.0, c);
        vertices.push(Vec3::new(radius * s, -half_h, radius * c));
        vertices.push(Vec3::new(radius * s, half_h, radius * c));
        normals.push(radial);
        normals.push(radial);
    }
    for i in 0..segments {
        let j = (i + 1) % segments;
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        let color = if i < segments / 4 || i >= segments - segments / 4 {
            label
        } else {
            body
        };
        albedo.push(color);
        albedo.push(color);
    }

    // caps
    for (y, up) in [(half_h, 1.0), (-half_h, -1.0)] {
        let n = Vec3::new(0.0, up, 0.0);
        let center = vertices.len();
        vertices.push(Vec3::new(0.0, y, 0.0));
        normals.push(n);
        let ring = vertices.len();
        for i in 0..segments {
            let a = TAU * i as f64 / segments as f64;
            vertices.push(Vec3::new(radius * a.sin(), y, radius * a.cos()));
            normals.push(n);
        }
        for i in 0..segments {
            let j = (i + 1) % segments;
            if up > 0.0 {
                triangles.push([center, ring + i, ring + j]);
            } else {
                triangles.push([center, ring + j, ring + i]);
            }
            albedo.push(cap);
        }
    }
    Mesh::new(vertices, triangles, Some(normals), albedo).expect("bottle mesh is well formed")
}

/// Flattened ellipsoid with different colors on its front (+Z) and back.
pub fn bag(front: Rgb, back: Rgb) -> Mesh {
    let (rings, sectors) = (10usize, 20usize);
    let radii = Vec3::new(0.6, 0.75, 0.3);
    let mut vertices = Vec::new();
    for r in 0..=rings {
        let theta = std::f64::consts::PI * r as f64 / rings as f64;
        let (st, ct) = theta.sin_cos();
        for s in 0..sectors {
            let phi = TAU * s as f64 / sectors as f64;
            let (sp, cp) = phi.sin_cos();
            vertices.push(Vec3::new(
                radii.x * st * sp,
                radii.y * ct,
                radii.z * st * cp,
            ));
        }
    }
    let idx = |r: usize, s: usize| r * sectors + (s % sectors);
    let mut triangles = Vec::new();
    let mut albedo = Vec::new();
    for r in 0..rings {
        for s in 0..sectors {
            let (a, b, c, d) = (idx(r, s), idx(r, s + 1), idx(r + 1, s), idx(r + 1, s + 1));
            let front_side = vertices[a].z + vertices[d].z > 0.0;
            let color = if front_side { front } else { back };
            if r > 0 {
                triangles.push([a, c, b]);
                albedo.push(color);
            }
            if r + 1 < rings {
                triangles.push([b, c, d]);
                albedo.push(color);
            }
        }
    }
    Mesh::new(vertices, triangles, None, albedo).expect("bag mesh is well formed")
}

/// HSV color with hue in degrees and saturation, value in [0, 1].
pub fn hsv(hue: f64, saturation: f64, value: f64) -> Rgb {
    let h6 = hue.rem_euclid(360.0) / 60.0;
    let c = value * saturation;
    let x = c * (1.0 - (h6 % 2.0 - 1.0).abs());
    let (r, g, b) = match h6 as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = value - c;
    [r + m, g + m, b + m]
}

/// Faceted ellipsoid from a latitude/longitude grid. Every triangle gets its
/// own vertices (flat normals) and the color `paint(centroid)`.
pub fn faceted_ellipsoid(
    rings: usize,
    sectors: usize,
    radii: Vec3,
    paint: impl Fn(Vec3) -> Rgb,
) -> Mesh {
    let (rings, sectors) = (rings.max(2), sectors.max(3));
    let mut grid = vec![Vec3::new(0.0, radii.y, 0.0)];
    for r in 1..rings {
        let (st, ct) = (std::f64::consts::PI * r as f64 / rings as f64).sin_cos();
        for s in 0..sectors {
            let (sp, cp) = (TAU * s as f64 / sectors as f64).sin_cos();
            grid.push(Vec3::new(
                radii.x * st * sp,
                radii.y * ct,
                radii.z * st * cp,
            ));
        }
    }
    grid.push(Vec3::new(0.0, -radii.y, 0.0));
    let bottom = grid.len() - 1;
    let idx = |r: usize, s: usize| 1 + (r - 1) * sectors + s % sectors;

    let mut faces = Vec::new();
    for s in 0..sectors {
        faces.push([0, idx(1, s), idx(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..sectors {
            faces.push([idx(r, s), idx(r + 1, s), idx(r + 1, s + 1)]);
            faces.push([idx(r, s), idx(r + 1, s + 1), idx(r, s + 1)]);
        }
    }
    for s in 0..sectors {
        faces.push([bottom, idx(rings - 1, s + 1), idx(rings - 1, s)]);
    }

    let mut vertices = Vec::with_capacity(3 * faces.len());
    let mut triangles = Vec::with_capacity(faces.len());
    let mut albedo = Vec::with_capacity(faces.len());
    for face in faces {
        let corners = face.map(|i| grid[i]);
        let base = vertices.len();
        vertices.extend(corners);
        triangles.push([base, base + 1, base + 2]);
        albedo.push(paint((corners[0] + corners[1] + corners[2]) / 3.0));
    }
    Mesh::new(vertices, triangles, None, albedo).expect("ellipsoid mesh is well formed")
}

/// Tall faceted ellipsoid painted with a hue wheel around the vertical axis
/// and a saturation ramp from bottom to top. No rotation or reflection maps
/// it onto itself, so every pose renders differently.
pub fn spindle() -> Mesh {
    let radii = Vec3::new(0.55, 1.2, 0.55);
    faceted_ellipsoid(6, 12, radii, |c| {
        let hue = c.x.atan2(c.z).to_degrees();
        let up = (c.y / radii.y + 1.0) / 2.0;
        hsv(hue, 0.9 - 0.65 * up, 0.9)
    })
}

/// The default asset catalogue of the synthetic scenario, keyed by asset id.
pub fn catalogue() -> Vec<(String, Mesh)> {
    vec![
        ("box".to_string(), product_box()),
        (
            "bottle".to_string(),
            bottle(24, [0.21, 0.31, 0.59], [0.64, 0.74, 0.91], [0.1, 0.1, 0.35]),
        ),
        (
            "bag".to_string(),
            bag([0.51, 0.84, 0.34], [0.17, 0.41, 0.14]),
        ),
    ]
}
