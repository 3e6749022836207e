//! Triangle meshes and their ASCII form (`v x y z`, `f i j k`, 1-indexed).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{EvalError, Result};

/// Hand surface in meters. `scale` multiplies every vertex about `origin`
/// (the wrist) when the mesh is used.
#[derive(Debug, Clone, PartialEq)]
pub struct HandMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    origin: Vector3<f64>,
    scale: f64,
}

impl HandMesh {
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        faces: Vec<[usize; 3]>,
        origin: Vector3<f64>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(EvalError::invalid("mesh has no vertices"));
        }
        if vertices.iter().chain([&origin]).any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(EvalError::invalid("mesh coordinates must be finite"));
        }
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= vertices.len())) {
            return Err(EvalError::invalid(format!(
                "face {f:?} indexes past {} vertices",
                vertices.len()
            )));
        }
        Ok(Self {
            vertices,
            faces,
            origin,
            scale: 1.0,
        })
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(EvalError::invalid(format!("scale {scale} must be positive")));
        }
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Unscaled vertices.
    pub fn raw_vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices with the scale applied.
    pub fn vertices(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.vertices
            .iter()
            .map(move |v| self.origin + (v - self.origin) * self.scale)
    }

    /// Rigidly moves the mesh and its origin.
    pub fn translated(&self, t: Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + t).collect(),
            origin: self.origin + t,
            ..self.clone()
        }
    }

    /// Multiplies all coordinates, origin included, by `k`.
    pub fn uniformly_scaled(&self, k: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * k).collect(),
            origin: self.origin * k,
            ..self.clone()
        }
    }

    /// Appends another mesh's geometry; the origin and scale of `self` stay.
    pub fn append(&mut self, other: &HandMesh) {
        let base = self.vertices.len();
        self.vertices.extend(other.vertices());
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }
}

/// Parses the ASCII mesh format. The origin comes from an `# origin x y z`
/// line when present, else it is the first vertex. Other OBJ statements
/// (`vn`, `vt`, `o`, `g`, `s`, comments) are ignored, and `f` entries may
/// carry `/`-separated texture and normal indices.
pub fn parse_mesh(text: &str) -> Result<HandMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut origin = None;
    for (n, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = |what: &str| EvalError::invalid(format!("line {}: {what}", n + 1));
        match it.next() {
            Some("#") if line.split_whitespace().nth(1) == Some("origin") => {
                let c: Vec<f64> = it
                    .skip(1)
                    .map(|t| t.parse().map_err(|_| bad("bad origin coordinate")))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(bad("origin needs three coordinates"));
                }
                origin = Some(Vector3::new(c[0], c[1], c[2]));
            }
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse().map_err(|_| bad("bad vertex coordinate")))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(bad("vertex needs three coordinates"));
                }
                vertices.push(Vector3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        t.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| bad("bad face index"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs three indices"));
                }
                // fan-triangulate polygons
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let origin = match origin.or_else(|| vertices.first().copied()) {
        Some(o) => o,
        None => return Err(EvalError::invalid("mesh has no vertices")),
    };
    HandMesh::new(vertices, faces, origin)
}

/// Scaled vertices and faces in the ASCII format, origin as a comment.
pub fn format_mesh(mesh: &HandMesh) -> String {
    let mut out = String::new();
    let o = mesh.origin();
    let _ = writeln!(out, "# origin {:?} {:?} {:?}", o.x, o.y, o.z);
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<HandMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    parse_mesh(&text).map_err(|e| EvalError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &HandMesh) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh)).map_err(|e| EvalError::io(path, e))
}
