use pressure_core::ContactMap;
use serde::{Deserialize, Serialize};

use super::mesh::HandMesh;
use super::plane::{PinholeCamera, PlaneModel};
use crate::error::{EvalError, Result};
use crate::metrics::FrameMetricAccumulator;

pub const DEFAULT_SCALE_RANGE: (f64, f64) = (0.8, 1.2);
pub const DEFAULT_SCALE_STEPS: usize = 81;

/// Contact pixels of a hand against a plane: every vertex at most
/// `tolerance` meters above the plane (or below it) is projected onto the
/// plane raster and marked together with its 8 neighbors.
pub fn contact_from_mesh(mesh: &HandMesh, plane: &PlaneModel, tolerance: f64) -> Result<ContactMap> {
    if mesh.is_empty() {
        return Err(EvalError::invalid("mesh has no vertices"));
    }
    if !(tolerance >= 0.0) {
        return Err(EvalError::invalid(format!("tolerance {tolerance} must be >= 0")));
    }
    let (w, h) = plane.dims();
    let mut map = ContactMap::empty(w, h);
    for v in mesh.vertices() {
        if plane.signed_distance(&v) > tolerance {
            continue;
        }
        let Some([px, py]) = plane.pixel_of(&v) else {
            continue;
        };
        let (cx, cy) = (px.round(), py.round());
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (cx + dx as f64, cy + dy as f64);
                if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                    map.set(x as usize, y as usize, true);
                }
            }
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_scale: f64,
    /// Pooled Contact IoU at `best_scale`; `None` when no scale produced any
    /// contact and the ground truth is empty.
    pub best_iou: Option<f64>,
    /// `(scale, pooled Contact IoU)` for every evaluated scale.
    pub curve: Vec<(f64, Option<f64>)>,
}

/// Scale grid of a sweep: `steps` evenly spaced values over `range`.
pub fn sweep_scales(range: (f64, f64), steps: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(EvalError::invalid(format!("empty or non-positive scale range {range:?}")));
    }
    if steps < 2 {
        return Err(EvalError::invalid("a sweep needs at least two steps"));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Finds the hand scale whose mesh-plane contact best matches `gt`, pooling
/// Contact IoU over the whole sequence. Ties go to the smaller scale.
pub fn scale_sweep(
    poses: &[HandMesh],
    gt: &[ContactMap],
    plane: &PlaneModel,
    tolerance: f64,
    range: (f64, f64),
    steps: usize,
) -> Result<SweepResult> {
    if poses.is_empty() {
        return Err(EvalError::invalid("empty pose sequence"));
    }
    if poses.len() != gt.len() {
        return Err(EvalError::invalid(format!(
            "{} poses but {} ground-truth maps",
            poses.len(),
            gt.len()
        )));
    }
    let scales = sweep_scales(range, steps)?;
    let mut curve = Vec::with_capacity(scales.len());
    for &s in &scales {
        let mut acc = FrameMetricAccumulator::default();
        for (mesh, g) in poses.iter().zip(gt) {
            let est = contact_from_mesh(&mesh.with_scale(s)?, plane, tolerance)?;
            acc.add_contact(&est, g)?;
        }
        curve.push((s, acc.contact_iou()));
    }
    let (mut best_scale, mut best_iou) = curve[0];
    for &(s, iou) in &curve[1..] {
        if iou > best_iou {
            best_scale = s;
            best_iou = iou;
        }
    }
    Ok(SweepResult {
        best_scale,
        best_iou,
        curve,
    })
}

/// Per-pixel splat of vertex values as seen by `camera`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSplat {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    /// Depth of the winning vertex, `f64::INFINITY` where nothing landed.
    pub depth: Vec<f64>,
}

impl VertexSplat {
    pub fn covered(&self) -> impl Iterator<Item = bool> + '_ {
        self.depth.iter().map(|d| d.is_finite())
    }
}

/// Splats per-vertex scalars to the nearest camera pixel; where several
/// vertices land on one pixel the nearest to the camera wins.
pub fn project_mesh_values(mesh: &HandMesh, values: &[f32], camera: &PinholeCamera) -> Result<VertexSplat> {
    if values.len() != mesh.len() {
        return Err(EvalError::invalid(format!(
            "{} values for {} vertices",
            values.len(),
            mesh.len()
        )));
    }
    let n = camera.width * camera.height;
    let mut out = VertexSplat {
        width: camera.width,
        height: camera.height,
        values: vec![0.0; n],
        depth: vec![f64::INFINITY; n],
    };
    for (v, &val) in mesh.vertices().zip(values) {
        let Some((uv, z)) = camera.project(&v) else {
            continue;
        };
        if let Some(i) = camera.pixel_index(uv) {
            if z < out.depth[i] {
                out.depth[i] = z;
                out.values[i] = val;
            }
        }
    }
    Ok(out)
}

/// The reverse of [`project_mesh_values`]: each vertex visible within
/// `depth_tolerance` of the front surface reads the map at its nearest
/// pixel; hidden or off-image vertices get 0.
pub fn gather_vertex_values(
    mesh: &HandMesh,
    camera: &PinholeCamera,
    map: &[f32],
    depth_tolerance: f64,
) -> Result<Vec<f32>> {
    if map.len() != camera.width * camera.height {
        return Err(EvalError::invalid(format!(
            "map has {} values, camera is {}x{}",
            map.len(),
            camera.width,
            camera.height
        )));
    }
    let front = project_mesh_values(mesh, &vec![0.0; mesh.len()], camera)?.depth;
    Ok(mesh
        .vertices()
        .map(|v| match camera.project(&v) {
            Some((uv, z)) => match camera.pixel_index(uv) {
                Some(i) if z <= front[i] + depth_tolerance => map[i],
                _ => 0.0,
            },
            None => 0.0,
        })
        .collect())
}
