use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Projective map from sensor-grid coordinates to camera pixels.
///
/// Stored normalized so that the bottom-right entry is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub sensor: [f64; 2],
    pub camera: [f64; 2],
}

impl Correspondence {
    pub fn new(sensor: [f64; 2], camera: [f64; 2]) -> Self {
        Self { sensor, camera }
    }
}

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("homography has non-finite entries"));
        }
        let s = m[(2, 2)];
        if s.abs() < 1e-12 * m.abs().max() {
            return Err(Error::invalid(
                "homography cannot be normalized (bottom-right entry is zero)",
            ));
        }
        let m = m / s;
        let det = m.determinant();
        if !det.is_finite() || det.abs() < 1e-12 * m.abs().max().powi(3) {
            return Err(Error::invalid("homography is singular"));
        }
        Ok(Self { m })
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v))
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    /// `(x, y) -> (sx * x + tx, sy * y + ty)`.
    pub fn scale_translation(sx: f64, sy: f64, tx: f64, ty: f64) -> Result<Self> {
        Self::new(Matrix3::new(sx, 0.0, tx, 0.0, sy, ty, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.m[(r, c)];
            }
        }
        out
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let v = self.m * Vector3::new(x, y, 1.0);
        if v.z.abs() < 1e-12 {
            None
        } else {
            Some([v.x / v.z, v.y / v.z])
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| Error::invalid("homography is singular"))?;
        Self::new(inv)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Homography) -> Result<Self> {
        Self::new(next.m * self.m)
    }
}

/// Least-squares projective fit by the normalized direct linear transform.
pub fn fit_homography(correspondences: &[Correspondence]) -> Result<Homography> {
    let n = correspondences.len();
    if n < 4 {
        return Err(Error::FitFailure(format!(
            "need at least 4 correspondences, got {n}"
        )));
    }
    let src: Vec<[f64; 2]> = correspondences.iter().map(|c| c.sensor).collect();
    let dst: Vec<[f64; 2]> = correspondences.iter().map(|c| c.camera).collect();
    for (name, pts) in [("sensor", &src), ("camera", &dst)] {
        if pts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::FitFailure(format!("non-finite {name} point")));
        }
        check_configuration(pts).map_err(|m| Error::FitFailure(format!("{name} points {m}")))?;
    }
    let (src_n, t_src) = normalize(&src);
    let (dst_n, t_dst) = normalize(&dst);

    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src_n.iter().zip(&dst_n).enumerate() {
        let (x, y, u, v) = (s[0], s[1], d[0], d[1]);
        let r = 2 * i;
        a[(r, 0)] = -x;
        a[(r, 1)] = -y;
        a[(r, 2)] = -1.0;
        a[(r, 6)] = u * x;
        a[(r, 7)] = u * y;
        a[(r, 8)] = u;
        a[(r + 1, 3)] = -x;
        a[(r + 1, 4)] = -y;
        a[(r + 1, 5)] = -1.0;
        a[(r + 1, 6)] = v * x;
        a[(r + 1, 7)] = v * y;
        a[(r + 1, 8)] = v;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::FitFailure("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (smallest, second) = (order[0], order[1]);
    if sv[second] <= 1e-10 * sv[order[sv.len() - 1]] {
        return Err(Error::FitFailure(
            "correspondences do not determine a unique homography".into(),
        ));
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("degenerate normalization".into()))?;
    Homography::new(t_dst_inv * hn * t_src).map_err(|e| Error::FitFailure(e.to_string()))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Rejects coincident or collinear point sets. With exactly four points any
/// collinear triple is degenerate.
fn check_configuration(pts: &[[f64; 2]]) -> std::result::Result<(), String> {
    let scale = pts
        .iter()
        .flat_map(|p| p.iter().map(|v| v.abs()))
        .fold(1e-300f64, f64::max);
    let tol = 1e-9 * scale * scale;
    let p0 = pts[0];
    let far = pts
        .iter()
        .copied()
        .max_by(|a, b| dist2(p0, *a).total_cmp(&dist2(p0, *b)))
        .unwrap_or(p0);
    let all_collinear =
        dist2(p0, far) <= tol || pts.iter().all(|&p| cross(p0, far, p).abs() <= tol);
    if all_collinear {
        return Err("are collinear".into());
    }
    if pts.len() == 4 {
        for skip in 0..4 {
            let tri: Vec<[f64; 2]> = (0..4).filter(|&k| k != skip).map(|k| pts[k]).collect();
            if cross(tri[0], tri[1], tri[2]).abs() <= tol {
                return Err("contain a collinear triple".into());
            }
        }
    }
    Ok(())
}

/// Hartley normalization: centroid to origin, mean distance sqrt(2).
fn normalize(pts: &[[f64; 2]]) -> (Vec<[f64; 2]>, Matrix3<f64>) {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_dist = pts
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let out = pts
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    (out, t)
}
