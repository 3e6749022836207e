use nalgebra::{Matrix3, Vector3};
use pressure_core::geometry::Homography;

use crate::error::{EvalError, Result};

/// The sensor plane in the hand's frame, with a map from in-plane
/// coordinates (meters along `u_axis` and `v_axis`) to output pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneModel {
    origin: Vector3<f64>,
    normal: Vector3<f64>,
    u_axis: Vector3<f64>,
    v_axis: Vector3<f64>,
    to_pixels: Homography,
    width: usize,
    height: usize,
}

impl PlaneModel {
    /// `u_hint` is projected into the plane to fix the in-plane axes; the
    /// normal points to the side the hand approaches from.
    pub fn new(
        origin: Vector3<f64>,
        normal: Vector3<f64>,
        u_hint: Vector3<f64>,
        to_pixels: Homography,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let n = normal
            .try_normalize(1e-12)
            .ok_or_else(|| EvalError::invalid("plane normal must be non-zero"))?;
        let u = (u_hint - n * n.dot(&u_hint))
            .try_normalize(1e-12)
            .ok_or_else(|| EvalError::invalid("u axis must not be parallel to the normal"))?;
        if width == 0 || height == 0 {
            return Err(EvalError::invalid("plane raster must be non-empty"));
        }
        Ok(Self {
            origin,
            normal: n,
            u_axis: u,
            v_axis: n.cross(&u),
            to_pixels,
            width,
            height,
        })
    }

    /// The plane z = 0 seen from +z, rasterized at `pixels_per_meter` with
    /// the world origin at pixel `(cx, cy)`.
    pub fn horizontal(pixels_per_meter: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let to_pixels = Homography::scale_translation(pixels_per_meter, pixels_per_meter, cx, cy)?;
        Self::new(
            Vector3::zeros(),
            Vector3::z(),
            Vector3::x(),
            to_pixels,
            width,
            height,
        )
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn to_pixels(&self) -> &Homography {
        &self.to_pixels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Positive above the plane (on the normal's side).
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    /// In-plane coordinates of the orthogonal projection of `p`.
    pub fn plane_coords(&self, p: &Vector3<f64>) -> [f64; 2] {
        let d = p - self.origin;
        [d.dot(&self.u_axis), d.dot(&self.v_axis)]
    }

    pub fn pixel_of(&self, p: &Vector3<f64>) -> Option<[f64; 2]> {
        let [u, v] = self.plane_coords(p);
        self.to_pixels.apply(u, v)
    }

    /// Same plane with every length multiplied by `k`: origin scaled and
    /// the pixel map absorbing `1/k`.
    pub fn uniformly_scaled(&self, k: f64) -> Result<Self> {
        let shrink = Homography::scale_translation(1.0 / k, 1.0 / k, 0.0, 0.0)?;
        Ok(Self {
            origin: self.origin * k,
            to_pixels: shrink.then(&self.to_pixels)?,
            ..self.clone()
        })
    }
}

/// Pinhole camera with world-to-camera rotation `r` and translation `t`
/// (`x_cam = r·x + t`, +z forward, +y down in the image).
#[derive(Debug, Clone, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
    pub width: usize,
    pub height: usize,
}

impl PinholeCamera {
    /// Camera at height `h` above the origin looking straight down at z = 0,
    /// with world +x to the right of the image.
    pub fn top_down(h: f64, focal: f64, width: usize, height: usize) -> Self {
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        Self {
            fx: focal,
            fy: focal,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            r,
            t: Vector3::new(0.0, 0.0, h),
            width,
            height,
        }
    }

    /// Pixel coordinates and depth, or `None` behind the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<([f64; 2], f64)> {
        let c = self.r * p + self.t;
        if c.z <= 0.0 {
            return None;
        }
        Some((
            [self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy],
            c.z,
        ))
    }

    /// Index of the pixel nearest to a projected point, if inside the image.
    pub fn pixel_index(&self, uv: [f64; 2]) -> Option<usize> {
        let (x, y) = (uv[0].round(), uv[1].round());
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return None;
        }
        Some(y as usize * self.width + x as usize)
    }
}
