use image::RgbImage;

use super::homography::Homography;
use super::warp::resize_rgb_bilinear;
use crate::error::{Error, Result};

/// Margin kept around the sensor when cropping camera frames, pixels.
pub const DEFAULT_BORDER_PX: u32 = 50;
/// Network input size `(width, height)` at full scale.
pub const DEFAULT_INPUT_DIMS: (u32, u32) = (480, 384);

/// Sensor outline in camera pixels, corners in order around the quad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPolygon {
    corners: [[f64; 2]; 4],
}

impl SensorPolygon {
    pub fn new(corners: [[f64; 2]; 4]) -> Result<Self> {
        if corners.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sensor polygon has non-finite corners"));
        }
        let mut sign = 0.0f64;
        for i in 0..4 {
            let (a, b, c) = (corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]);
            let z = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if z.abs() < 1e-9 {
                return Err(Error::invalid("sensor polygon is degenerate"));
            }
            if sign != 0.0 && z.signum() != sign {
                return Err(Error::invalid("sensor polygon is not convex"));
            }
            sign = z.signum();
        }
        Ok(Self { corners })
    }

    /// Outline of a `width x height` sensor grid (cell edges, not centers)
    /// mapped into the camera.
    pub fn from_homography(h: &Homography, width: usize, height: usize) -> Result<Self> {
        let (w, hh) = (width as f64 - 0.5, height as f64 - 0.5);
        let pts = [[-0.5, -0.5], [w, -0.5], [w, hh], [-0.5, hh]];
        let mut corners = [[0.0; 2]; 4];
        for (dst, p) in corners.iter_mut().zip(pts) {
            *dst = h
                .apply(p[0], p[1])
                .ok_or_else(|| Error::invalid("sensor corner maps to infinity"))?;
        }
        Self::new(corners)
    }

    pub fn corners(&self) -> &[[f64; 2]; 4] {
        &self.corners
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.corners.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), p| (x0.min(p[0]), y0.min(p[1]), x1.max(p[0]), y1.max(p[1])),
        )
    }
}

#[derive(Debug, Clone)]
pub struct CropResult {
    pub image: RgbImage,
    /// Sensor grid to the resized crop's pixel grid.
    pub homography: Homography,
    /// Crop rectangle in the source image, `(x, y, width, height)`.
    pub crop: (u32, u32, u32, u32),
}

/// Crops the polygon's bounding box grown by `border` pixels and resizes it
/// to `out`. The returned homography is `h` composed with the crop and scale,
/// so sensor pressure still registers to the new pixels.
pub fn crop_and_resize(
    img: &RgbImage,
    poly: &SensorPolygon,
    h: &Homography,
    border: u32,
    out: (u32, u32),
) -> Result<CropResult> {
    if out.0 == 0 || out.1 == 0 {
        return Err(Error::invalid("output dimensions must be positive"));
    }
    let (min_x, min_y, max_x, max_y) = poly.bounds();
    let b = border as f64;
    let x0 = (min_x - b).floor();
    let y0 = (min_y - b).floor();
    let x1 = (max_x + b).ceil();
    let y1 = (max_y + b).ceil();
    let (w, hgt) = img.dimensions();
    if x0 < 0.0 || y0 < 0.0 || x1 > w as f64 || y1 > hgt as f64 || x1 <= x0 || y1 <= y0 {
        return Err(Error::invalid(format!(
            "crop [{x0}, {y0}]..[{x1}, {y1}] exceeds {w}x{hgt} image"
        )));
    }
    let (cx, cy, cw, ch) = (x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32);
    let cropped = image::imageops::crop_imm(img, cx, cy, cw, ch).to_image();
    let resized = resize_rgb_bilinear(&cropped, out.0, out.1);

    // half-pixel-center convention matching resize_rgb_bilinear
    let sx = out.0 as f64 / cw as f64;
    let sy = out.1 as f64 / ch as f64;
    let adjust = Homography::scale_translation(
        sx,
        sy,
        sx * (0.5 - cx as f64) - 0.5,
        sy * (0.5 - cy as f64) - 0.5,
    )?;
    Ok(CropResult {
        image: resized,
        homography: h.then(&adjust)?,
        crop: (cx, cy, cw, ch),
    })
}
