//! Occlusion sensitivity: how much the predicted pressure changes when one
//! grid cell of the input is flattened to its mean color.

use std::path::Path;

use image::{ImageBuffer, Luma};
use pressure_core::{pvp1, PressureImage, PressurePredictor, Rgb, RgbImage, Space};

use crate::error::{EvalError, Result};

pub const DEFAULT_GRID: usize = 48;

/// Pixel rectangle `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl CellRect {
    /// Whether the cell shares a pixel with an inclusive bounding box
    /// `(x0, y0, x1, y1)`.
    pub fn overlaps(&self, bbox: (usize, usize, usize, usize)) -> bool {
        let (x0, y0, x1, y1) = bbox;
        (self.x as usize) <= x1
            && x0 < (self.x + self.w) as usize
            && (self.y as usize) <= y1
            && y0 < (self.y + self.h) as usize
    }
}

/// Splits `width x height` into `grid x grid` cells, row-major. Cell edges
/// sit at `floor(k * size / grid)`, so every cell is non-empty and cells
/// differ in size by at most one pixel.
pub fn cell_rects(width: u32, height: u32, grid: usize) -> Result<Vec<CellRect>> {
    if grid < 1 {
        return Err(EvalError::invalid("grid must be at least 1"));
    }
    if grid > width as usize || grid > height as usize {
        return Err(EvalError::invalid(format!(
            "grid {grid} is finer than the {width}x{height} image"
        )));
    }
    let edge = |k: usize, size: u32| (k as u64 * size as u64 / grid as u64) as u32;
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let (y0, y1) = (edge(i, height), edge(i + 1, height));
        for j in 0..grid {
            let (x0, x1) = (edge(j, width), edge(j + 1, width));
            out.push(CellRect {
                x: x0,
                y: y0,
                w: x1 - x0,
                h: y1 - y0,
            });
        }
    }
    Ok(out)
}

/// Fills `rect` with its per-channel mean color, rounded half to even.
pub fn mean_color_replace(img: &RgbImage, rect: CellRect) -> Result<RgbImage> {
    if rect.w == 0 || rect.h == 0 {
        return Err(EvalError::invalid("empty rectangle"));
    }
    let (w, h) = img.dimensions();
    if rect.x + rect.w > w || rect.y + rect.h > h {
        return Err(EvalError::invalid(format!(
            "rectangle {rect:?} exceeds {w}x{h} image"
        )));
    }
    let mut sum = [0u64; 3];
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            let p = img.get_pixel(x, y);
            for c in 0..3 {
                sum[c] += p[c] as u64;
            }
        }
    }
    let n = (rect.w * rect.h) as f64;
    let mean = sum.map(|s| (s as f64 / n).round_ties_even() as u8);
    let mut out = img.clone();
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            out.put_pixel(x, y, Rgb(mean));
        }
    }
    Ok(out)
}

/// Row-major `grid x grid` sensitivity values.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap {
    pub grid: usize,
    pub values: Vec<f64>,
    /// `true` once min-max normalized; an identically zero map stays raw.
    pub normalized: bool,
    pub cells: Vec<CellRect>,
}

impl SensitivityMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid + col]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Index of the first maximal cell in row-major order.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax_cell(&self) -> CellRect {
        self.cells[self.argmax()]
    }

    /// The grid as a camera-space image, one pixel per cell.
    pub fn to_pressure_image(&self) -> Result<PressureImage> {
        let v = self.values.iter().map(|&x| x as f32).collect();
        Ok(PressureImage::new(self.grid, self.grid, Space::Camera, None, v)?)
    }

    /// Value of the cell containing each image pixel.
    pub fn per_pixel(&self, width: u32, height: u32) -> Vec<f32> {
        let mut out = vec![0.0f32; (width * height) as usize];
        for (c, &v) in self.cells.iter().zip(&self.values) {
            for y in c.y..(c.y + c.h).min(height) {
                for x in c.x..(c.x + c.w).min(width) {
                    out[(y * width + x) as usize] = v as f32;
                }
            }
        }
        out
    }

    /// 16-bit grayscale, full scale at 1.0.
    pub fn to_png16(&self) -> ImageBuffer<Luma<u16>, Vec<u16>> {
        let g = self.grid as u32;
        ImageBuffer::from_fn(g, g, |x, y| {
            let v = self.values[(y * g + x) as usize].clamp(0.0, 1.0);
            Luma([(v * 65535.0).round() as u16])
        })
    }

    /// Writes `<stem>.png` (16-bit) and `<stem>.pvp1` (raw grid).
    pub fn export(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
        let png = dir.join(format!("{stem}.png"));
        self.to_png16()
            .save_with_format(&png, image::ImageFormat::Png)
            .map_err(|e| EvalError::Format {
                path: png.clone(),
                message: e.to_string(),
            })?;
        let raw = dir.join(format!("{stem}.pvp1"));
        pvp1::write(&raw, &self.to_pressure_image()?)?;
        Ok(vec![png, raw])
    }
}

fn l2_distance(a: &PressureImage, b: &PressureImage) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(EvalError::invalid("prediction changed size under perturbation"));
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Runs `grid² + 1` predictions: the original image, then one per occluded
/// cell. Each cell scores the L2 norm of the predicted pressure change
/// (kPa); the map is then min-max normalized unless identically zero.
pub fn occlusion_sensitivity<P: PressurePredictor + ?Sized>(
    predictor: &P,
    img: &RgbImage,
    grid: usize,
) -> Result<SensitivityMap> {
    let cells = cell_rects(img.width(), img.height(), grid)?;
    let base = predictor.predict(img)?;
    let mut values = Vec::with_capacity(cells.len());
    for chunk in cells.chunks(16) {
        let batch: Vec<RgbImage> = chunk
            .iter()
            .map(|c| mean_color_replace(img, *c))
            .collect::<Result<_>>()?;
        for p in predictor.predict_batch(&batch)? {
            values.push(l2_distance(&p, &base)?);
        }
    }
    Ok(normalize(grid, values, cells))
}

fn normalize(grid: usize, mut values: Vec<f64>, cells: Vec<CellRect>) -> SensitivityMap {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return SensitivityMap {
            grid,
            values,
            normalized: false,
            cells,
        };
    }
    let span = if max > min { max - min } else { max };
    let lo = if max > min { min } else { 0.0 };
    for v in values.iter_mut() {
        *v = (*v - lo) / span;
    }
    SensitivityMap {
        grid,
        values,
        normalized: true,
        cells,
    }
}
