//! Reduced-quality variants of camera images. Output dimensions always match
//! the input so the network shape is unchanged.

use image::imageops::{self, FilterType};
use pressure_core::{Rgb, RgbImage};

use crate::error::{DataError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradeSpec {
    /// Downsample to `width x height`, then upsample back.
    Resolution { width: u32, height: u32 },
    /// Luminance copied to all three channels.
    Monochrome,
}

impl DegradeSpec {
    /// Resolution reduced by an integer factor per axis.
    pub fn reduced(native: (u32, u32), factor: u32) -> Result<Self> {
        if factor == 0 {
            return Err(DataError::InvalidArgument("reduction factor must be positive".into()));
        }
        Ok(DegradeSpec::Resolution {
            width: native.0 / factor,
            height: native.1 / factor,
        })
    }

    pub fn label(&self) -> String {
        match self {
            DegradeSpec::Resolution { width, height } => format!("RGB-{width}x{height}"),
            DegradeSpec::Monochrome => "Mono".into(),
        }
    }
}

pub fn degrade(img: &RgbImage, d: &DegradeSpec) -> Result<RgbImage> {
    match *d {
        DegradeSpec::Monochrome => Ok(RgbImage::from_fn(img.width(), img.height(), |x, y| {
            let p = img.get_pixel(x, y);
            let l = (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
                .round()
                .clamp(0.0, 255.0) as u8;
            Rgb([l, l, l])
        })),
        DegradeSpec::Resolution { width, height } => {
            if width == 0 || height == 0 {
                return Err(DataError::InvalidArgument(
                    "degraded resolution must be non-zero".into(),
                ));
            }
            let (w, h) = img.dimensions();
            if width > w || height > h {
                return Err(DataError::InvalidArgument(format!(
                    "target {width}x{height} exceeds native {w}x{h}"
                )));
            }
            if (width, height) == (w, h) {
                return Ok(img.clone());
            }
            let small = imageops::resize(img, width, height, FilterType::Triangle);
            Ok(imageops::resize(&small, w, h, FilterType::Triangle))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            Rgb([(x * 7 % 256) as u8, (y * 13 % 256) as u8, ((x + y) * 3 % 256) as u8])
        })
    }

    #[test]
    fn monochrome_channels_equal() {
        let out = degrade(&pattern(32, 24), &DegradeSpec::Monochrome).unwrap();
        assert!(out.pixels().all(|p| p[0] == p[1] && p[1] == p[2]));
    }

    #[test]
    fn native_resolution_is_identity() {
        let img = pattern(40, 30);
        let d = DegradeSpec::Resolution { width: 40, height: 30 };
        assert_eq!(degrade(&img, &d).unwrap(), img);
    }

    #[test]
    fn lowest_paper_resolution() {
        let img = pattern(480, 384);
        let d = DegradeSpec::reduced((480, 384), 32).unwrap();
        assert_eq!(d, DegradeSpec::Resolution { width: 15, height: 12 });
        assert_eq!(d.label(), "RGB-15x12");
        let out = degrade(&img, &d).unwrap();
        assert_eq!(out.dimensions(), (480, 384));
        assert_ne!(out, img);
    }

    #[test]
    fn invalid_targets() {
        let img = pattern(16, 16);
        assert!(degrade(&img, &DegradeSpec::Resolution { width: 0, height: 4 }).is_err());
        assert!(degrade(&img, &DegradeSpec::Resolution { width: 32, height: 4 }).is_err());
    }
}
