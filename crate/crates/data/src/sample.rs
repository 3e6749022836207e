use pressure_core::geometry::Homography;
use pressure_core::{FrameMeta, PressureImage, RgbImage};

use crate::error::{DataError, Result};

/// One registered, synchronized camera frame with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub rgb: RgbImage,
    /// Ground truth registered to `rgb` pixels.
    pub pressure_gt: PressureImage,
    /// The raw sensor-space frame `pressure_gt` was warped from, when known.
    pub pressure_sensor: Option<PressureImage>,
    /// Sensor grid to `rgb` pixels.
    pub homography: Homography,
    pub meta: FrameMeta,
}

impl FrameSample {
    pub fn new(
        rgb: RgbImage,
        pressure_gt: PressureImage,
        pressure_sensor: Option<PressureImage>,
        homography: Homography,
        meta: FrameMeta,
    ) -> Result<Self> {
        let (w, h) = rgb.dimensions();
        if pressure_gt.dims() != (w as usize, h as usize) {
            return Err(DataError::InvalidArgument(format!(
                "rgb is {}x{} but pressure is {}x{}",
                w,
                h,
                pressure_gt.width(),
                pressure_gt.height()
            )));
        }
        if !(meta.timestamp >= 0.0 && meta.timestamp.is_finite()) {
            return Err(DataError::InvalidArgument(format!(
                "timestamp {} must be non-negative",
                meta.timestamp
            )));
        }
        Ok(Self {
            rgb,
            pressure_gt,
            pressure_sensor,
            homography,
            meta,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pressure_gt.dims()
    }
}
