//! Planar registration between the sensor grid and camera pixels.

mod calib;
mod crop;
mod homography;
mod warp;

pub use calib::{
    format_homography, parse_calibration, read_calibration, write_homography, Calibration,
};
pub use crop::{crop_and_resize, CropResult, SensorPolygon, DEFAULT_BORDER_PX, DEFAULT_INPUT_DIMS};
pub use homography::{fit_homography, Correspondence, Homography};
pub use warp::{resize_rgb_bilinear, sample_bilinear_zero, warp_pressure, warp_values};
