//! Pressure images, log-spaced pressure bins, contact maps, force integration
//! and planar sensor-to-camera registration.
//!
//! Pressures are always kPa. Sensor-space images live on the pressure pad
//! grid (185x105 cells at 1.25 mm by default); camera-space images are
//! registered to camera pixels through a [`geometry::Homography`].

pub mod binning;
pub mod error;
pub mod geometry;
pub mod meta;
pub mod predictor;
pub mod pressure;
pub mod pvp1;

pub use binning::{dequantize, make_binning, quantize, PressureBinning};
pub use error::{Error, Result};
pub use image::{Rgb, RgbImage};
pub use meta::{ForceLevel, FrameMeta};
pub use predictor::PressurePredictor;
pub use pressure::{
    contact_map, total_force, ContactMap, LabelImage, PressureImage, Space,
    DEFAULT_CONTACT_THRESHOLD_KPA, SENSOR_PITCH_M,
};
