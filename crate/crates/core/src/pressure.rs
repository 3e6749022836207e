//! Dense pressure images and the discrete images derived from them.

use crate::error::{Error, Result};

/// Sensor grid width of the reference pressure pad.
pub const SENSOR_WIDTH: usize = 185;
/// Sensor grid height of the reference pressure pad.
pub const SENSOR_HEIGHT: usize = 105;
/// Physical spacing between sensor cells, meters.
pub const SENSOR_PITCH_M: f64 = 1.25e-3;
/// Pressure above which a pixel counts as in contact, kPa.
pub const DEFAULT_CONTACT_THRESHOLD_KPA: f64 = 1.0;

/// Coordinate frame a pressure image lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Sensor,
    Camera,
}

/// Row-major grid of non-negative pressures in kPa.
///
/// `pixel_pitch` is the side length of one pixel on the surface in meters.
/// Sensor images carry it by default; camera images only carry one when an
/// area calibration is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureImage {
    width: usize,
    height: usize,
    space: Space,
    pixel_pitch: Option<f64>,
    values: Vec<f32>,
}

impl PressureImage {
    pub fn new(
        width: usize,
        height: usize,
        space: Space,
        pixel_pitch: Option<f64>,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "pressure buffer has {} values, expected {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "pressure at index {i} is {} (must be finite and non-negative)",
                values[i]
            )));
        }
        if let Some(p) = pixel_pitch {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("pixel pitch {p} must be positive")));
            }
        }
        Ok(Self {
            width,
            height,
            space,
            pixel_pitch,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize, space: Space) -> Self {
        let pixel_pitch = match space {
            Space::Sensor => Some(SENSOR_PITCH_M),
            Space::Camera => None,
        };
        Self {
            width,
            height,
            space,
            pixel_pitch,
            values: vec![0.0; width * height],
        }
    }

    /// Empty 185x105 sensor frame at the reference pitch.
    pub fn sensor_default() -> Self {
        Self::zeros(SENSOR_WIDTH, SENSOR_HEIGHT, Space::Sensor)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        space: Space,
        pixel_pitch: Option<f64>,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, space, pixel_pitch, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn pixel_pitch(&self) -> Option<f64> {
        self.pixel_pitch
    }

    pub fn with_pixel_pitch(mut self, pitch: Option<f64>) -> Result<Self> {
        if let Some(p) = pitch {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("pixel pitch {p} must be positive")));
            }
        }
        self.pixel_pitch = pitch;
        Ok(self)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }

    /// Per-pixel maximum with another image of the same dimensions.
    pub fn pointwise_max(&self, other: &PressureImage) -> Result<PressureImage> {
        if self.dims() != other.dims() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max(*b))
            .collect();
        Ok(PressureImage {
            values,
            ..self.clone()
        })
    }
}

/// Per-pixel pressure bin indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label buffer has {} values, expected {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> Option<u8> {
        self.labels.iter().copied().max()
    }
}

/// Binary in-contact mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactMap {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl ContactMap {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "contact buffer has {} values, expected {}x{}",
                values.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.values[y * self.width + x] = v;
    }

    pub fn any(&self) -> bool {
        self.values.iter().any(|&v| v)
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the true pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bbox = Some(match bbox {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bbox
    }
}

/// Marks pixels whose pressure is strictly greater than `threshold_kpa`.
pub fn contact_map(p: &PressureImage, threshold_kpa: f64) -> Result<ContactMap> {
    if !(threshold_kpa >= 0.0) {
        return Err(Error::invalid(format!(
            "contact threshold {threshold_kpa} must be non-negative"
        )));
    }
    let values = p
        .values()
        .iter()
        .map(|&v| v as f64 > threshold_kpa)
        .collect();
    Ok(ContactMap {
        width: p.width(),
        height: p.height(),
        values,
    })
}

/// Normal force in Newtons: sum of pressure (Pa) times pixel area.
pub fn total_force(p: &PressureImage) -> Result<f64> {
    let pitch = p.pixel_pitch().ok_or_else(|| {
        Error::invalid(match p.space() {
            Space::Camera => "camera-space pressure has no area calibration",
            Space::Sensor => "sensor-space pressure has no pixel pitch",
        })
    })?;
    Ok(p.sum() * 1000.0 * pitch * pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(w: usize, h: usize, v: f32) -> PressureImage {
        PressureImage::new(w, h, Space::Sensor, Some(SENSOR_PITCH_M), vec![v; w * h]).unwrap()
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(PressureImage::new(2, 1, Space::Sensor, None, vec![0.0, -1.0]).is_err());
        assert!(PressureImage::new(2, 1, Space::Sensor, None, vec![f32::NAN, 0.0]).is_err());
        assert!(PressureImage::new(2, 2, Space::Sensor, None, vec![0.0; 3]).is_err());
    }

    #[test]
    fn default_sensor_dims() {
        let p = PressureImage::sensor_default();
        assert_eq!(p.dims(), (185, 105));
        assert_eq!(p.pixel_pitch(), Some(1.25e-3));
    }

    #[test]
    fn contact_threshold_is_strict() {
        let p = PressureImage::new(3, 1, Space::Camera, None, vec![1.0, 1.001, 0.0]).unwrap();
        let c = contact_map(&p, DEFAULT_CONTACT_THRESHOLD_KPA).unwrap();
        assert_eq!(c.values(), &[false, true, false]);
        assert!(!contact_map(&uniform(4, 4, 0.0), 1.0).unwrap().any());
        assert!(contact_map(&p, -0.1).is_err());
    }

    #[test]
    fn contact_map_is_monotone_in_threshold() {
        let vals: Vec<f32> = (0..50).map(|i| (i as f32 * 0.37) % 5.0).collect();
        let p = PressureImage::new(10, 5, Space::Camera, None, vals).unwrap();
        let mut prev = contact_map(&p, 0.0).unwrap();
        for k in 1..60 {
            let c = contact_map(&p, k as f64 * 0.1).unwrap();
            for (a, b) in c.values().iter().zip(prev.values()) {
                assert!(!a | b);
            }
            prev = c;
        }
    }

    #[test]
    fn force_of_uniform_patch() {
        assert_eq!(total_force(&uniform(10, 10, 0.0)).unwrap(), 0.0);
        let f = total_force(&uniform(10, 10, 82.0)).unwrap();
        assert!((f - 12.8125).abs() < 1e-9, "{f}");
    }

    #[test]
    fn force_needs_area_calibration() {
        let cam = PressureImage::zeros(4, 4, Space::Camera);
        assert!(matches!(total_force(&cam), Err(Error::InvalidArgument(_))));
        let calibrated = cam.with_pixel_pitch(Some(2e-3)).unwrap();
        assert_eq!(total_force(&calibrated).unwrap(), 0.0);
    }

    #[test]
    fn force_is_additive_over_disjoint_sets() {
        let a: Vec<f32> = (0..24).map(|i| if i < 12 { i as f32 } else { 0.0 }).collect();
        let b: Vec<f32> = (0..24).map(|i| if i >= 12 { 2.5 * i as f32 } else { 0.0 }).collect();
        let ab: Vec<f32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let mk = |v: Vec<f32>| PressureImage::new(6, 4, Space::Sensor, Some(SENSOR_PITCH_M), v).unwrap();
        let (fa, fb, fab) = (
            total_force(&mk(a)).unwrap(),
            total_force(&mk(b)).unwrap(),
            total_force(&mk(ab)).unwrap(),
        );
        assert!((fa + fb - fab).abs() <= 1e-12 * fab);
    }

    #[test]
    fn bounding_box_of_contact() {
        let mut c = ContactMap::empty(5, 4);
        assert_eq!(c.bounding_box(), None);
        c.set(1, 2, true);
        c.set(3, 1, true);
        assert_eq!(c.bounding_box(), Some((1, 1, 3, 2)));
    }
}
