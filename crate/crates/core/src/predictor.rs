use image::RgbImage;

use crate::error::Result;
use crate::pressure::PressureImage;

/// Anything that turns a camera image into a camera-space pressure image.
pub trait PressurePredictor {
    fn predict(&self, img: &RgbImage) -> Result<PressureImage>;

    fn predict_batch(&self, imgs: &[RgbImage]) -> Result<Vec<PressureImage>> {
        imgs.iter().map(|i| self.predict(i)).collect()
    }
}

impl<T: PressurePredictor + ?Sized> PressurePredictor for &T {
    fn predict(&self, img: &RgbImage) -> Result<PressureImage> {
        (**self).predict(img)
    }

    fn predict_batch(&self, imgs: &[RgbImage]) -> Result<Vec<PressureImage>> {
        (**self).predict_batch(imgs)
    }
}
