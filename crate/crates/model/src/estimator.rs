use pressure_core::{dequantize, PressureBinning, PressureImage, PressurePredictor, RgbImage};

use crate::checkpoint::Checkpoint;
use crate::error::{ModelError, Result};
use crate::net::{argmax_labels, PressureNet};

/// Images per forward pass in batched prediction.
pub const PREDICT_CHUNK: usize = 8;

/// Argmax-bin pressure for one image.
pub fn predict_pressure(net: &PressureNet<f32>, img: &RgbImage, binning: &PressureBinning) -> Result<PressureImage> {
    PressureEstimator::new(net.clone(), binning.clone())?.predict_one(img)
}

/// A single-frame network paired with its binning, usable wherever a
/// [`PressurePredictor`] is expected.
#[derive(Debug, Clone)]
pub struct PressureEstimator {
    net: PressureNet<f32>,
    binning: PressureBinning,
}

impl PressureEstimator {
    pub fn new(net: PressureNet<f32>, binning: PressureBinning) -> Result<Self> {
        if net.config().n_bins != binning.n_bins() {
            return Err(ModelError::invalid(format!(
                "model predicts {} bins but binning has {}",
                net.config().n_bins,
                binning.n_bins()
            )));
        }
        if net.config().frames != 1 {
            return Err(ModelError::invalid("estimator needs a single-frame model"));
        }
        Ok(Self { net, binning })
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        Self::new(c.net, c.binning)
    }

    pub fn net(&self) -> &PressureNet<f32> {
        &self.net
    }

    pub fn binning(&self) -> &PressureBinning {
        &self.binning
    }

    fn predict_one(&self, img: &RgbImage) -> Result<PressureImage> {
        Ok(self.predict_many(std::slice::from_ref(img))?.remove(0))
    }

    fn predict_many(&self, imgs: &[RgbImage]) -> Result<Vec<PressureImage>> {
        let mut out = Vec::with_capacity(imgs.len());
        for chunk in imgs.chunks(PREDICT_CHUNK) {
            let logits = self.net.forward_images(chunk)?;
            for labels in argmax_labels(&logits) {
                out.push(dequantize(&labels, &self.binning)?);
            }
        }
        Ok(out)
    }
}

impl PressurePredictor for PressureEstimator {
    fn predict(&self, img: &RgbImage) -> pressure_core::Result<PressureImage> {
        Ok(self.predict_one(img)?)
    }

    fn predict_batch(&self, imgs: &[RgbImage]) -> pressure_core::Result<Vec<PressureImage>> {
        if imgs.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.predict_many(imgs)?)
    }
}
