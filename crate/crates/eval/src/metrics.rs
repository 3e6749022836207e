//! Dense contact and pressure metrics.
//!
//! Every metric is pooled over frames: numerators and denominators are summed
//! across the whole set before dividing, so a frame with no contact never
//! contributes an undefined 0/0 term. A ratio whose pooled denominator is zero
//! is `None`.

use pressure_core::{contact_map, ContactMap, PressureImage};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Running sums behind all four metrics. Accumulators merge associatively, so
/// frames may be evaluated in any order or in parallel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameMetricAccumulator {
    /// Σ min(P, P̂), kPa.
    pub sum_min: f64,
    /// Σ max(P, P̂), kPa.
    pub sum_max: f64,
    pub intersection: u64,
    pub union: u64,
    pub correct_frames: u64,
    pub frames: u64,
    /// Σ |P − P̂|, kPa.
    pub abs_error: f64,
    pub pixels: u64,
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(EvalError::invalid(format!(
            "estimate is {}x{} but ground truth is {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

impl FrameMetricAccumulator {
    /// Sums for one frame, with contact taken as pressure above `threshold_kpa`.
    pub fn from_frame(est: &PressureImage, gt: &PressureImage, threshold_kpa: f64) -> Result<Self> {
        let mut acc = Self::default();
        acc.add_frame(est, gt, threshold_kpa)?;
        Ok(acc)
    }

    pub fn add_frame(
        &mut self,
        est: &PressureImage,
        gt: &PressureImage,
        threshold_kpa: f64,
    ) -> Result<()> {
        check_dims(est.dims(), gt.dims())?;
        let ce = contact_map(est, threshold_kpa)?;
        let cg = contact_map(gt, threshold_kpa)?;
        self.add_contact(&ce, &cg)?;
        self.add_pressure(est, gt)
    }

    /// Contact sums only: IoU counts and the temporal agreement of the frame.
    pub fn add_contact(&mut self, est: &ContactMap, gt: &ContactMap) -> Result<()> {
        check_dims(est.dims(), gt.dims())?;
        for (&e, &g) in est.values().iter().zip(gt.values()) {
            self.intersection += (e && g) as u64;
            self.union += (e || g) as u64;
        }
        self.frames += 1;
        self.correct_frames += (est.any() == gt.any()) as u64;
        Ok(())
    }

    /// Pressure sums only: volumetric min/max and absolute error.
    pub fn add_pressure(&mut self, est: &PressureImage, gt: &PressureImage) -> Result<()> {
        check_dims(est.dims(), gt.dims())?;
        let (mut lo, mut hi, mut err) = (0.0f64, 0.0f64, 0.0f64);
        for (&e, &g) in est.values().iter().zip(gt.values()) {
            let (e, g) = (e as f64, g as f64);
            lo += e.min(g);
            hi += e.max(g);
            err += (e - g).abs();
        }
        self.sum_min += lo;
        self.sum_max += hi;
        self.abs_error += err;
        self.pixels += est.values().len() as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        self.sum_min += other.sum_min;
        self.sum_max += other.sum_max;
        self.intersection += other.intersection;
        self.union += other.union;
        self.correct_frames += other.correct_frames;
        self.frames += other.frames;
        self.abs_error += other.abs_error;
        self.pixels += other.pixels;
    }

    pub fn temporal_accuracy(&self) -> Option<f64> {
        (self.frames > 0).then(|| self.correct_frames as f64 / self.frames as f64)
    }

    pub fn contact_iou(&self) -> Option<f64> {
        (self.union > 0).then(|| self.intersection as f64 / self.union as f64)
    }

    pub fn volumetric_iou(&self) -> Option<f64> {
        (self.sum_max > 0.0).then(|| self.sum_min / self.sum_max)
    }

    /// Mean absolute error in Pa.
    pub fn mae_pa(&self) -> Option<f64> {
        (self.pixels > 0).then(|| self.abs_error * 1000.0 / self.pixels as f64)
    }
}

fn check_pair_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(EvalError::invalid(format!(
            "{a} estimated frames but {b} ground-truth frames"
        )));
    }
    if a == 0 {
        return Err(EvalError::invalid("no frames"));
    }
    Ok(())
}

/// Fraction of frames where the presence of any contact agrees.
pub fn temporal_accuracy(est: &[ContactMap], gt: &[ContactMap]) -> Result<f64> {
    check_pair_lengths(est.len(), gt.len())?;
    let mut acc = FrameMetricAccumulator::default();
    for (e, g) in est.iter().zip(gt) {
        acc.add_contact(e, g)?;
    }
    Ok(acc.temporal_accuracy().unwrap_or(0.0))
}

/// Pooled intersection over union of contact pixels; `None` when the union
/// is empty over every frame.
pub fn contact_iou(est: &[ContactMap], gt: &[ContactMap]) -> Result<Option<f64>> {
    check_pair_lengths(est.len(), gt.len())?;
    let mut acc = FrameMetricAccumulator::default();
    for (e, g) in est.iter().zip(gt) {
        acc.add_contact(e, g)?;
    }
    Ok(acc.contact_iou())
}

/// Σ min(P, P̂) / Σ max(P, P̂) pooled over frames; `None` when both sides are
/// zero everywhere.
pub fn volumetric_iou(est: &[PressureImage], gt: &[PressureImage]) -> Result<Option<f64>> {
    check_pair_lengths(est.len(), gt.len())?;
    let mut acc = FrameMetricAccumulator::default();
    for (e, g) in est.iter().zip(gt) {
        acc.add_pressure(e, g)?;
    }
    Ok(acc.volumetric_iou())
}

/// Mean absolute error in Pa over every pixel of every frame, zeros included.
pub fn mae(est: &[PressureImage], gt: &[PressureImage]) -> Result<f64> {
    check_pair_lengths(est.len(), gt.len())?;
    let mut acc = FrameMetricAccumulator::default();
    for (e, g) in est.iter().zip(gt) {
        acc.add_pressure(e, g)?;
    }
    Ok(acc.mae_pa().unwrap_or(0.0))
}
