//! Temporal alignment of the camera and pressure streams.

use pressure_core::geometry::{warp_pressure, Homography};
use pressure_core::{FrameMeta, PressureImage, RgbImage};

use crate::error::{DataError, Result};
use crate::sample::FrameSample;

/// Native camera frame rate of the capture rig, Hz.
pub const CAMERA_RATE_HZ: f64 = 60.0;
/// Approximate pressure sensor rate, Hz.
pub const PRESSURE_RATE_HZ: f64 = 115.0;
/// Rate all experiments are subsampled to, Hz.
pub const SUBSAMPLE_RATE_HZ: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub frame: usize,
    pub pressure: usize,
    pub frame_time: f64,
    pub pressure_time: f64,
}

impl Pairing {
    pub fn skew(&self) -> f64 {
        (self.frame_time - self.pressure_time).abs()
    }
}

fn nearest(times: &[f64], t: f64) -> usize {
    let i = times.partition_point(|&x| x < t);
    if i == 0 {
        0
    } else if i == times.len() {
        times.len() - 1
    } else if t - times[i - 1] <= times[i] - t {
        i - 1
    } else {
        i
    }
}

fn check_sorted(name: &str, t: &[f64]) -> Result<()> {
    if t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[1] < w[0]) {
        return Err(DataError::InvalidArgument(format!(
            "{name} timestamps must be finite and ascending"
        )));
    }
    Ok(())
}

/// Picks camera frames at `rate_hz` over the overlap of both streams and
/// pairs each with the nearest-in-time pressure frame. Returns an empty list
/// (and logs a warning) when the streams do not overlap.
pub fn synchronize_and_subsample(
    pressure_times: &[f64],
    frame_times: &[f64],
    rate_hz: f64,
) -> Result<Vec<Pairing>> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(DataError::InvalidArgument(format!("rate {rate_hz} must be positive")));
    }
    check_sorted("pressure", pressure_times)?;
    check_sorted("frame", frame_times)?;
    let (Some(&p0), Some(&p1), Some(&f0), Some(&f1)) = (
        pressure_times.first(),
        pressure_times.last(),
        frame_times.first(),
        frame_times.last(),
    ) else {
        log::warn!("synchronize: a stream is empty");
        return Ok(Vec::new());
    };
    let lo = p0.max(f0);
    let hi = p1.min(f1);
    if lo > hi {
        log::warn!("synchronize: streams do not overlap ([{p0}, {p1}] vs [{f0}, {f1}])");
        return Ok(Vec::new());
    }

    let mut out: Vec<Pairing> = Vec::new();
    let mut k = 0usize;
    loop {
        let t = lo + k as f64 / rate_hz;
        if k > 0 && t >= hi - 1e-9 {
            break;
        }
        k += 1;
        let fi = nearest(frame_times, t);
        if out.last().is_some_and(|p| p.frame == fi) {
            continue;
        }
        let ft = frame_times[fi];
        let pi = nearest(pressure_times, ft);
        out.push(Pairing {
            frame: fi,
            pressure: pi,
            frame_time: ft,
            pressure_time: pressure_times[pi],
        });
    }
    Ok(out)
}

/// Builds registered samples from raw timestamped streams of one camera.
pub fn pair_streams(
    pressure: &[(f64, PressureImage)],
    frames: &[(f64, RgbImage)],
    homography: &Homography,
    meta: &FrameMeta,
    rate_hz: f64,
) -> Result<Vec<FrameSample>> {
    let pt: Vec<f64> = pressure.iter().map(|(t, _)| *t).collect();
    let ft: Vec<f64> = frames.iter().map(|(t, _)| *t).collect();
    synchronize_and_subsample(&pt, &ft, rate_hz)?
        .into_iter()
        .map(|p| {
            let rgb = frames[p.frame].1.clone();
            let sensor = pressure[p.pressure].1.clone();
            let (w, h) = rgb.dimensions();
            let gt = warp_pressure(&sensor, homography, w as usize, h as usize)?;
            let meta = FrameMeta {
                timestamp: p.frame_time.max(0.0),
                ..meta.clone()
            };
            FrameSample::new(rgb, gt, Some(sensor), *homography, meta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(rate: f64, t0: f64, t1: f64) -> Vec<f64> {
        let n = ((t1 - t0) * rate).round() as usize;
        (0..=n).map(|i| t0 + i as f64 / rate).collect()
    }

    #[test]
    fn fifteen_hz_over_one_second() {
        let frames = stream(CAMERA_RATE_HZ, 0.0, 1.0);
        let pressure = stream(PRESSURE_RATE_HZ, 0.0, 1.0);
        let pairs = synchronize_and_subsample(&pressure, &frames, SUBSAMPLE_RATE_HZ).unwrap();
        assert_eq!(pairs.len(), 15);
        assert!(pairs.windows(2).all(|w| w[1].frame_time > w[0].frame_time));
    }

    #[test]
    fn skew_is_bounded_by_half_pressure_period() {
        let frames = stream(CAMERA_RATE_HZ, 0.0, 2.0);
        let pressure: Vec<f64> = stream(PRESSURE_RATE_HZ, 0.0, 2.1)
            .into_iter()
            .map(|t| t + 0.004)
            .collect();
        let pairs = synchronize_and_subsample(&pressure, &frames, SUBSAMPLE_RATE_HZ).unwrap();
        assert!(!pairs.is_empty());
        for p in &pairs {
            assert!(p.skew() <= 0.0044, "skew {}", p.skew());
            assert!(p.skew() <= 0.5 / PRESSURE_RATE_HZ + 1e-12);
        }
    }

    #[test]
    fn single_identical_frame() {
        let pairs = synchronize_and_subsample(&[0.5], &[0.5], 15.0).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].skew(), 0.0);
    }

    #[test]
    fn disjoint_streams_are_empty() {
        let pairs = synchronize_and_subsample(&[0.0, 0.1], &[5.0, 5.1], 15.0).unwrap();
        assert!(pairs.is_empty());
        assert!(synchronize_and_subsample(&[], &[0.0], 15.0).unwrap().is_empty());
    }

    #[test]
    fn invalid_inputs() {
        assert!(synchronize_and_subsample(&[0.0], &[0.0], 0.0).is_err());
        assert!(synchronize_and_subsample(&[0.2, 0.1], &[0.0], 15.0).is_err());
    }
}
