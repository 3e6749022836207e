//! Log-spaced pressure bins.
//!
//! Bin 0 holds "no pressure" (`[0, p_min)`). Bins `1..n` cover `[p_min, p_max]`
//! with geometrically spaced edges; the last bin also absorbs everything above
//! `p_max`. Each bin is represented by the geometric mean of its edges, except
//! bin 0 which is represented by zero.

use crate::error::{Error, Result};
use crate::pressure::{LabelImage, PressureImage};

/// Minimum effective pressure of the reference sensor, kPa.
pub const DEFAULT_P_MIN_KPA: f64 = 0.5;
/// 99th percentile pressure of the reference dataset, kPa.
pub const DEFAULT_P_MAX_KPA: f64 = 82.0;
pub const DEFAULT_N_BINS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct PressureBinning {
    p_min: f64,
    p_max: f64,
    edges: Vec<f64>,
    representatives: Vec<f64>,
}

impl Default for PressureBinning {
    fn default() -> Self {
        make_binning(DEFAULT_P_MIN_KPA, DEFAULT_P_MAX_KPA, DEFAULT_N_BINS)
            .expect("default binning parameters are valid")
    }
}

pub fn make_binning(p_min: f64, p_max: f64, n_bins: usize) -> Result<PressureBinning> {
    if !(p_min.is_finite() && p_max.is_finite() && p_min > 0.0 && p_min < p_max) {
        return Err(Error::invalid(format!(
            "binning needs 0 < p_min < p_max, got p_min={p_min}, p_max={p_max}"
        )));
    }
    if n_bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {n_bins}")));
    }
    if n_bins > u8::MAX as usize + 1 {
        return Err(Error::invalid(format!("{n_bins} bins do not fit in u8 labels")));
    }
    let steps = (n_bins - 1) as f64;
    let span = p_max / p_min;
    let mut edges = Vec::with_capacity(n_bins + 1);
    edges.push(0.0);
    for k in 0..n_bins {
        edges.push(if k == n_bins - 1 {
            p_max
        } else {
            p_min * span.powf(k as f64 / steps)
        });
    }
    let mut representatives = Vec::with_capacity(n_bins);
    representatives.push(0.0);
    for k in 1..n_bins {
        representatives.push((edges[k] * edges[k + 1]).sqrt());
    }
    Ok(PressureBinning {
        p_min,
        p_max,
        edges,
        representatives,
    })
}

impl PressureBinning {
    pub fn n_bins(&self) -> usize {
        self.representatives.len()
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// `n_bins + 1` ascending edges, starting at 0 and ending at `p_max`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    /// Constant ratio between consecutive log-spaced edges.
    pub fn edge_ratio(&self) -> f64 {
        (self.p_max / self.p_min).powf(1.0 / (self.n_bins() - 1) as f64)
    }

    /// Bin index of a single pressure value.
    #[inline]
    pub fn bin_of(&self, kpa: f64) -> usize {
        // number of edges <= kpa, minus the implicit zero edge
        let above = self.edges[1..self.n_bins()].partition_point(|&e| e <= kpa);
        above.min(self.n_bins() - 1)
    }

    pub fn representative(&self, label: u8) -> Result<f64> {
        self.representatives
            .get(label as usize)
            .copied()
            .ok_or_else(|| {
                Error::invalid(format!(
                    "label {label} out of range for {} bins",
                    self.n_bins()
                ))
            })
    }
}

pub fn quantize(p: &PressureImage, b: &PressureBinning) -> LabelImage {
    // PressureImage already guarantees finite, non-negative values.
    let labels = p.values().iter().map(|&v| b.bin_of(v as f64) as u8).collect();
    LabelImage::new(p.width(), p.height(), labels).expect("dims preserved")
}

/// Quantize raw values, validating them first.
pub fn quantize_values(values: &[f32], b: &PressureBinning) -> Result<Vec<u8>> {
    values
        .iter()
        .map(|&v| {
            if v.is_finite() && v >= 0.0 {
                Ok(b.bin_of(v as f64) as u8)
            } else {
                Err(Error::invalid(format!("cannot quantize pressure {v}")))
            }
        })
        .collect()
}

pub fn dequantize(l: &LabelImage, b: &PressureBinning) -> Result<PressureImage> {
    let values = l
        .labels()
        .iter()
        .map(|&k| b.representative(k).map(|v| v as f32))
        .collect::<Result<Vec<_>>>()?;
    PressureImage::new(
        l.width(),
        l.height(),
        crate::pressure::Space::Camera,
        None,
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::Space;

    #[test]
    fn paper_defaults() {
        let b = PressureBinning::default();
        assert_eq!(b.n_bins(), 9);
        assert_eq!(b.edges().len(), 10);
        assert_eq!(b.edges()[0], 0.0);
        assert_eq!(b.edges()[1], 0.5);
        assert_eq!(b.edges()[9], 82.0);
    }

    #[test]
    fn edges_follow_closed_form() {
        let b = make_binning(0.5, 82.0, 9).unwrap();
        // oracle: successive multiplication by the eighth root of the span
        let r = (82.0f64 / 0.5).powf(1.0 / 8.0);
        let mut e = 0.5;
        for k in 1..=9 {
            assert!((b.edges()[k] - e).abs() <= 1e-12 * e, "edge {k}");
            e *= r;
        }
        assert!((b.edges()[2] - 0.945_85).abs() < 1e-4);
        assert!((b.edges()[3] - 1.789_3).abs() < 1e-3);
        for k in 1..9 {
            let ratio = b.edges()[k + 1] / b.edges()[k];
            assert!((ratio - r).abs() <= 1e-9 * r);
        }
    }

    #[test]
    fn two_bin_degenerate_case() {
        let b = make_binning(1.0, 2.0, 2).unwrap();
        assert_eq!(b.edges(), &[0.0, 1.0, 2.0]);
        assert_eq!(b.representatives()[0], 0.0);
        assert!((b.representatives()[1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(make_binning(0.0, 82.0, 9).is_err());
        assert!(make_binning(-1.0, 82.0, 9).is_err());
        assert!(make_binning(5.0, 5.0, 9).is_err());
        assert!(make_binning(10.0, 5.0, 9).is_err());
        assert!(make_binning(0.5, 82.0, 1).is_err());
        assert!(make_binning(0.5, f64::NAN, 9).is_err());
    }

    #[test]
    fn quantize_edge_rules() {
        let b = PressureBinning::default();
        let p = PressureImage::new(
            5,
            1,
            Space::Camera,
            None,
            vec![0.0, 0.4999, 0.5, 82.0, 200.0],
        )
        .unwrap();
        let l = quantize(&p, &b);
        assert_eq!(l.labels(), &[0, 0, 1, 8, 8]);
    }

    #[test]
    fn quantize_values_rejects_bad_input() {
        let b = PressureBinning::default();
        assert!(quantize_values(&[1.0, -0.1], &b).is_err());
        assert!(quantize_values(&[f32::INFINITY], &b).is_err());
        assert_eq!(quantize_values(&[0.0, 1.0], &b).unwrap(), vec![0, 2]);
    }

    #[test]
    fn dequantize_maps_to_representatives() {
        let b = PressureBinning::default();
        let l = LabelImage::new(9, 1, (0..9).collect()).unwrap();
        let p = dequantize(&l, &b).unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        for k in 1..9 {
            let gm = (b.edges()[k] * b.edges()[k + 1]).sqrt();
            assert!((p.get(k, 0) as f64 - gm).abs() < 1e-5 * gm);
        }
        assert_eq!(quantize(&p, &b), l);
        let bad = LabelImage::new(1, 1, vec![9]).unwrap();
        assert!(matches!(dequantize(&bad, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn representative_lies_inside_its_bin() {
        for (lo, hi, n) in [(0.5, 82.0, 9), (1.0, 2.0, 2), (0.1, 1000.0, 20)] {
            let b = make_binning(lo, hi, n).unwrap();
            for k in 0..n {
                let r = b.representatives()[k];
                assert_eq!(b.bin_of(r), k);
            }
        }
    }
}
