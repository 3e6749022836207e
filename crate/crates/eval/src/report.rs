//! Dataset-level aggregation, per-group breakdowns and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pressure_core::geometry::warp_values;
use pressure_core::{
    total_force, FrameMeta, PressureImage, PressurePredictor, RgbImage, Space,
    DEFAULT_CONTACT_THRESHOLD_KPA,
};
use pressure_data::FrameSample;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metrics::FrameMetricAccumulator;

/// Metadata fields broken out in every report.
pub const DEFAULT_GROUP_KEYS: [&str; 2] = ["action", "force_level"];

/// Per-frame sums plus what the frame is grouped by.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub sums: FrameMetricAccumulator,
    pub meta: FrameMeta,
    /// Newtons, when the frame has a sensor-space ground truth.
    pub gt_force_n: Option<f64>,
    pub est_force_n: Option<f64>,
}

impl FrameRecord {
    pub fn new(sums: FrameMetricAccumulator, meta: FrameMeta) -> Self {
        Self {
            sums,
            meta,
            gt_force_n: None,
            est_force_n: None,
        }
    }

    /// Scores one prediction against a sample, including the force of both
    /// sides when the sample carries its sensor-space frame.
    pub fn score(est: &PressureImage, sample: &FrameSample, threshold_kpa: f64) -> Result<Self> {
        let sums = FrameMetricAccumulator::from_frame(est, &sample.pressure_gt, threshold_kpa)?;
        let mut rec = FrameRecord::new(sums, sample.meta.clone());
        if let Some(sensor) = &sample.pressure_sensor {
            rec.gt_force_n = Some(total_force(sensor)?);
            let (w, h) = sensor.dims();
            let back = warp_values(est, &sample.homography, w, h, Space::Sensor)?
                .with_pixel_pitch(sensor.pixel_pitch())?;
            rec.est_force_n = Some(total_force(&back)?);
        }
        Ok(rec)
    }
}

/// Metrics of one set of frames. `None` marks an undefined (0/0) value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub frames: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temporal_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volumetric_iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_gt_force_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_est_force_n: Option<f64>,
    pub sums: FrameMetricAccumulator,
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v.flatten() {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

impl GroupMetrics {
    fn from_records<'a>(records: impl Iterator<Item = &'a FrameRecord> + Clone) -> Self {
        let mut sums = FrameMetricAccumulator::default();
        for r in records.clone() {
            sums.merge(&r.sums);
        }
        Self {
            frames: records.clone().count(),
            temporal_accuracy: sums.temporal_accuracy(),
            contact_iou: sums.contact_iou(),
            volumetric_iou: sums.volumetric_iou(),
            mae_pa: sums.mae_pa(),
            mean_gt_force_n: mean(records.clone().map(|r| r.gt_force_n)),
            mean_est_force_n: mean(records.map(|r| r.est_force_n)),
            sums,
        }
    }

    /// `(name, value)` for every defined metric, in report order.
    pub fn defined(&self) -> Vec<(&'static str, f64)> {
        [
            ("temporal_accuracy", self.temporal_accuracy),
            ("contact_iou", self.contact_iou),
            ("volumetric_iou", self.volumetric_iou),
            ("mae_pa", self.mae_pa),
            ("mean_gt_force_n", self.mean_gt_force_n),
            ("mean_est_force_n", self.mean_est_force_n),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: usize,
    pub overall: GroupMetrics,
    /// metadata key → value → metrics of frames with that value.
    pub groups: BTreeMap<String, BTreeMap<String, GroupMetrics>>,
}

/// Pools per-frame sums overall and per value of each metadata key.
pub fn aggregate(records: &[FrameRecord], keys: &[&str]) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(EvalError::invalid("cannot aggregate zero frames"));
    }
    let mut groups = BTreeMap::new();
    for &key in keys {
        let mut by_value: BTreeMap<String, Vec<&FrameRecord>> = BTreeMap::new();
        for r in records {
            let v = r
                .meta
                .field(key)
                .ok_or_else(|| EvalError::invalid(format!("unknown metadata key {key:?}")))?;
            by_value.entry(v.to_string()).or_default().push(r);
        }
        let rows = by_value
            .into_iter()
            .map(|(v, rs)| (v, GroupMetrics::from_records(rs.iter().copied())))
            .collect();
        groups.insert(key.to_string(), rows);
    }
    Ok(MetricsReport {
        frames: records.len(),
        overall: GroupMetrics::from_records(records.iter()),
        groups,
    })
}

impl MetricsReport {
    /// One `metric<TAB>group<TAB>value<TAB>frames` line per defined value.
    /// The overall rows use the group name `all`; group rows are `key=value`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tgroup\tvalue\tframes\n");
        let mut emit = |group: &str, m: &GroupMetrics| {
            for (name, v) in m.defined() {
                let _ = writeln!(out, "{name}\t{group}\t{v}\t{}", m.frames);
            }
        };
        emit("all", &self.overall);
        for (key, rows) in &self.groups {
            for (value, m) in rows {
                emit(&format!("{key}={value}"), m);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| EvalError::invalid(format!("bad report: {e}")))
    }

    /// Writes `metrics.tsv` and `metrics.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
        let tsv = dir.join("metrics.tsv");
        std::fs::write(&tsv, self.to_tsv()).map_err(|e| EvalError::io(&tsv, e))?;
        let json = dir.join("metrics.json");
        std::fs::write(&json, self.to_json()).map_err(|e| EvalError::io(&json, e))?;
        Ok(vec![tsv, json])
    }
}

/// The trivial baseline: zero pressure everywhere.
pub fn zero_guesser(img: &RgbImage) -> PressureImage {
    PressureImage::zeros(img.width() as usize, img.height() as usize, Space::Camera)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGuesser;

impl PressurePredictor for ZeroGuesser {
    fn predict(&self, img: &RgbImage) -> pressure_core::Result<PressureImage> {
        Ok(zero_guesser(img))
    }
}

/// Runs `predictor` over every sample and aggregates the default groups.
pub fn evaluate_predictor<P: PressurePredictor + ?Sized>(
    predictor: &P,
    samples: &[FrameSample],
) -> Result<MetricsReport> {
    evaluate_with(predictor, samples, DEFAULT_CONTACT_THRESHOLD_KPA, &DEFAULT_GROUP_KEYS)
}

pub fn evaluate_with<P: PressurePredictor + ?Sized>(
    predictor: &P,
    samples: &[FrameSample],
    threshold_kpa: f64,
    keys: &[&str],
) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(EvalError::invalid("dataset is empty"));
    }
    let mut records = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(16) {
        let imgs: Vec<RgbImage> = chunk.iter().map(|s| s.rgb.clone()).collect();
        let preds = predictor.predict_batch(&imgs)?;
        for (est, s) in preds.iter().zip(chunk) {
            records.push(FrameRecord::score(est, s, threshold_kpa)?);
        }
    }
    aggregate(&records, keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pressure_core::ForceLevel;

    fn record(action: &str, force: ForceLevel, est: &[f32], gt: &[f32]) -> FrameRecord {
        let e = PressureImage::new(est.len(), 1, Space::Camera, None, est.to_vec()).unwrap();
        let g = PressureImage::new(gt.len(), 1, Space::Camera, None, gt.to_vec()).unwrap();
        let meta = FrameMeta {
            action: action.into(),
            force_level: force,
            ..FrameMeta::default()
        };
        FrameRecord::new(FrameMetricAccumulator::from_frame(&e, &g, 1.0).unwrap(), meta)
    }

    #[test]
    fn single_frame_overall_matches_frame() {
        let r = record("press", ForceLevel::High, &[2.0, 0.0], &[1.0, 3.0]);
        let rep = aggregate(std::slice::from_ref(&r), &DEFAULT_GROUP_KEYS).unwrap();
        assert_eq!(rep.overall.contact_iou, r.sums.contact_iou());
        assert_eq!(rep.overall.volumetric_iou, r.sums.volumetric_iou());
        assert_eq!(rep.overall.mae_pa, r.sums.mae_pa());
        assert_eq!(rep.groups["action"]["press"].frames, 1);
    }

    #[test]
    fn group_frames_sum_to_total() {
        let rs = vec![
            record("press", ForceLevel::High, &[2.0, 0.0], &[1.5, 3.0]),
            record("hover", ForceLevel::None, &[0.0, 0.0], &[0.0, 0.0]),
            record("press", ForceLevel::Low, &[0.0, 1.2], &[0.0, 1.1]),
        ];
        let rep = aggregate(&rs, &DEFAULT_GROUP_KEYS).unwrap();
        for rows in rep.groups.values() {
            assert_eq!(rows.values().map(|m| m.frames).sum::<usize>(), rep.frames);
        }
        // all-zero hover frame leaves IoU undefined for its group
        let hover = &rep.groups["action"]["hover"];
        assert_eq!(hover.contact_iou, None);
        assert_eq!(hover.temporal_accuracy, Some(1.0));
        let tsv = rep.to_tsv();
        assert!(!tsv.contains("contact_iou\taction=hover"));
        assert!(tsv.contains("temporal_accuracy\taction=hover\t1\t1"));
        assert_eq!(MetricsReport::from_json(&rep.to_json()).unwrap(), rep);
    }

    #[test]
    fn empty_and_unknown_key_rejected() {
        assert!(aggregate(&[], &DEFAULT_GROUP_KEYS).is_err());
        let r = record("a", ForceLevel::None, &[0.0], &[0.0]);
        assert!(aggregate(&[r], &["colour"]).is_err());
    }

    #[test]
    fn zero_guesser_matches_dims() {
        let img = RgbImage::new(7, 5);
        let z = zero_guesser(&img);
        assert_eq!(z.dims(), (7, 5));
        assert_eq!(z.max_value(), 0.0);
    }
}
