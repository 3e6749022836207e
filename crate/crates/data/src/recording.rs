//! On-disk recording layout.
//!
//! ```text
//! recording/
//!   index.tsv                   frame_index timestamp_s camera_id action force_level participant
//!   <camera_id>/<frame_index>.png
//!   pressure/<frame_index>.pvp1 sensor-space pressure
//!   calib/<camera_id>.txt       homography or correspondences
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pressure_core::geometry::{read_calibration, warp_pressure, write_homography, Homography};
use pressure_core::{pvp1, FrameMeta, Space};

use crate::error::{DataError, Result};
use crate::sample::FrameSample;

pub const INDEX_FILE: &str = "index.tsv";
pub const INDEX_COLUMNS: [&str; 6] = [
    "frame_index",
    "timestamp_s",
    "camera_id",
    "action",
    "force_level",
    "participant",
];

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub frame_index: String,
    pub meta: FrameMeta,
}

/// A recording directory with its parsed index and calibrations. Frames are
/// decoded lazily, in timestamp order.
#[derive(Debug, Clone)]
pub struct Recording {
    root: PathBuf,
    entries: Vec<IndexEntry>,
    calibrations: BTreeMap<String, Homography>,
}

pub fn load_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let root = path.as_ref().to_path_buf();
    let index_path = root.join(INDEX_FILE);
    let text = fs::read_to_string(&index_path).map_err(|e| DataError::load(&index_path, e))?;
    let mut entries = parse_index(&text).map_err(|m| DataError::load(&index_path, m))?;
    entries.sort_by(|a, b| a.meta.timestamp.total_cmp(&b.meta.timestamp));

    let mut calibrations = BTreeMap::new();
    for e in &entries {
        if calibrations.contains_key(&e.meta.camera) {
            continue;
        }
        let calib = root.join("calib").join(format!("{}.txt", e.meta.camera));
        if !calib.exists() {
            return Err(DataError::load(
                &calib,
                format!("calibration missing for camera {:?}", e.meta.camera),
            ));
        }
        let h = read_calibration(&calib).map_err(|err| DataError::load(&calib, err))?;
        calibrations.insert(e.meta.camera.clone(), h);
    }
    Ok(Recording {
        root,
        entries,
        calibrations,
    })
}

fn parse_index(text: &str) -> std::result::Result<Vec<IndexEntry>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols != INDEX_COLUMNS {
        return Err(format!("unexpected header {cols:?}"));
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != INDEX_COLUMNS.len() {
            return Err(format!("line {}: expected 6 columns, got {}", n + 1, f.len()));
        }
        let timestamp: f64 = f[1]
            .parse()
            .map_err(|_| format!("line {}: bad timestamp {:?}", n + 1, f[1]))?;
        if !(timestamp >= 0.0 && timestamp.is_finite()) {
            return Err(format!("line {}: negative timestamp", n + 1));
        }
        let force_level = f[4]
            .parse()
            .map_err(|e: pressure_core::Error| format!("line {}: {e}", n + 1))?;
        out.push(IndexEntry {
            frame_index: f[0].to_string(),
            meta: FrameMeta {
                action: f[3].to_string(),
                force_level,
                participant: f[5].to_string(),
                camera: f[2].to_string(),
                lighting: "0".to_string(),
                timestamp,
            },
        });
    }
    Ok(out)
}

impl Recording {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn homography(&self, camera: &str) -> Option<&Homography> {
        self.calibrations.get(camera)
    }

    pub fn load_frame(&self, i: usize) -> Result<FrameSample> {
        let e = self.entries.get(i).ok_or_else(|| {
            DataError::InvalidArgument(format!("frame {i} out of range ({} frames)", self.len()))
        })?;
        let png = self
            .root
            .join(&e.meta.camera)
            .join(format!("{}.png", e.frame_index));
        let rgb = image::open(&png)
            .map_err(|err| DataError::load(&png, err))?
            .to_rgb8();
        let pp = self.root.join("pressure").join(format!("{}.pvp1", e.frame_index));
        let sensor = pvp1::read(&pp).map_err(|err| DataError::load(&pp, err))?;
        if sensor.space() != Space::Sensor {
            return Err(DataError::load(&pp, "pressure frame is not in sensor space"));
        }
        let h = self.calibrations[&e.meta.camera];
        let (w, hgt) = rgb.dimensions();
        let gt = warp_pressure(&sensor, &h, w as usize, hgt as usize)
            .map_err(|err| DataError::load(&pp, err))?;
        FrameSample::new(rgb, gt, Some(sensor), h, e.meta.clone())
    }

    /// Frames in timestamp order.
    pub fn iter(&self) -> impl Iterator<Item = Result<FrameSample>> + '_ {
        (0..self.len()).map(move |i| self.load_frame(i))
    }

    pub fn load_all(&self) -> Result<Vec<FrameSample>> {
        self.iter().collect()
    }
}

/// Writes samples in the recording layout. Every sample needs its
/// sensor-space pressure, and all samples of one camera must share a
/// homography.
pub fn write_recording(dir: impl AsRef<Path>, samples: &[FrameSample]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::new();
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| DataError::io(p, e));
    mkdir(&dir.join("pressure"))?;
    mkdir(&dir.join("calib"))?;

    let mut cams: BTreeMap<&str, Homography> = BTreeMap::new();
    for s in samples {
        match cams.get(s.meta.camera.as_str()) {
            Some(h) if *h != s.homography => {
                return Err(DataError::InvalidArgument(format!(
                    "camera {:?} has inconsistent homographies",
                    s.meta.camera
                )))
            }
            Some(_) => {}
            None => {
                cams.insert(&s.meta.camera, s.homography);
            }
        }
    }
    for (cam, h) in &cams {
        mkdir(&dir.join(cam))?;
        let p = dir.join("calib").join(format!("{cam}.txt"));
        write_homography(&p, h)?;
        written.push(p);
    }

    let mut index = INDEX_COLUMNS.join("\t");
    index.push('\n');
    for (i, s) in samples.iter().enumerate() {
        let sensor = s.pressure_sensor.as_ref().ok_or_else(|| {
            DataError::InvalidArgument(format!("sample {i} has no sensor-space pressure"))
        })?;
        let frame = format!("{i:06}");
        let png = dir.join(&s.meta.camera).join(format!("{frame}.png"));
        s.rgb
            .save_with_format(&png, image::ImageFormat::Png)
            .map_err(|e| DataError::load(&png, e))?;
        let pp = dir.join("pressure").join(format!("{frame}.pvp1"));
        pvp1::write(&pp, sensor)?;
        index.push_str(&format!(
            "{frame}\t{:?}\t{}\t{}\t{}\t{}\n",
            s.meta.timestamp, s.meta.camera, s.meta.action, s.meta.force_level, s.meta.participant
        ));
        written.push(png);
        written.push(pp);
    }
    let ip = dir.join(INDEX_FILE);
    fs::write(&ip, index).map_err(|e| DataError::io(&ip, e))?;
    written.push(ip);
    Ok(written)
}
