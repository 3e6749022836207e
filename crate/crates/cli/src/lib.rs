//! Shared pieces of the `pressure` tool: pressure accumulation over a frame
//! stream, the display colormap, degraded-input evaluation and output
//! manifests.

use std::path::{Path, PathBuf};

use pressure_core::{PressureImage, PressurePredictor, Rgb, RgbImage};
use pressure_data::{degrade, DegradeSpec, FrameSample};
use pressure_eval::{evaluate_predictor, GroupMetrics};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pressure_core::Error),

    #[error(transparent)]
    Data(#[from] pressure_data::DataError),

    #[error(transparent)]
    Eval(#[from] pressure_eval::EvalError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Per-pixel running maximum of pressure over a frame stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationCanvas {
    canvas: Option<PressureImage>,
    frames: usize,
}

impl Default for AccumulationCanvas {
    fn default() -> Self {
        Self::new()
    }
}

impl AccumulationCanvas {
    pub fn new() -> Self {
        Self { canvas: None, frames: 0 }
    }

    pub fn add(&mut self, p: &PressureImage) -> Result<()> {
        let next = match &self.canvas {
            None => p.clone(),
            Some(c) if c.dims() != p.dims() => {
                return Err(CliError::InvalidArgument(format!(
                    "frame {} is {}x{} but the canvas is {}x{}",
                    self.frames,
                    p.width(),
                    p.height(),
                    c.width(),
                    c.height()
                )))
            }
            Some(c) => c.pointwise_max(p)?,
        };
        self.canvas = Some(next);
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// The accumulated pressure; `None` before the first frame.
    pub fn pressure(&self) -> Option<&PressureImage> {
        self.canvas.as_ref()
    }

    pub fn render(&self) -> Option<RgbImage> {
        self.canvas.as_ref().map(colorize)
    }
}

/// Accumulates the predictions for `frames`, in order.
pub fn accumulate_pressure<P: PressurePredictor + ?Sized>(
    frames: &[RgbImage],
    predictor: &P,
) -> Result<AccumulationCanvas> {
    if frames.is_empty() {
        return Err(CliError::InvalidArgument("no frames to accumulate".into()));
    }
    let dims = frames[0].dimensions();
    if let Some(i) = frames.iter().position(|f| f.dimensions() != dims) {
        return Err(CliError::InvalidArgument(format!("frame {i} changes the image size")));
    }
    let mut canvas = AccumulationCanvas::new();
    for chunk in frames.chunks(16) {
        for p in predictor.predict_batch(chunk)? {
            canvas.add(&p)?;
        }
    }
    Ok(canvas)
}

const PURPLE: [f64; 3] = [120.0, 28.0, 160.0];
const YELLOW: [f64; 3] = [252.0, 230.0, 40.0];

/// Black for no pressure, purple for light and yellow for heavy pressure,
/// on a log scale from 0.5 to 82 kPa.
pub fn pressure_color(kpa: f32) -> Rgb<u8> {
    if !(kpa > 0.0) {
        return Rgb([0, 0, 0]);
    }
    let t = ((kpa as f64 / 0.5).ln() / (82.0f64 / 0.5).ln()).clamp(0.0, 1.0);
    let s = 0.25 + 0.75 * t;
    let mix = |a: [f64; 3], b: [f64; 3], u: f64| {
        Rgb([0, 1, 2].map(|i| (a[i] + u * (b[i] - a[i])).round() as u8))
    };
    if s < 0.5 {
        mix([0.0; 3], PURPLE, s / 0.5)
    } else {
        mix(PURPLE, YELLOW, (s - 0.5) / 0.5)
    }
}

pub fn colorize(p: &PressureImage) -> RgbImage {
    RgbImage::from_fn(p.width() as u32, p.height() as u32, |x, y| {
        pressure_color(p.get(x as usize, y as usize))
    })
}

/// The conditions of the degraded-input study: native resolution, then
/// 1/4, 1/16 and 1/32 per axis, and monochrome.
pub fn degrade_conditions(native: (u32, u32)) -> Result<Vec<DegradeSpec>> {
    let mut out = Vec::new();
    for f in [1, 4, 16, 32] {
        out.push(DegradeSpec::reduced(native, f)?);
    }
    out.push(DegradeSpec::Monochrome);
    Ok(out)
}

/// Overall metrics of `predictor` on `samples` with every image degraded
/// by each condition in turn.
pub fn degrade_eval<P: PressurePredictor + ?Sized>(
    predictor: &P,
    samples: &[FrameSample],
    conditions: &[DegradeSpec],
) -> Result<Vec<(String, GroupMetrics)>> {
    let mut out = Vec::with_capacity(conditions.len());
    for d in conditions {
        let degraded = samples
            .iter()
            .map(|s| {
                Ok(FrameSample {
                    rgb: degrade(&s.rgb, d)?,
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((d.label(), evaluate_predictor(predictor, &degraded)?.overall));
    }
    Ok(out)
}

fn collect_files(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io { path: dir.into(), source: e })?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::Io { path: dir.into(), source: e })?.path();
        if path.is_dir() {
            collect_files(&path, root, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

/// Writes `manifest.tsv` under `dir`: one `sha256<TAB>relative/path` line
/// per file, sorted by path.
pub fn write_manifest(dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    let mut lines: Vec<(String, String)> = Vec::with_capacity(files.len());
    for f in files {
        let bytes = std::fs::read(&f).map_err(|e| CliError::Io { path: f.clone(), source: e })?;
        let rel = f.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
        lines.push((rel, hex::encode(Sha256::digest(&bytes))));
    }
    lines.sort();
    let text: String = lines.iter().map(|(p, h)| format!("{h}\t{p}\n")).collect();
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pressure_core::Space;

    fn img(v: &[f32]) -> PressureImage {
        PressureImage::new(v.len(), 1, Space::Camera, None, v.to_vec()).unwrap()
    }

    #[test]
    fn single_frame_is_returned_unchanged() {
        let mut c = AccumulationCanvas::new();
        c.add(&img(&[0.0, 3.0, 1.5])).unwrap();
        assert_eq!(c.pressure().unwrap(), &img(&[0.0, 3.0, 1.5]));
        assert_eq!(c.frames(), 1);
    }

    #[test]
    fn disjoint_support_gives_union_and_max_is_kept() {
        let mut c = AccumulationCanvas::new();
        c.add(&img(&[2.0, 0.0, 0.0])).unwrap();
        c.add(&img(&[0.0, 0.0, 4.0])).unwrap();
        assert_eq!(c.pressure().unwrap(), &img(&[2.0, 0.0, 4.0]));
        c.add(&img(&[1.0, 0.0, 9.0])).unwrap();
        c.add(&img(&[5.0, 0.0, 7.0])).unwrap();
        assert_eq!(c.pressure().unwrap(), &img(&[5.0, 0.0, 9.0]));
        assert!(c.add(&img(&[1.0])).is_err());
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(pressure_color(0.0), Rgb([0, 0, 0]));
        assert_eq!(pressure_color(1000.0), Rgb([252, 230, 40]));
        let low = pressure_color(0.5);
        assert!(low[2] > low[1] && low != Rgb([0, 0, 0]));
        let mid = pressure_color(6.4);
        assert!(mid[0] > low[0] && mid[1] > low[1]);
    }

    #[test]
    fn conditions_cover_the_study() {
        let labels: Vec<String> = degrade_conditions((96, 96)).unwrap().iter().map(|d| d.label()).collect();
        assert_eq!(labels, ["RGB-96x96", "RGB-24x24", "RGB-6x6", "RGB-3x3", "Mono"]);
    }
}
