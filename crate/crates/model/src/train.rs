//! Two-phase Adam training of the single-frame network and checkpoint
//! evaluation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use pressure_core::{quantize, PressureBinning};
use pressure_data::recording::INDEX_FILE;
use pressure_data::{load_recording, FrameSample};
use pressure_eval::{evaluate_predictor, MetricsReport, ZeroGuesser};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{save_checkpoint, Checkpoint};
use crate::error::{ModelError, Result};
use crate::estimator::PressureEstimator;
use crate::net::{image_tensor, ModelConfig, PressureNet, Preset};
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_phase1: f64,
    pub iters_phase1: u64,
    pub lr_phase2: f64,
    pub iters_phase2: u64,
    pub seed: u64,
    /// Iterations between checkpoints and validation passes; 0 disables both.
    pub ckpt_interval: u64,
    pub train_dir: PathBuf,
    pub val_dir: PathBuf,
    pub input_w: usize,
    pub input_h: usize,
    pub preset: Preset,
}

const KEYS: [&str; 12] = [
    "batch_size",
    "lr_phase1",
    "iters_phase1",
    "lr_phase2",
    "iters_phase2",
    "seed",
    "ckpt_interval",
    "train_dir",
    "val_dir",
    "input_w",
    "input_h",
    "preset",
];

impl TrainConfig {
    /// Full schedule: 100k iterations at 1e-3 then 500k at 1e-4, batch 8.
    pub fn paper() -> Self {
        Self {
            batch_size: 8,
            lr_phase1: 1e-3,
            iters_phase1: 100_000,
            lr_phase2: 1e-4,
            iters_phase2: 500_000,
            seed: 0,
            ckpt_interval: 10_000,
            train_dir: PathBuf::from("data/train"),
            val_dir: PathBuf::from("data/val"),
            input_w: 480,
            input_h: 384,
            preset: Preset::Paper,
        }
    }

    /// Short schedule for the tiny network on synthetic 96x96 data.
    pub fn desk() -> Self {
        Self {
            iters_phase1: 2_000,
            iters_phase2: 8_000,
            ckpt_interval: 1_000,
            input_w: 96,
            input_h: 96,
            preset: Preset::Tiny,
            ..Self::paper()
        }
    }

    pub fn total_iters(&self) -> u64 {
        self.iters_phase1 + self.iters_phase2
    }

    pub fn lr_at(&self, iter: u64) -> f64 {
        if iter < self.iters_phase1 {
            self.lr_phase1
        } else {
            self.lr_phase2
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig::from_preset(self.preset).with_input(self.input_w, self.input_h)
    }

    /// Parses `key = value` lines over the desk defaults. `#` starts a
    /// comment; unknown keys and malformed values are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::desk();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ModelError::invalid(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| {
                ModelError::invalid(format!("line {}: bad value for {key}: {e}", n + 1))
            };
            match key {
                "batch_size" => cfg.batch_size = value.parse().map_err(|e| bad(&e))?,
                "lr_phase1" => cfg.lr_phase1 = value.parse().map_err(|e| bad(&e))?,
                "iters_phase1" => cfg.iters_phase1 = value.parse().map_err(|e| bad(&e))?,
                "lr_phase2" => cfg.lr_phase2 = value.parse().map_err(|e| bad(&e))?,
                "iters_phase2" => cfg.iters_phase2 = value.parse().map_err(|e| bad(&e))?,
                "seed" => cfg.seed = value.parse().map_err(|e| bad(&e))?,
                "ckpt_interval" => cfg.ckpt_interval = value.parse().map_err(|e| bad(&e))?,
                "train_dir" => cfg.train_dir = PathBuf::from(value),
                "val_dir" => cfg.val_dir = PathBuf::from(value),
                "input_w" => cfg.input_w = value.parse().map_err(|e| bad(&e))?,
                "input_h" => cfg.input_h = value.parse().map_err(|e| bad(&e))?,
                "preset" => cfg.preset = value.parse().map_err(|e: ModelError| bad(&e))?,
                other => {
                    return Err(ModelError::invalid(format!(
                        "line {}: unknown key {other:?} (expected one of {})",
                        n + 1,
                        KEYS.join(", ")
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::io(path, e))?;
        Self::parse(&text).map_err(|e| ModelError::format(path, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let preset = match self.preset {
            Preset::Tiny => "tiny",
            Preset::Paper => "paper",
        };
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "lr_phase1 = {:e}", self.lr_phase1);
        let _ = writeln!(s, "iters_phase1 = {}", self.iters_phase1);
        let _ = writeln!(s, "lr_phase2 = {:e}", self.lr_phase2);
        let _ = writeln!(s, "iters_phase2 = {}", self.iters_phase2);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "ckpt_interval = {}", self.ckpt_interval);
        let _ = writeln!(s, "train_dir = {}", self.train_dir.display());
        let _ = writeln!(s, "val_dir = {}", self.val_dir.display());
        let _ = writeln!(s, "input_w = {}", self.input_w);
        let _ = writeln!(s, "input_h = {}", self.input_h);
        let _ = writeln!(s, "preset = {preset}");
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::invalid("batch_size must be positive"));
        }
        for lr in [self.lr_phase1, self.lr_phase2] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(ModelError::invalid(format!("learning rate {lr} must be finite and >= 0")));
            }
        }
        self.model_config().validate()
    }
}

/// Loads every recording under `dir`: the directory itself if it holds an
/// index, otherwise each immediate subdirectory that does, in name order.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<FrameSample>> {
    let dir = dir.as_ref();
    if dir.join(INDEX_FILE).is_file() {
        return Ok(load_recording(dir)?.load_all()?);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| ModelError::io(dir, e))?;
    let mut roots: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(INDEX_FILE).is_file())
        .collect();
    roots.sort();
    if roots.is_empty() {
        return Err(ModelError::format(dir, "no recordings found"));
    }
    let mut out = Vec::new();
    for r in roots {
        out.extend(load_recording(&r)?.load_all()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    /// Mean batch loss of every iteration.
    pub losses: Vec<f64>,
    /// Validation Contact IoU at each checkpoint iteration.
    pub val_contact_iou: Vec<(u64, Option<f64>)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: PressureNet<f32>,
    pub binning: PressureBinning,
    pub history: TrainHistory,
    pub checkpoints: Vec<PathBuf>,
}

fn check_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| ModelError::Setup(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"")
        .map_err(|e| ModelError::Setup(format!("{} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// Trains a fresh network on `train`. Every setup problem (empty data,
/// wrong image size, unwritable checkpoint directory) is reported before
/// the first step.
pub fn train(
    cfg: &TrainConfig,
    train: &[FrameSample],
    val: &[FrameSample],
    ckpt_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let net = PressureNet::<f32>::new(cfg.model_config(), cfg.seed)?;
    train_from(cfg, net, train, val, ckpt_dir)
}

/// Like [`train`] but continues from an existing network.
pub fn train_from(
    cfg: &TrainConfig,
    mut net: PressureNet<f32>,
    train: &[FrameSample],
    val: &[FrameSample],
    ckpt_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate().map_err(|e| ModelError::Setup(e.to_string()))?;
    if train.is_empty() {
        return Err(ModelError::Setup("training set is empty".into()));
    }
    let dims = (cfg.input_w, cfg.input_h);
    if let Some(s) = train.iter().chain(val).find(|s| s.dims() != dims) {
        let (w, h) = s.dims();
        return Err(ModelError::Setup(format!(
            "sample is {w}x{h} but the model expects {}x{}",
            dims.0, dims.1
        )));
    }
    if let Some(dir) = ckpt_dir {
        check_writable(dir)?;
    }
    let binning = PressureBinning::default();
    if net.config().n_bins != binning.n_bins() || net.config().frames != 1 {
        return Err(ModelError::Setup("network does not match the training setup".into()));
    }
    let labels: Vec<Vec<u8>> = train
        .iter()
        .map(|s| quantize(&s.pressure_gt, &binning).labels().to_vec())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let mut adam = Adam::new(&net);
    let mut history = TrainHistory::default();
    let mut checkpoints = Vec::new();
    let total = cfg.total_iters();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for iter in 0..total {
        batch.clear();
        while batch.len() < cfg.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        let imgs: Vec<_> = batch.iter().map(|&i| train[i].rgb.clone()).collect();
        let targets: Vec<u8> = batch.iter().flat_map(|&i| labels[i].iter().copied()).collect();
        let x = image_tensor(&imgs)?;
        let (loss, grads) = net.loss_and_grads(std::slice::from_ref(&x), &targets)?;
        if !loss.is_finite() {
            return Err(ModelError::invalid(format!("loss diverged at iteration {}", iter + 1)));
        }
        adam.step(&mut net, &grads, cfg.lr_at(iter));
        history.losses.push(loss);

        let done = iter + 1;
        if done % 100 == 0 {
            info!("iter {done}/{total} loss {loss:.4}");
        }
        if cfg.ckpt_interval > 0 && done % cfg.ckpt_interval == 0 {
            if !val.is_empty() {
                let est = PressureEstimator::new(net.clone(), binning.clone())?;
                let iou = evaluate_predictor(&est, val)?.overall.contact_iou;
                info!("iter {done} val contact IoU {iou:?}");
                history.val_contact_iou.push((done, iou));
            }
            if let Some(dir) = ckpt_dir {
                let path = dir.join(format!("ckpt_{done:06}.pvm1"));
                save_checkpoint(&path, &net, &binning, done)?;
                checkpoints.push(path);
            }
        }
    }
    if let Some(dir) = ckpt_dir {
        let path = dir.join("final.pvm1");
        save_checkpoint(&path, &net, &binning, total)?;
        checkpoints.push(path);
    }
    Ok(TrainOutcome {
        net,
        binning,
        history,
        checkpoints,
    })
}

/// Evaluates a checkpoint file, or the all-zero predictor when `which` is
/// `"zero"`. The checkpoint's binning must equal `binning`.
pub fn evaluate_checkpoint(which: &str, samples: &[FrameSample], binning: &PressureBinning) -> Result<MetricsReport> {
    if which == "zero" {
        return Ok(evaluate_predictor(&ZeroGuesser, samples)?);
    }
    let c = Checkpoint::load(which)?;
    if &c.binning != binning {
        return Err(ModelError::format(
            which,
            format!(
                "checkpoint binning ({}..{} kPa, {} bins) differs from the requested one ({}..{} kPa, {} bins)",
                c.binning.p_min(),
                c.binning.p_max(),
                c.binning.n_bins(),
                binning.p_min(),
                binning.p_max(),
                binning.n_bins()
            ),
        ));
    }
    let est = PressureEstimator::from_checkpoint(c)?;
    Ok(evaluate_predictor(&est, samples)?)
}
