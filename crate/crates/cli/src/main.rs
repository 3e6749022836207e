use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pressure_core::{contact_map, pvp1, PressureBinning, PressureImage, DEFAULT_CONTACT_THRESHOLD_KPA};
use pressure_data::{write_recording, FrameSample, ParticipantSplit, SynthConfig};
use pressure_eval::baseline::{
    contact_from_mesh, hidden_scale_sequence, scale_sweep, write_mesh, PlaneModel, DEFAULT_SCALE_RANGE,
    DEFAULT_SCALE_STEPS,
};
use pressure_eval::{contact_iou, occlusion_sensitivity, MetricsReport};
use pressure_model::{evaluate_checkpoint, load_checkpoint, load_dataset, train, PressureEstimator, TrainConfig};
use pressure_cli::{accumulate_pressure, colorize, degrade_conditions, degrade_eval, write_manifest, AccumulationCanvas};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "pressure", version, about = "Per-pixel hand pressure estimation from RGB images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset split by persona into train/val/test.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        scenes: usize,
        #[arg(long, default_value_t = 12)]
        personas: usize,
        /// Write one finger stroke of this many frames instead of a dataset.
        #[arg(long)]
        stroke: Option<usize>,
    },
    /// Train the network described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a checkpoint (or `zero`) on a dataset.
    Evaluate {
        #[arg(long)]
        ckpt: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hand-mesh contact baseline with a hidden-scale sweep.
    Baseline {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        sequences: usize,
        #[arg(long, default_value_t = 4)]
        frames: usize,
    },
    /// Occlusion-sensitivity maps for the first images of a dataset.
    Sensitivity {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = pressure_eval::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        limit: usize,
    },
    /// Accumulate predicted pressure over a recording into one canvas.
    Accumulate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on reduced-resolution and monochrome inputs.
    DegradeEval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cmd: Command) -> Result<()> {
    let out = match &cmd {
        Command::Synth { out, .. }
        | Command::Train { out, .. }
        | Command::Evaluate { out, .. }
        | Command::Baseline { out, .. }
        | Command::Sensitivity { out, .. }
        | Command::Accumulate { out, .. }
        | Command::DegradeEval { out, .. } => out.clone(),
    };
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    match cmd {
        Command::Synth {
            seed,
            scenes,
            personas,
            stroke,
            ..
        } => synth(&out, seed, scenes, personas, stroke)?,
        Command::Train { config, seed, .. } => train_cmd(&config, seed, &out)?,
        Command::Evaluate { ckpt, data, .. } => {
            let samples = load_dataset(&data)?;
            let report = evaluate_checkpoint(&ckpt, &samples, &PressureBinning::default())?;
            report.write(&out)?;
            println!("{}", summary(&report));
        }
        Command::Baseline {
            seed,
            sequences,
            frames,
            ..
        } => baseline(&out, seed, sequences, frames)?,
        Command::Sensitivity {
            ckpt,
            data,
            grid,
            limit,
            ..
        } => sensitivity(&ckpt, &data, &out, grid, limit)?,
        Command::Accumulate { ckpt, data, .. } => accumulate(&ckpt, &data, &out)?,
        Command::DegradeEval { ckpt, data, .. } => {
            let est = estimator(&ckpt)?;
            let samples = load_dataset(&data)?;
            let native = samples.first().context("dataset is empty")?.rgb.dimensions();
            let rows = degrade_eval(&est, &samples, &degrade_conditions(native)?)?;
            let mut tsv = String::from("condition\ttemporal_accuracy\tcontact_iou\tvolumetric_iou\tmae_pa\n");
            for (label, m) in &rows {
                tsv.push_str(&format!(
                    "{label}\t{}\t{}\t{}\t{}\n",
                    opt(m.temporal_accuracy),
                    opt(m.contact_iou),
                    opt(m.volumetric_iou),
                    opt(m.mae_pa)
                ));
            }
            write(&out.join("degrade.tsv"), tsv.as_bytes())?;
            print!("{tsv}");
        }
    }
    write_manifest(&out)?;
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.6}"))
}

fn summary(r: &MetricsReport) -> String {
    let o = &r.overall;
    format!(
        "frames {} temporal_accuracy {} contact_iou {} volumetric_iou {} mae_pa {}",
        r.frames,
        opt(o.temporal_accuracy),
        opt(o.contact_iou),
        opt(o.volumetric_iou),
        opt(o.mae_pa)
    )
}

fn estimator(ckpt: &Path) -> Result<PressureEstimator> {
    Ok(PressureEstimator::from_checkpoint(load_checkpoint(ckpt)?)?)
}

fn synth(out: &Path, seed: u64, scenes: usize, personas: usize, stroke: Option<usize>) -> Result<()> {
    let cfg = SynthConfig::default();
    if let Some(frames) = stroke {
        if frames == 0 {
            bail!("--stroke needs at least one frame");
        }
        let samples = cfg
            .stroke_scenes(&cfg.persona(0), frames, seed)
            .iter()
            .map(pressure_data::synthesize_sample)
            .collect::<pressure_data::Result<Vec<_>>>()?;
        write_recording(out.join("stroke"), &samples)?;
        println!("wrote {frames} stroke frames");
        return Ok(());
    }
    if personas < 3 {
        bail!("--personas must be at least 3 to form train/val/test splits");
    }
    let samples = cfg.generate_dataset(scenes, personas, seed)?;
    let split = ParticipantSplit::new(samples.iter().map(|s| s.meta.participant.as_str()), 0.2, 0.2, seed)?;
    let (tr, va, te) = split.apply(samples);
    for (name, part) in [("train", &tr), ("val", &va), ("test", &te)] {
        write_recording(out.join(name), part)?;
    }
    println!("wrote {} train, {} val, {} test samples", tr.len(), va.len(), te.len());
    Ok(())
}

fn train_cmd(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = TrainConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let train_set = load_dataset(resolve(&cfg.train_dir)).context("loading training data")?;
    let val_dir = resolve(&cfg.val_dir);
    let val_set: Vec<FrameSample> = if val_dir.exists() {
        load_dataset(&val_dir).context("loading validation data")?
    } else {
        log::warn!("no validation data at {}", val_dir.display());
        Vec::new()
    };
    write(&out.join("train.cfg"), cfg.to_text().as_bytes())?;
    let outcome = train(&cfg, &train_set, &val_set, Some(out))?;
    let mut loss = String::from("iteration\tloss\n");
    for (i, l) in outcome.history.losses.iter().enumerate() {
        loss.push_str(&format!("{}\t{l:.6}\n", i + 1));
    }
    write(&out.join("loss.tsv"), loss.as_bytes())?;
    let mut val = String::from("iteration\tcontact_iou\n");
    for (i, v) in &outcome.history.val_contact_iou {
        val.push_str(&format!("{i}\t{}\n", opt(*v)));
    }
    write(&out.join("val.tsv"), val.as_bytes())?;
    println!("trained {} iterations; final checkpoint {}", cfg.total_iters(), out.join("final.pvm1").display());
    Ok(())
}

fn baseline(out: &Path, seed: u64, sequences: usize, frames: usize) -> Result<()> {
    if frames == 0 {
        bail!("--frames must be positive");
    }
    let plane = PlaneModel::horizontal(1000.0, 128.0, 128.0, 256, 256)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = String::from("sequence\ttrue_scale\tbest_scale\tbest_iou\n");
    for i in 0..sequences {
        let truth = rng.gen_range(0.85..1.15);
        let poses = hidden_scale_sequence(&mut rng, frames, truth, 10, 20);
        let gt = poses
            .iter()
            .map(|m| contact_from_mesh(&m.with_scale(truth)?, &plane, 0.0))
            .collect::<pressure_eval::Result<Vec<_>>>()?;
        let r = scale_sweep(&poses, &gt, &plane, 0.0, DEFAULT_SCALE_RANGE, DEFAULT_SCALE_STEPS)?;
        let mut curve = String::from("scale\tcontact_iou\n");
        for (s, iou) in &r.curve {
            curve.push_str(&format!("{s:.6}\t{}\n", opt(*iou)));
        }
        write(&out.join(format!("curve_{i:03}.tsv")), curve.as_bytes())?;
        write_mesh(out.join(format!("hand_{i:03}.obj")), &poses[0].with_scale(r.best_scale)?)?;
        table.push_str(&format!("{i}\t{truth:.6}\t{:.6}\t{}\n", r.best_scale, opt(r.best_iou)));
    }
    write(&out.join("sweep.tsv"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn sensitivity(ckpt: &Path, data: &Path, out: &Path, grid: usize, limit: usize) -> Result<()> {
    let est = estimator(ckpt)?;
    let samples = load_dataset(data)?;
    let mut table = String::from("sample\tcell_x\tcell_y\tcell_w\tcell_h\tmax_change_kpa\n");
    for (i, s) in samples.iter().take(limit).enumerate() {
        let map = occlusion_sensitivity(&est, &s.rgb, grid)?;
        map.export(out, &format!("sensitivity_{i:03}"))?;
        let c = map.argmax_cell();
        table.push_str(&format!("{i}\t{}\t{}\t{}\t{}\t{:.6}\n", c.x, c.y, c.w, c.h, map.max_value()));
    }
    write(&out.join("sensitivity.tsv"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn save_canvas(out: &Path, stem: &str, p: &PressureImage) -> Result<()> {
    pvp1::write(out.join(format!("{stem}.pvp1")), p)?;
    let png = out.join(format!("{stem}.png"));
    colorize(p).save(&png).with_context(|| format!("cannot write {}", png.display()))?;
    Ok(())
}

fn accumulate(ckpt: &Path, data: &Path, out: &Path) -> Result<()> {
    let est = estimator(ckpt)?;
    let mut samples = load_dataset(data)?;
    samples.sort_by(|a, b| a.meta.timestamp.total_cmp(&b.meta.timestamp));
    let frames: Vec<_> = samples.iter().map(|s| s.rgb.clone()).collect();
    let canvas = accumulate_pressure(&frames, &est)?;
    let mut gt = AccumulationCanvas::new();
    for s in &samples {
        gt.add(&s.pressure_gt)?;
    }
    let (pred, truth) = (canvas.pressure().unwrap(), gt.pressure().unwrap());
    save_canvas(out, "canvas", pred)?;
    save_canvas(out, "canvas_gt", truth)?;
    let iou = contact_iou(
        &[contact_map(pred, DEFAULT_CONTACT_THRESHOLD_KPA)?],
        &[contact_map(truth, DEFAULT_CONTACT_THRESHOLD_KPA)?],
    )?;
    let line = format!("frames {} contact_iou {}", canvas.frames(), opt(iou));
    write(&out.join("accumulate.txt"), format!("{line}\n").as_bytes())?;
    println!("{line}");
    Ok(())
}
