//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are pinned here.

use std::cell::Cell;
use std::time::Instant;

use pressure_cli::accumulate_pressure;
use pressure_cli::{degrade_conditions, degrade_eval, AccumulationCanvas};
use pressure_core::{
    contact_map, dequantize, make_binning, pvp1, quantize, ContactMap, ForceLevel, LabelImage, PressureBinning, PressureImage,
    PressurePredictor, RgbImage, Space,
};
use pressure_data::{synthesize_sample, Action, FrameSample, ParticipantSplit, SynthConfig};
use pressure_eval::baseline::{
    contact_from_mesh, hidden_scale_sequence, scale_sweep, sweep_scales, uv_sphere, PlaneModel,
    DEFAULT_SCALE_RANGE, DEFAULT_SCALE_STEPS,
};
use pressure_eval::{
    contact_iou, evaluate_predictor, mae, occlusion_sensitivity, temporal_accuracy, volumetric_iou, ZeroGuesser,
};
use pressure_model::{
    cross_entropy, load_checkpoint, save_checkpoint, train, Checkpoint, ModelConfig, PressureEstimator, PressureNet,
    Tensor, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONTACT_KPA: f64 = 1.0;
const METRIC_REL_TOL: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-3;
const GRAD_STEP: f64 = 1e-5;
const GRAD_MIN_PARAMS: usize = 100;
const LN9_TOL: f64 = 1e-6;
const E2E_SCENES: usize = 2000;
const E2E_PERSONAS: usize = 12;
const E2E_ITERS: (u64, u64) = (1000, 2000);
const E2E_TEMPORAL: f64 = 0.90;
const E2E_CONTACT_IOU: f64 = 0.50;
const E2E_VOLUMETRIC_IOU: f64 = 0.30;
const E2E_MINUTES: f64 = 45.0;
const BASELINE_SEQUENCES: usize = 20;
const SPHERE_RADIUS_TOL_PX: f64 = 2.0;
const SENSITIVITY_SCENES: usize = 20;
const SENSITIVITY_GRID: usize = 48;
const SENSITIVITY_HIT_RATE: f64 = 0.80;
const STROKE_FRAMES: usize = 24;
const ACCUMULATION_IOU: f64 = 0.5;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= METRIC_REL_TOL * a.abs().max(b.abs()).max(1e-300)
}

fn image(w: usize, h: usize, v: Vec<f32>) -> PressureImage {
    PressureImage::new(w, h, Space::Camera, None, v).unwrap()
}

fn metric_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..50 {
        let frames = rng.gen_range(1..=8);
        let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let mut est = Vec::new();
        let mut gt = Vec::new();
        for _ in 0..frames {
            for dst in [&mut est, &mut gt] {
                let density = rng.gen_range(0.0..1.0);
                let v = (0..w * h)
                    .map(|_| if rng.gen_bool(density) { rng.gen_range(0.0f32..30.0) } else { 0.0 })
                    .collect();
                dst.push(image(w, h, v));
            }
        }
        let (mut agree, mut inter, mut union, mut lo, mut hi, mut abs, mut n) = (0, 0, 0, 0.0, 0.0, 0.0, 0);
        for (e, g) in est.iter().zip(&gt) {
            let (mut any_e, mut any_g) = (false, false);
            for (&a, &b) in e.values().iter().zip(g.values()) {
                let (a, b) = (a as f64, b as f64);
                let (ca, cb) = (a > CONTACT_KPA, b > CONTACT_KPA);
                any_e |= ca;
                any_g |= cb;
                inter += (ca && cb) as usize;
                union += (ca || cb) as usize;
                lo += a.min(b);
                hi += a.max(b);
                abs += (a - b).abs();
                n += 1;
            }
            agree += (any_e == any_g) as usize;
        }
        let ce: Vec<ContactMap> = est.iter().map(|p| contact_map(p, CONTACT_KPA).unwrap()).collect();
        let cg: Vec<ContactMap> = gt.iter().map(|p| contact_map(p, CONTACT_KPA).unwrap()).collect();
        let ok = temporal_accuracy(&ce, &cg).unwrap() == agree as f64 / frames as f64
            && contact_iou(&ce, &cg).unwrap() == (union > 0).then(|| inter as f64 / union as f64)
            && match volumetric_iou(&est, &gt).unwrap() {
                None => hi == 0.0,
                Some(v) => rel_close(v, lo / hi),
            }
            && rel_close(mae(&est, &gt).unwrap(), abs * 1000.0 / n as f64);
        if !ok {
            return (false, format!("case {case} disagrees with the brute-force oracle"));
        }
    }
    (true, "50 random frame sets agree".into())
}

fn volumetric_cases() -> (bool, String) {
    let one = |v: Vec<f32>| vec![image(v.len(), 1, v)];
    let same = volumetric_iou(&one(vec![3.0, 0.0, 7.5]), &one(vec![3.0, 0.0, 7.5])).unwrap();
    let disjoint = volumetric_iou(&one(vec![4.0, 0.0]), &one(vec![0.0, 2.0])).unwrap();
    let third = volumetric_iou(&one(vec![1.0, 1.0]), &one(vec![2.0, 0.0])).unwrap();
    let cases = same == Some(1.0) && disjoint == Some(0.0) && third == Some(1.0 / 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let a: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.4)).collect();
        let b: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.4)).collect();
        let ind = |v: &[bool]| image(w, h, v.iter().map(|&x| x as u8 as f32).collect());
        let ci = contact_iou(&[ContactMap::new(w, h, a.clone()).unwrap()], &[ContactMap::new(w, h, b.clone()).unwrap()])
            .unwrap();
        agree += (ci == volumetric_iou(&[ind(&a)], &[ind(&b)]).unwrap()) as usize;
    }
    (
        cases && agree == 100,
        format!("hand cases {same:?}/{disjoint:?}/{third:?}; indicator agreement {agree}/100"),
    )
}

fn binning() -> (bool, String) {
    let b = PressureBinning::default();
    let labels = LabelImage::new(9, 1, (0..9).collect()).unwrap();
    let round_trip = quantize(&dequantize(&labels, &b).unwrap(), &b) == labels;
    let ratio = (82.0f64 / 0.5).powf(1.0 / 8.0);
    let e = b.edges();
    let worst = (1..e.len() - 1)
        .map(|k| ((e[k + 1] / e[k]) - ratio).abs() / ratio)
        .fold(0.0, f64::max);
    let q = quantize(&image(4, 1, vec![0.0, 0.5, 82.0, 200.0]), &b);
    let clamps = q.labels() == [0, 1, 8, 8];
    (
        round_trip && worst <= 1e-9 && clamps && b.n_bins() == 9,
        format!("round trip {round_trip}; worst edge-ratio error {worst:.2e}; labels for 0/0.5/82/200 kPa {:?}", q.labels()),
    )
}

fn gradient_check() -> (bool, String) {
    let cfg = ModelConfig::tiny().with_input(32, 32);
    let net = PressureNet::<f64>::new(cfg, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = Tensor::from_vec(2, 3, 32, 32, (0..2 * 3 * 1024).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let t: Vec<u8> = (0..2 * 1024).map(|_| rng.gen_range(0..9u8)).collect();
    let (_, grads) = net.loss_and_grads(std::slice::from_ref(&x), &t).unwrap();
    let (mut checked, mut worst) = (0, 0.0f64);
    for li in 0..net.layers().len() {
        for k in 0..8 {
            let bias = k >= 6;
            let len = if bias { net.layers()[li].bias.len() } else { net.layers()[li].weight.len() };
            let idx = rng.gen_range(0..len);
            let eval = |d: f64| {
                let mut n = net.clone();
                let l = &mut n.layers_mut()[li];
                if bias {
                    l.bias[idx] += d;
                } else {
                    l.weight[idx] += d;
                }
                n.loss_and_grads(std::slice::from_ref(&x), &t).unwrap().0
            };
            let num = (eval(GRAD_STEP) - eval(-GRAD_STEP)) / (2.0 * GRAD_STEP);
            let ana = if bias { grads.bias[li][idx] } else { grads.weight[li][idx] };
            worst = worst.max((num - ana).abs() / num.abs().max(ana.abs()).max(GRAD_STEP));
            checked += 1;
        }
    }
    let (l9, _) = cross_entropy(&Tensor::<f64>::zeros(2, 9, 8, 8), &vec![4u8; 128]).unwrap();
    let ln9_err = (l9 - 9f64.ln()).abs();
    (
        checked >= GRAD_MIN_PARAMS && worst < GRAD_REL_TOL && ln9_err < LN9_TOL,
        format!("{checked} parameters, worst relative error {worst:.2e}; uniform-logit loss error {ln9_err:.1e}"),
    )
}

struct Desk {
    estimator: PressureEstimator,
    test: Vec<FrameSample>,
}

fn desk_e2e(report: &mut Report) -> Desk {
    let start = Instant::now();
    let data = SynthConfig::default().generate_dataset(E2E_SCENES, E2E_PERSONAS, 2024).unwrap();
    let split = ParticipantSplit::new(data.iter().map(|s| s.meta.participant.as_str()), 0.2, 0.2, 0).unwrap();
    let (tr, va, te) = split.apply(data);
    let cfg = TrainConfig {
        iters_phase1: E2E_ITERS.0,
        iters_phase2: E2E_ITERS.1,
        ckpt_interval: 0,
        ..TrainConfig::desk()
    };
    let out = train(&cfg, &tr, &va, None).unwrap();
    let estimator = PressureEstimator::new(out.net, out.binning).unwrap();
    let ours = evaluate_predictor(&estimator, &te).unwrap().overall;
    let zero = evaluate_predictor(&ZeroGuesser, &te).unwrap().overall;
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let (ta, ci, vi, m, zm) = (
        ours.temporal_accuracy.unwrap_or(0.0),
        ours.contact_iou.unwrap_or(0.0),
        ours.volumetric_iou.unwrap_or(0.0),
        ours.mae_pa.unwrap_or(f64::INFINITY),
        zero.mae_pa.unwrap_or(0.0),
    );
    report.line(
        "desk-scale end-to-end",
        ta >= E2E_TEMPORAL && ci >= E2E_CONTACT_IOU && vi >= E2E_VOLUMETRIC_IOU && m < zm && minutes <= E2E_MINUTES,
        format!(
            "{} samples, {E2E_PERSONAS} personas, {} iterations, {} held-out frames: temporal {ta:.3}, contact IoU {ci:.3}, \
             volumetric IoU {vi:.3}, MAE {m:.1} Pa (zero guesser {zm:.1} Pa), {minutes:.1} min",
            tr.len() + va.len() + te.len(),
            cfg.total_iters(),
            te.len()
        ),
    );
    Desk { estimator, test: te }
}

fn degraded_ordering(desk: &Desk) -> (bool, String) {
    let conditions = degrade_conditions((96, 96)).unwrap();
    let rows = degrade_eval(&desk.estimator, &desk.test, &conditions[..4]).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.1.volumetric_iou.unwrap_or(0.0)).collect();
    let holds = v.windows(2).filter(|p| p[1] <= p[0]).count();
    let listing: Vec<String> = rows.iter().zip(&v).map(|(r, x)| format!("{} {x:.3}", r.0)).collect();
    (
        holds == v.len() - 1,
        format!("volumetric IoU {}; non-increasing in {holds} of {} adjacent pairs", listing.join(", "), v.len() - 1),
    )
}

fn baseline() -> (bool, String) {
    let plane = PlaneModel::horizontal(1000.0, 128.0, 128.0, 256, 256).unwrap();
    let scales = sweep_scales(DEFAULT_SCALE_RANGE, DEFAULT_SCALE_STEPS).unwrap();
    let step = scales[1] - scales[0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut recovered = 0;
    for _ in 0..BASELINE_SEQUENCES {
        let truth = rng.gen_range(0.85..1.15);
        let poses = hidden_scale_sequence(&mut rng, 4, truth, 10, 20);
        let gt: Vec<ContactMap> = poses
            .iter()
            .map(|m| contact_from_mesh(&m.with_scale(truth).unwrap(), &plane, 0.0).unwrap())
            .collect();
        let r = scale_sweep(&poses, &gt, &plane, 0.0, DEFAULT_SCALE_RANGE, DEFAULT_SCALE_STEPS).unwrap();
        recovered += ((r.best_scale - truth).abs() <= step + 1e-12) as usize;
    }
    let sphere_plane = PlaneModel::horizontal(1000.0, 64.0, 64.0, 129, 129).unwrap();
    let mut worst = 0.0f64;
    for (r, d) in [(0.03, 0.004), (0.02, 0.002), (0.04, 0.008)] {
        let c = contact_from_mesh(&uv_sphere(nalgebra::Vector3::new(0.0, 0.0, r - d), r, 120, 400), &sphere_plane, 0.0)
            .unwrap();
        let expected = (2.0 * r * d - d * d).sqrt() * 1000.0;
        worst = worst.max(((c.count() as f64 / std::f64::consts::PI).sqrt() - expected).abs());
    }
    (
        recovered == BASELINE_SEQUENCES && worst <= SPHERE_RADIUS_TOL_PX,
        format!(
            "scale recovered within one step ({step:.4}) on {recovered}/{BASELINE_SEQUENCES} sequences; \
             worst sphere disk radius error {worst:.2} px"
        ),
    )
}

struct Counting<'a, P> {
    inner: &'a P,
    images: Cell<usize>,
}

impl<P: PressurePredictor> PressurePredictor for Counting<'_, P> {
    fn predict(&self, img: &RgbImage) -> pressure_core::Result<PressureImage> {
        self.images.set(self.images.get() + 1);
        self.inner.predict(img)
    }

    fn predict_batch(&self, imgs: &[RgbImage]) -> pressure_core::Result<Vec<PressureImage>> {
        self.images.set(self.images.get() + imgs.len());
        self.inner.predict_batch(imgs)
    }
}

struct Constant;

impl PressurePredictor for Constant {
    fn predict(&self, img: &RgbImage) -> pressure_core::Result<PressureImage> {
        Ok(image(img.width() as usize, img.height() as usize, vec![3.0; (img.width() * img.height()) as usize]))
    }
}

fn sensitivity(desk: &Desk) -> (bool, String) {
    let cfg = SynthConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut scenes, mut hits, mut forwards_ok) = (0, 0, true);
    let start = Instant::now();
    while scenes < SENSITIVITY_SCENES {
        let persona = cfg.persona(100 + scenes);
        let force = if rng.gen_bool(0.5) { ForceLevel::High } else { ForceLevel::Low };
        let spec = cfg.random_scene(&persona, Action::PressOne(force), rng.gen_range(0..2), rng.gen(), 0.0);
        let sample = synthesize_sample(&spec).unwrap();
        let Some(bbox) = contact_map(&sample.pressure_gt, CONTACT_KPA).unwrap().bounding_box() else {
            continue;
        };
        let counter = Counting { inner: &desk.estimator, images: Cell::new(0) };
        let map = occlusion_sensitivity(&counter, &sample.rgb, SENSITIVITY_GRID).unwrap();
        forwards_ok &= counter.images.get() == SENSITIVITY_GRID * SENSITIVITY_GRID + 1;
        hits += map.argmax_cell().overlaps(bbox) as usize;
        scenes += 1;
    }
    let blank = RgbImage::from_fn(96, 96, |x, y| pressure_core::Rgb([(x * 2) as u8, (y * 2) as u8, 90]));
    let constant_zero = occlusion_sensitivity(&Constant, &blank, SENSITIVITY_GRID).unwrap().is_zero();
    let rate = hits as f64 / scenes as f64;
    (
        rate >= SENSITIVITY_HIT_RATE && constant_zero && forwards_ok,
        format!(
            "argmax cell inside contact box on {hits}/{scenes} presses; constant model map zero: {constant_zero}; \
             forward passes = grid^2+1: {forwards_ok}; {:.0} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn accumulation(desk: &Desk) -> (bool, String) {
    let cfg = SynthConfig::default();
    let samples: Vec<FrameSample> = cfg
        .stroke_scenes(&cfg.persona(200), STROKE_FRAMES, 9)
        .iter()
        .map(|s| synthesize_sample(s).unwrap())
        .collect();
    let frames: Vec<RgbImage> = samples.iter().map(|s| s.rgb.clone()).collect();
    let canvas = accumulate_pressure(&frames, &desk.estimator).unwrap();
    let mut gt = AccumulationCanvas::new();
    for s in &samples {
        gt.add(&s.pressure_gt).unwrap();
    }
    let iou = contact_iou(
        &[contact_map(canvas.pressure().unwrap(), CONTACT_KPA).unwrap()],
        &[contact_map(gt.pressure().unwrap(), CONTACT_KPA).unwrap()],
    )
    .unwrap()
    .unwrap_or(0.0);
    (
        iou >= ACCUMULATION_IOU,
        format!("contact IoU {iou:.3} against the accumulated ground truth over {STROKE_FRAMES} frames"),
    )
}

fn format_round_trips(desk: &Desk) -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let p = image(37, 23, (0..37 * 23).map(|_| rng.gen_range(0.0f32..90.0)).collect())
        .with_pixel_pitch(Some(0.00125))
        .unwrap();
    let (a, b) = (dir.path().join("a.pvp1"), dir.path().join("b.pvp1"));
    pvp1::write(&a, &p).unwrap();
    pvp1::write(&b, &pvp1::read(&a).unwrap()).unwrap();
    let pvp_same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    let (ca, cb) = (dir.path().join("a.pvm1"), dir.path().join("b.pvm1"));
    save_checkpoint(&ca, desk.estimator.net(), desk.estimator.binning(), 3000).unwrap();
    let back: Checkpoint = load_checkpoint(&ca).unwrap();
    back.save(&cb).unwrap();
    let ckpt_same = std::fs::read(&ca).unwrap() == std::fs::read(&cb).unwrap();

    let bad_pvp = dir.path().join("bad.pvp1");
    let bytes = std::fs::read(&a).unwrap();
    std::fs::write(&bad_pvp, &bytes[..bytes.len() - 3]).unwrap();
    let pvp_named = pvp1::read(&bad_pvp).map_err(|e| e.to_string().contains("bad.pvp1")).err() == Some(true);
    let bad_ckpt = dir.path().join("bad.pvm1");
    let bytes = std::fs::read(&ca).unwrap();
    std::fs::write(&bad_ckpt, &bytes[..bytes.len() / 2]).unwrap();
    let ckpt_named = load_checkpoint(&bad_ckpt).map_err(|e| e.to_string().contains("bad.pvm1")).err() == Some(true);
    let binning_ok = make_binning(0.5, 82.0, 9).unwrap() == back.binning;
    (
        pvp_same && ckpt_same && pvp_named && ckpt_named && binning_ok,
        format!(
            "PVP1 identical {pvp_same}, checkpoint identical {ckpt_same}; corrupt errors name file: PVP1 {pvp_named}, \
             checkpoint {ckpt_named}"
        ),
    )
}

fn main() {
    let mut report = Report { failures: 0 };
    let (ok, d) = metric_oracle();
    report.line("metric oracle equivalence", ok, d);
    let (ok, d) = volumetric_cases();
    report.line("volumetric IoU hand cases", ok, d);
    let (ok, d) = binning();
    report.line("log-space binning", ok, d);
    let (ok, d) = gradient_check();
    report.line("gradient check", ok, d);
    let (ok, d) = baseline();
    report.line("baseline self-consistency", ok, d);
    let desk = desk_e2e(&mut report);
    let (ok, d) = degraded_ordering(&desk);
    report.line("degraded-imagery ordering", ok, d);
    let (ok, d) = sensitivity(&desk);
    report.line("sensitivity localization", ok, d);
    let (ok, d) = accumulation(&desk);
    report.line("accumulation demo", ok, d);
    let (ok, d) = format_round_trips(&desk);
    report.line("format round-trips", ok, d);
    if report.failures > 0 {
        println!("{} criterion(s) failed", report.failures);
        std::process::exit(1);
    }
}
