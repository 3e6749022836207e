//! Procedural top-down hand-press scenes with paired ground truth.
//!
//! Every press is a paraboloid cap `p(r) = q (1 - (r/R)^2)` on the sensor
//! grid. The camera image shows a flat-shaded hand silhouette (palm disk plus
//! tapered capsule fingers) over the sensor overlay and the table, with three
//! appearance cues tied to pressure:
//!
//! * the fingertip blanches toward a pale color as local pressure grows,
//! * shadows contract and sharpen as a finger approaches the surface,
//! * the fingertip pad widens with peak pressure.
//!
//! All geometry is specified in sensor-grid units and rendered through the
//! scene homography, so the ground truth goes through the same warp as a
//! real recording.

use std::f64::consts::PI;

use mat3::Mat3;
use pressure_core::geometry::{warp_pressure, Homography};
use pressure_core::{ForceLevel, FrameMeta, PressureImage, Rgb, RgbImage, Space, SENSOR_PITCH_M};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DataError, Result};
use crate::sample::FrameSample;

/// Pressure at which blanching saturates, kPa.
const BLANCH_SATURATION_KPA: f64 = 82.0;
const BLANCH_COLOR: [f64; 3] = [1.0, 0.94, 0.90];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressPrimitive {
    /// Contact center, sensor cells.
    pub center: [f64; 2],
    /// Radius of the pressure cap, sensor cells.
    pub radius: f64,
    pub peak_kpa: f64,
    /// Direction from the fingertip toward the palm, radians.
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandSilhouette {
    pub palm_center: [f64; 2],
    pub palm_radius: f64,
    /// Height of the palm above the surface, sensor cells.
    pub palm_height: f64,
    pub finger_width: f64,
    /// Fingertip height of fingers that are not pressing.
    pub hover_height: f64,
    /// Tips of fingers that never touch the surface.
    pub idle_fingertips: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lighting {
    /// Shadow displacement per unit of height above the surface.
    pub direction: [f64; 2],
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Camera image `(width, height)`.
    pub canvas: (u32, u32),
    pub sensor_dims: (usize, usize),
    pub pixel_pitch: f64,
    /// Sensor grid to camera pixels.
    pub homography: Homography,
    pub presses: Vec<PressPrimitive>,
    pub hand: HandSilhouette,
    pub light: Lighting,
    pub surface_albedo: [f64; 3],
    pub table_albedo: [f64; 3],
    pub skin_tone: [f64; 3],
    /// Per-channel gaussian noise, in units of full scale.
    pub noise_sigma: f64,
    pub seed: u64,
    pub meta: FrameMeta,
}

/// A rendered scene plus masks of where the hand and its shadow fall.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub sample: FrameSample,
    pub hand_mask: Vec<bool>,
    pub shadow_mask: Vec<bool>,
}

struct Finger {
    tip: [f64; 2],
    base: [f64; 2],
    tip_radius: f64,
    base_radius: f64,
    tip_height: f64,
    base_height: f64,
}

impl Finger {
    /// Signed distance, axis parameter, and local radius.
    #[inline]
    fn distance(&self, p: [f64; 2]) -> (f64, f64, f64) {
        let ab = [self.base[0] - self.tip[0], self.base[1] - self.tip[1]];
        let ap = [p[0] - self.tip[0], p[1] - self.tip[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [self.tip[0] + t * ab[0], self.tip[1] + t * ab[1]];
        let r = self.tip_radius + t * (self.base_radius - self.tip_radius);
        ((p[0] - q[0]).hypot(p[1] - q[1]) - r, t, r)
    }

    fn point(&self, t: f64) -> ([f64; 2], f64, f64) {
        (
            [
                self.tip[0] + t * (self.base[0] - self.tip[0]),
                self.tip[1] + t * (self.base[1] - self.tip[1]),
            ],
            self.tip_radius + t * (self.base_radius - self.tip_radius),
            self.tip_height + t * (self.base_height - self.tip_height),
        )
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DataError::InvalidArgument(m));
        if self.canvas.0 == 0 || self.canvas.1 == 0 {
            return bad("canvas must be non-empty".into());
        }
        let (sw, sh) = self.sensor_dims;
        if sw == 0 || sh == 0 {
            return bad("sensor grid must be non-empty".into());
        }
        if !(self.pixel_pitch > 0.0) {
            return bad("pixel pitch must be positive".into());
        }
        for (i, p) in self.presses.iter().enumerate() {
            if !(p.radius > 0.0 && p.radius.is_finite()) {
                return bad(format!("press {i}: radius {} must be positive", p.radius));
            }
            if !(p.peak_kpa >= 0.0 && p.peak_kpa.is_finite()) {
                return bad(format!("press {i}: peak {} must be non-negative", p.peak_kpa));
            }
            let [x, y] = p.center;
            if !(x >= 0.0 && y >= 0.0 && x <= (sw - 1) as f64 && y <= (sh - 1) as f64) {
                return bad(format!("press {i}: center ({x}, {y}) is outside the sensor"));
            }
        }
        let h = &self.hand;
        if !(h.palm_radius > 0.0 && h.finger_width > 0.0 && h.hover_height >= 0.0) {
            return bad("hand dimensions must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative".into());
        }
        Ok(())
    }

    /// Summed paraboloid caps on the sensor grid.
    pub fn sensor_pressure(&self) -> Result<PressureImage> {
        let (w, h) = self.sensor_dims;
        Ok(PressureImage::from_fn(w, h, Space::Sensor, Some(self.pixel_pitch), |x, y| {
            self.pressure_at([x as f64, y as f64]) as f32
        })?)
    }

    #[inline]
    fn pressure_at(&self, p: [f64; 2]) -> f64 {
        self.presses
            .iter()
            .map(|pr| {
                let d2 = (p[0] - pr.center[0]).powi(2) + (p[1] - pr.center[1]).powi(2);
                let r2 = pr.radius * pr.radius;
                if d2 < r2 {
                    pr.peak_kpa * (1.0 - d2 / r2)
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn fingers(&self) -> Vec<Finger> {
        let h = &self.hand;
        let half = h.finger_width / 2.0;
        let mut out = Vec::new();
        for p in &self.presses {
            let q = p.peak_kpa.min(BLANCH_SATURATION_KPA);
            let pressing = p.peak_kpa > 0.0;
            out.push(Finger {
                tip: p.center,
                base: h.palm_center,
                tip_radius: half.max(p.radius) * (1.0 + 0.3 * q / BLANCH_SATURATION_KPA),
                base_radius: half * 1.1,
                tip_height: if pressing { 0.0 } else { h.hover_height },
                base_height: h.palm_height,
            });
        }
        for tip in &h.idle_fingertips {
            out.push(Finger {
                tip: *tip,
                base: h.palm_center,
                tip_radius: half,
                base_radius: half * 1.1,
                tip_height: h.hover_height,
                base_height: h.palm_height,
            });
        }
        out
    }
}

pub fn synthesize_sample(spec: &SceneSpec) -> Result<FrameSample> {
    render_scene(spec).map(|r| r.sample)
}

pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let sensor = spec.sensor_pressure()?;
    let (cw, ch) = spec.canvas;
    let gt = warp_pressure(&sensor, &spec.homography, cw as usize, ch as usize)?;
    let inv = spec.homography.inverse()?;
    let fingers = spec.fingers();
    let hand = &spec.hand;
    let light = spec.light;
    let (sw, sh) = spec.sensor_dims;

    // shadow casters: samples along each finger plus the palm
    let mut casters: Vec<([f64; 2], f64, f64)> = Vec::new();
    for f in &fingers {
        for k in 0..8 {
            let (c, r, z) = f.point(k as f64 / 7.0);
            casters.push((c, r, z));
        }
    }
    casters.push((hand.palm_center, hand.palm_radius, hand.palm_height));
    let casters: Vec<([f64; 2], f64, f64, f64)> = casters
        .into_iter()
        .map(|(c, r, z)| {
            let center = [c[0] + light.direction[0] * z, c[1] + light.direction[1] * z];
            let softness = 0.7 + 0.35 * z;
            let amplitude = 0.8 / (1.0 + 0.04 * z);
            (center, r, softness, amplitude)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(1e-12)).expect("valid sigma");
    let blanch_norm = (1.0 + BLANCH_SATURATION_KPA / 0.5f64).ln();

    let n = (cw * ch) as usize;
    let mut hand_mask = vec![false; n];
    let mut shadow_mask = vec![false; n];
    let mut img = RgbImage::new(cw, ch);
    for v in 0..ch {
        for u in 0..cw {
            let p = inv.apply(u as f64, v as f64).unwrap_or([f64::NAN, f64::NAN]);
            let on_sensor = p[0] >= -0.5
                && p[1] >= -0.5
                && p[0] <= sw as f64 - 0.5
                && p[1] <= sh as f64 - 0.5;
            let base = if on_sensor {
                spec.surface_albedo
            } else {
                spec.table_albedo
            };

            let shadow = casters
                .iter()
                .map(|(c, r, s, a)| {
                    let d = (p[0] - c[0]).hypot(p[1] - c[1]) - r;
                    a * logistic(-2.0 * d / s)
                })
                .fold(0.0f64, f64::max);

            // nearest hand part
            let palm_d = (p[0] - hand.palm_center[0]).hypot(p[1] - hand.palm_center[1])
                - hand.palm_radius;
            let mut best = (palm_d, 0.5, hand.palm_radius);
            for f in &fingers {
                let d = f.distance(p);
                if d.0 < best.0 {
                    best = d;
                }
            }
            let alpha = (0.5 - best.0).clamp(0.0, 1.0);

            let idx = (v * cw + u) as usize;
            hand_mask[idx] = alpha > 0.05;
            shadow_mask[idx] = shadow > 0.05;

            let mut rgb = [0.0f64; 3];
            let ground_light = light.intensity * (1.0 - 0.6 * shadow);
            let axis = (1.0 - ((best.0 + best.2) / best.2.max(1e-6)).powi(2)).clamp(0.0, 1.0);
            let local_p = if alpha > 0.0 { spec.pressure_at(p) } else { 0.0 };
            let blanch = 0.85 * ((1.0 + local_p / 0.5).ln() / blanch_norm).min(1.0);
            for c in 0..3 {
                let ground = base[c] * ground_light;
                let skin = spec.skin_tone[c] * light.intensity * (0.88 + 0.12 * axis);
                let skin = skin + blanch * (BLANCH_COLOR[c] * light.intensity - skin);
                rgb[c] = alpha * skin + (1.0 - alpha) * ground;
            }
            let mut px = [0u8; 3];
            for c in 0..3 {
                let val = rgb[c] + noise.sample(&mut rng);
                px[c] = (val * 255.0).round().clamp(0.0, 255.0) as u8;
            }
            img.put_pixel(u, v, Rgb(px));
        }
    }
    let sample = FrameSample::new(img, gt, Some(sensor), spec.homography, spec.meta.clone())?;
    Ok(RenderedScene {
        sample,
        hand_mask,
        shadow_mask,
    })
}

/// Scene family used for desk-scale datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub canvas: (u32, u32),
    pub sensor_dims: (usize, usize),
    pub pixel_pitch: f64,
    pub n_cameras: usize,
    pub noise_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            canvas: (96, 96),
            sensor_dims: (80, 80),
            pixel_pitch: SENSOR_PITCH_M,
            n_cameras: 2,
            noise_sigma: 0.01,
        }
    }
}

/// Generator identity standing in for a participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Persona {
    pub id: String,
    pub skin_tone: [f64; 3],
    pub hand_scale: f64,
    pub surface_albedo: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Hover,
    PressOne(ForceLevel),
    PressTwo(ForceLevel),
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Hover => "hover",
            Action::PressOne(_) => "press_one",
            Action::PressTwo(_) => "press_two",
        }
    }

    pub fn force_level(&self) -> ForceLevel {
        match *self {
            Action::Hover => ForceLevel::None,
            Action::PressOne(f) | Action::PressTwo(f) => f,
        }
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn dir(theta: f64) -> [f64; 2] {
    [theta.sin(), -theta.cos()]
}

impl SynthConfig {
    pub fn persona(&self, i: usize) -> Persona {
        let tone = frac(0.5 + i as f64 * 0.618_033_988_75);
        let light_skin = [0.92, 0.74, 0.63];
        let dark_skin = [0.45, 0.30, 0.22];
        let vinyl = [0.66, 0.69, 0.74];
        let wood = [0.58, 0.46, 0.34];
        Persona {
            id: format!("p{i:02}"),
            skin_tone: lerp3(light_skin, dark_skin, tone),
            hand_scale: 0.9 + 0.2 * frac(i as f64 * 0.414_213_562),
            surface_albedo: if i % 5 == 3 { wood } else { vinyl },
        }
    }

    /// Fixed per-camera registration: sensor centered in the canvas with a
    /// small rotation and perspective tilt.
    pub fn camera_homography(&self, camera: usize) -> Homography {
        let (sw, sh) = self.sensor_dims;
        let (cw, ch) = self.canvas;
        let k = camera as f64 - (self.n_cameras as f64 - 1.0) / 2.0;
        let angle = 0.05 * k;
        let scale = (0.9 * cw.min(ch) as f64) / sw.max(sh) as f64;
        let (s, c) = angle.sin_cos();
        let to_origin = Mat3::translation(-(sw as f64 - 1.0) / 2.0, -(sh as f64 - 1.0) / 2.0);
        let rot_scale = Mat3([[scale * c, -scale * s, 0.0], [scale * s, scale * c, 0.0], [0.0, 0.0, 1.0]]);
        let tilt = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [3e-4 * k, 2e-4, 1.0]]);
        let to_canvas = Mat3::translation((cw as f64 - 1.0) / 2.0, (ch as f64 - 1.0) / 2.0);
        let m = to_canvas.mul(&tilt).mul(&rot_scale).mul(&to_origin);
        Homography::from_row_major(m.row_major()).expect("camera homography is invertible")
    }

    /// Draws one scene for `persona` performing `action`.
    pub fn random_scene(
        &self,
        persona: &Persona,
        action: Action,
        camera: usize,
        seed: u64,
        timestamp: f64,
    ) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ce0e);
        let hs = persona.hand_scale;
        let finger_width = 11.0 * hs;
        let finger_len = 30.0 * hs;
        let (sw, sh) = self.sensor_dims;

        let peak = |rng: &mut ChaCha8Rng| match action.force_level() {
            ForceLevel::High => rng.gen_range(30.0..82.0),
            ForceLevel::Low => rng.gen_range(3.0..15.0),
            ForceLevel::None => 0.0,
        };
        let radius_for = |rng: &mut ChaCha8Rng, q: f64| {
            finger_width / 2.0 * rng.gen_range(0.75..0.95) * (1.0 + 0.3 * q / BLANCH_SATURATION_KPA)
        };

        let theta: f64 = rng.gen_range(-0.8..0.8);
        let q0 = peak(&mut rng);
        let r0 = radius_for(&mut rng, q0);
        let margin = r0 + 1.0;
        let tip = [
            rng.gen_range(margin..sw as f64 - 1.0 - margin),
            rng.gen_range(margin..sh as f64 - 1.0 - margin),
        ];
        let back = [-dir(theta)[0], -dir(theta)[1]];
        let palm_center = [tip[0] + finger_len * back[0], tip[1] + finger_len * back[1]];
        let orientation = back[1].atan2(back[0]);
        let mut presses = vec![PressPrimitive {
            center: tip,
            radius: r0,
            peak_kpa: q0,
            orientation,
        }];

        let mut offsets = vec![-0.55, -0.27, 0.27, 0.55];
        if let Action::PressTwo(_) = action {
            let side = if rng.gen_bool(0.5) { 0.27 } else { -0.27 };
            let d = dir(theta + side);
            let len = finger_len * rng.gen_range(0.92..1.02);
            let t2 = [palm_center[0] + len * d[0], palm_center[1] + len * d[1]];
            let q1 = peak(&mut rng);
            let r1 = radius_for(&mut rng, q1);
            let inside = |v: f64, n: usize| v >= r1 + 1.0 && v <= n as f64 - 2.0 - r1;
            if inside(t2[0], sw) && inside(t2[1], sh) {
                presses.push(PressPrimitive {
                    center: t2,
                    radius: r1,
                    peak_kpa: q1,
                    orientation,
                });
                offsets.retain(|o: &f64| (o - side).abs() > 1e-9);
            }
        }
        let n_idle = rng.gen_range(1..=3usize).min(offsets.len());
        let mut idle_fingertips = Vec::new();
        for _ in 0..n_idle {
            let o = offsets.remove(rng.gen_range(0..offsets.len()));
            let d = dir(theta + o);
            let len = finger_len * rng.gen_range(0.8..0.98);
            idle_fingertips.push([palm_center[0] + len * d[0], palm_center[1] + len * d[1]]);
        }
        // thumb
        let ts = if rng.gen_bool(0.5) { 1.25 } else { -1.25 };
        let d = dir(theta + ts);
        idle_fingertips.push([
            palm_center[0] + 0.75 * finger_len * d[0],
            palm_center[1] + 0.75 * finger_len * d[1],
        ]);

        let light_angle = rng.gen_range(0.0..2.0 * PI);
        let light_mag = rng.gen_range(0.3..0.6);
        SceneSpec {
            canvas: self.canvas,
            sensor_dims: self.sensor_dims,
            pixel_pitch: self.pixel_pitch,
            homography: self.camera_homography(camera),
            presses,
            hand: HandSilhouette {
                palm_center,
                palm_radius: 16.0 * hs,
                palm_height: 14.0 * hs,
                finger_width,
                hover_height: rng.gen_range(5.0..10.0),
                idle_fingertips,
            },
            light: Lighting {
                direction: [light_mag * light_angle.cos(), light_mag * light_angle.sin()],
                intensity: rng.gen_range(0.85..1.15),
            },
            surface_albedo: persona.surface_albedo,
            table_albedo: [0.33, 0.29, 0.26],
            skin_tone: persona.skin_tone,
            noise_sigma: self.noise_sigma,
            seed,
            meta: FrameMeta {
                action: action.name().to_string(),
                force_level: action.force_level(),
                participant: persona.id.clone(),
                camera: format!("cam{camera}"),
                lighting: format!("{:.2}", light_angle),
                timestamp,
            },
        }
    }

    /// Scene specs for a dataset; scene `i` belongs to persona
    /// `i % n_personas` and depends only on `(seed, i)`.
    pub fn dataset_scenes(&self, n_scenes: usize, n_personas: usize, seed: u64) -> Vec<SceneSpec> {
        let personas: Vec<Persona> = (0..n_personas.max(1)).map(|i| self.persona(i)).collect();
        (0..n_scenes)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let persona = &personas[i % personas.len()];
                let force = if rng.gen_bool(0.5) {
                    ForceLevel::High
                } else {
                    ForceLevel::Low
                };
                let action = match rng.gen_range(0..100) {
                    0..=34 => Action::Hover,
                    35..=74 => Action::PressOne(force),
                    _ => Action::PressTwo(force),
                };
                let camera = rng.gen_range(0..self.n_cameras.max(1));
                let scene_seed: u64 = rng.gen();
                let t = (i / personas.len()) as f64 / crate::sync::SUBSAMPLE_RATE_HZ;
                self.random_scene(persona, action, camera, scene_seed, t)
            })
            .collect()
    }

    pub fn generate_dataset(
        &self,
        n_scenes: usize,
        n_personas: usize,
        seed: u64,
    ) -> Result<Vec<FrameSample>> {
        self.dataset_scenes(n_scenes, n_personas, seed)
            .iter()
            .map(synthesize_sample)
            .collect()
    }

    /// A single finger dragged across the sensor at constant pressure, one
    /// scene per frame at 15 Hz.
    pub fn stroke_scenes(&self, persona: &Persona, n_frames: usize, seed: u64) -> Vec<SceneSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sw, sh) = self.sensor_dims;
        let m = 12.0;
        let a = [rng.gen_range(m..sw as f64 / 2.0), rng.gen_range(m..sh as f64 - m)];
        let b = [rng.gen_range(sw as f64 / 2.0..sw as f64 - m), rng.gen_range(m..sh as f64 - m)];
        let q = rng.gen_range(15.0..40.0);
        let camera = rng.gen_range(0..self.n_cameras.max(1));
        let base_seed: u64 = rng.gen();
        let template = self.random_scene(persona, Action::PressOne(ForceLevel::High), camera, base_seed, 0.0);
        let p0 = template.presses[0];
        let palm_off = [
            template.hand.palm_center[0] - p0.center[0],
            template.hand.palm_center[1] - p0.center[1],
        ];
        (0..n_frames)
            .map(|k| {
                let t = if n_frames > 1 { k as f64 / (n_frames - 1) as f64 } else { 0.0 };
                let c = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let shift = [c[0] - p0.center[0], c[1] - p0.center[1]];
                let mut s = template.clone();
                s.presses = vec![PressPrimitive {
                    center: c,
                    peak_kpa: q,
                    ..p0
                }];
                s.hand.palm_center = [c[0] + palm_off[0], c[1] + palm_off[1]];
                s.hand.idle_fingertips = template
                    .hand
                    .idle_fingertips
                    .iter()
                    .map(|f| [f[0] + shift[0], f[1] + shift[1]])
                    .collect();
                s.seed = base_seed.wrapping_add(k as u64 + 1);
                s.meta.action = "stroke".into();
                s.meta.timestamp = k as f64 / crate::sync::SUBSAMPLE_RATE_HZ;
                s
            })
            .collect()
    }
}

/// Minimal 3x3 helper for composing the camera transforms.
mod mat3 {
    #[derive(Clone, Copy)]
    pub struct Mat3(pub [[f64; 3]; 3]);

    impl Mat3 {
        pub fn translation(tx: f64, ty: f64) -> Self {
            Mat3([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])
        }

        pub fn mul(&self, o: &Mat3) -> Mat3 {
            let mut r = [[0.0; 3]; 3];
            for (i, row) in r.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
                }
            }
            Mat3(r)
        }

        pub fn row_major(&self) -> [f64; 9] {
            let m = self.0;
            [
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pressure_core::{contact_map, total_force, DEFAULT_CONTACT_THRESHOLD_KPA};

    fn scene(presses: Vec<PressPrimitive>) -> SceneSpec {
        let cfg = SynthConfig::default();
        let mut s = cfg.random_scene(&cfg.persona(0), Action::PressOne(ForceLevel::High), 0, 11, 0.0);
        s.presses = presses;
        s
    }

    #[test]
    fn deterministic_for_same_spec() {
        let cfg = SynthConfig::default();
        let s = cfg.random_scene(&cfg.persona(3), Action::PressTwo(ForceLevel::Low), 1, 99, 0.5);
        let a = synthesize_sample(&s).unwrap();
        let b = synthesize_sample(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rgb.as_raw(), b.rgb.as_raw());
    }

    #[test]
    fn zero_peaks_give_zero_pressure_and_visible_hand() {
        let cfg = SynthConfig::default();
        let s = cfg.random_scene(&cfg.persona(1), Action::Hover, 0, 5, 0.0);
        assert!(s.presses.iter().all(|p| p.peak_kpa == 0.0));
        let r = render_scene(&s).unwrap();
        assert!(r.sample.pressure_gt.values().iter().all(|&v| v == 0.0));
        assert!(r.hand_mask.iter().filter(|&&m| m).count() > 200);
    }

    #[test]
    fn paraboloid_force_matches_closed_form() {
        for (q, r) in [(40.0, 10.0), (82.0, 6.0), (5.0, 14.5)] {
            let s = scene(vec![PressPrimitive {
                center: [40.0, 41.0],
                radius: r,
                peak_kpa: q,
                orientation: 0.0,
            }]);
            let f = total_force(&s.sensor_pressure().unwrap()).unwrap();
            let pitch = s.pixel_pitch;
            let analytic = q * 1000.0 * PI * r * r * pitch * pitch / 2.0;
            assert!((f - analytic).abs() <= 0.02 * analytic, "{f} vs {analytic}");
        }
    }

    #[test]
    fn outside_primitives_are_rejected() {
        let s = scene(vec![PressPrimitive {
            center: [200.0, 10.0],
            radius: 4.0,
            peak_kpa: 10.0,
            orientation: 0.0,
        }]);
        assert!(matches!(synthesize_sample(&s), Err(DataError::InvalidArgument(_))));
        let s = scene(vec![PressPrimitive {
            center: [20.0, 10.0],
            radius: 0.0,
            peak_kpa: 10.0,
            orientation: 0.0,
        }]);
        assert!(synthesize_sample(&s).is_err());
    }

    #[test]
    fn blanching_brightens_fingertip() {
        let mut s = scene(vec![PressPrimitive {
            center: [40.0, 40.0],
            radius: 5.0,
            peak_kpa: 60.0,
            orientation: 0.0,
        }]);
        s.noise_sigma = 0.0;
        let pressed = synthesize_sample(&s).unwrap();
        s.presses[0].peak_kpa = 0.0;
        let hover = synthesize_sample(&s).unwrap();
        let c = s.homography.apply(40.0, 40.0).unwrap();
        let (u, v) = (c[0].round() as u32, c[1].round() as u32);
        let lum = |img: &RgbImage| img.get_pixel(u, v).0.iter().map(|&x| x as u32).sum::<u32>();
        assert!(lum(&pressed.rgb) > lum(&hover.rgb) + 30);
    }

    #[test]
    fn contact_iff_peak_above_threshold() {
        let cfg = SynthConfig::default();
        for (i, s) in cfg.dataset_scenes(40, 4, 3).iter().enumerate() {
            let sample = synthesize_sample(s).unwrap();
            let any = contact_map(&sample.pressure_gt, DEFAULT_CONTACT_THRESHOLD_KPA)
                .unwrap()
                .any();
            let expect = s.presses.iter().any(|p| p.peak_kpa > DEFAULT_CONTACT_THRESHOLD_KPA);
            assert_eq!(any, expect, "scene {i}");
        }
    }

    #[test]
    fn dataset_scenes_depend_only_on_seed_and_index() {
        let cfg = SynthConfig::default();
        let a = cfg.dataset_scenes(12, 3, 7);
        let b = cfg.dataset_scenes(20, 3, 7);
        assert_eq!(&a[..], &b[..12]);
        assert_ne!(cfg.dataset_scenes(12, 3, 8), a);
    }

    #[test]
    fn stroke_moves_one_finger() {
        let cfg = SynthConfig::default();
        let frames = cfg.stroke_scenes(&cfg.persona(2), 10, 4);
        assert_eq!(frames.len(), 10);
        assert!(frames.iter().all(|s| s.presses.len() == 1 && s.presses[0].peak_kpa > 1.0));
        assert!(frames[0].presses[0].center != frames[9].presses[0].center);
        for s in &frames {
            s.validate().unwrap();
        }
    }
}
