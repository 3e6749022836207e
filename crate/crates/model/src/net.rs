//! Fully convolutional encoder-decoder producing per-pixel bin logits.
//!
//! The encoder is a strided pyramid (1/2 stem, then stages at 1/4, 1/8,
//! 1/16 and 1/32). The decoder walks the pyramid top-down: each level
//! upsamples the coarser map 2x, concatenates the encoder features of that
//! level and fuses them with a 3x3 convolution. A 1x1 head predicts bin
//! logits at 1/4 resolution, which are bilinearly resized to the input size.
//!
//! With `frames > 1` the encoder runs once per frame with shared weights and
//! the deepest features of all frames are concatenated (oldest first) before
//! the decoder; shallower skip features come from the last frame.

use pressure_core::{LabelImage, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conv::Conv;
use crate::error::{ModelError, Result};
use crate::tensor::{
    concat_channels, relu, relu_backward, resize_bilinear, resize_bilinear_backward, split_channels,
    upsample2, upsample2_backward, Scalar, Tensor,
};

/// Spatial reduction of the deepest pyramid level.
pub const MAX_STRIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Tiny,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(Preset::Tiny),
            "paper" => Ok(Preset::Paper),
            other => Err(ModelError::invalid(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub preset: Preset,
    pub input_w: usize,
    pub input_h: usize,
    /// Channels of the stem and the four encoder stages.
    pub widths: [usize; 5],
    pub convs_per_stage: usize,
    pub decoder_width: usize,
    pub n_bins: usize,
    /// Frames per prediction; 1 for single-image models.
    pub frames: usize,
}

impl ModelConfig {
    /// Desk-scale network for 96x96 inputs.
    pub fn tiny() -> Self {
        Self {
            preset: Preset::Tiny,
            input_w: 96,
            input_h: 96,
            widths: [16, 24, 32, 48, 64],
            convs_per_stage: 2,
            decoder_width: 32,
            n_bins: 9,
            frames: 1,
        }
    }

    /// Full-size 480x384 configuration with encoder widths of a ResNet-50
    /// class backbone. Far too slow to train on a CPU.
    pub fn paper() -> Self {
        Self {
            preset: Preset::Paper,
            input_w: 480,
            input_h: 384,
            widths: [64, 256, 512, 1024, 2048],
            convs_per_stage: 3,
            decoder_width: 128,
            n_bins: 9,
            frames: 1,
        }
    }

    pub fn from_preset(p: Preset) -> Self {
        match p {
            Preset::Tiny => Self::tiny(),
            Preset::Paper => Self::paper(),
        }
    }

    pub fn with_input(mut self, w: usize, h: usize) -> Self {
        self.input_w = w;
        self.input_h = h;
        self
    }

    pub fn with_frames(mut self, frames: usize) -> Self {
        self.frames = frames;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(self.input_w, self.input_h)?;
        if self.widths.contains(&0) || self.decoder_width == 0 || self.convs_per_stage == 0 {
            return Err(ModelError::invalid("layer widths must be positive"));
        }
        if !(2..=256).contains(&self.n_bins) {
            return Err(ModelError::invalid(format!("{} bins unsupported", self.n_bins)));
        }
        if self.frames == 0 {
            return Err(ModelError::invalid("frame count must be positive"));
        }
        Ok(())
    }

    fn encoder_convs(&self) -> usize {
        1 + 4 * self.convs_per_stage
    }
}

fn check_dims(w: usize, h: usize) -> Result<()> {
    if w == 0 || h == 0 || w % MAX_STRIDE != 0 || h % MAX_STRIDE != 0 {
        return Err(ModelError::invalid(format!(
            "input {w}x{h} must be a positive multiple of {MAX_STRIDE}"
        )));
    }
    Ok(())
}

/// Converts images to a normalized `N x 3 x H x W` tensor.
pub fn image_tensor<T: Scalar>(imgs: &[RgbImage]) -> Result<Tensor<T>> {
    let first = imgs.first().ok_or_else(|| ModelError::invalid("empty image batch"))?;
    let (w, h) = first.dimensions();
    let (w, h) = (w as usize, h as usize);
    let mut t = Tensor::zeros(imgs.len(), 3, h, w);
    let plane = w * h;
    for (i, img) in imgs.iter().enumerate() {
        if img.dimensions() != first.dimensions() {
            return Err(ModelError::invalid("images in a batch must share dimensions"));
        }
        let s = t.sample_mut(i);
        for (p, px) in img.pixels().enumerate() {
            for c in 0..3 {
                s[c * plane + p] = T::of((px[c] as f64 / 255.0 - 0.5) / 0.25);
            }
        }
    }
    Ok(t)
}

/// Per-parameter-tensor gradients, aligned with the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub weight: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

/// Activations kept from a forward pass for the backward pass.
pub struct Cache<T> {
    /// Per frame: the input followed by every encoder conv output.
    encoder: Vec<Vec<Tensor<T>>>,
    c5: Tensor<T>,
    /// Decoder level outputs, coarsest first: p5, p4, p3, p2.
    levels: Vec<Tensor<T>>,
    /// Inputs of the three fuse convolutions, coarsest first.
    fused_inputs: Vec<Tensor<T>>,
    head_dims: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureNet<T> {
    config: ModelConfig,
    layers: Vec<Conv<T>>,
    names: Vec<String>,
}

impl<T: Scalar> PressureNet<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w0, w1, w2, w3, w4] = config.widths;
        let d = config.decoder_width;
        let mut layers = vec![Conv::new(3, w0, 3, 2, &mut rng)];
        let mut names = vec!["stem".to_string()];
        let mut prev = w0;
        for (s, &w) in [w1, w2, w3, w4].iter().enumerate() {
            for j in 0..config.convs_per_stage {
                let stride = if j == 0 { 2 } else { 1 };
                layers.push(Conv::new(prev, w, 3, stride, &mut rng));
                names.push(format!("enc{}.{}", s + 1, j));
                prev = w;
            }
        }
        layers.push(Conv::new(config.frames * w4, d, 1, 1, &mut rng));
        names.push("lat5".into());
        for (name, skip) in [("fuse4", w3), ("fuse3", w2), ("fuse2", w1)] {
            layers.push(Conv::new(d + skip, d, 3, 1, &mut rng));
            names.push(name.into());
        }
        let mut head = Conv::new(d, config.n_bins, 1, 1, &mut rng);
        for v in head.weight.iter_mut() {
            *v *= T::of(0.1);
        }
        layers.push(head);
        names.push("head".into());
        Ok(Self { config, layers, names })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Conv<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Conv<T>] {
        &mut self.layers
    }

    pub fn layer_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads<T> {
        Grads {
            weight: self.layers.iter().map(|l| vec![T::zero(); l.weight.len()]).collect(),
            bias: self.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> PressureNet<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.to_f64().unwrap())).collect();
        PressureNet {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Conv {
                    in_c: l.in_c,
                    out_c: l.out_c,
                    k: l.k,
                    stride: l.stride,
                    pad: l.pad,
                    weight: conv(&l.weight),
                    bias: conv(&l.bias),
                })
                .collect(),
            names: self.names.clone(),
        }
    }

    fn idx_lat5(&self) -> usize {
        self.config.encoder_convs()
    }

    fn tap(&self, stage: usize) -> usize {
        1 + stage * self.config.convs_per_stage
    }

    fn check_frames(&self, frames: &[Tensor<T>]) -> Result<()> {
        if frames.len() != self.config.frames {
            return Err(ModelError::invalid(format!(
                "model takes {} frame(s), got {}",
                self.config.frames,
                frames.len()
            )));
        }
        let s = frames[0].shape();
        if frames.iter().any(|f| f.shape() != s) {
            return Err(ModelError::invalid("all frames must share one shape"));
        }
        if s[1] != 3 {
            return Err(ModelError::invalid(format!("expected 3 channels, got {}", s[1])));
        }
        check_dims(s[3], s[2])
    }

    fn encode(&self, x: &Tensor<T>) -> Vec<Tensor<T>> {
        let mut acts = Vec::with_capacity(self.config.encoder_convs() + 1);
        acts.push(x.clone());
        for conv in &self.layers[..self.config.encoder_convs()] {
            let mut y = conv.forward(acts.last().unwrap());
            relu(&mut y);
            acts.push(y);
        }
        acts
    }

    /// Logits `N x n_bins x H x W` plus the activations needed by
    /// [`Self::backward`]. `frames` holds one `N x 3 x H x W` tensor per
    /// time step.
    pub fn forward_cached(&self, frames: &[Tensor<T>]) -> Result<(Tensor<T>, Cache<T>)> {
        self.check_frames(frames)?;
        let encoder: Vec<Vec<Tensor<T>>> = frames.iter().map(|f| self.encode(f)).collect();
        let deepest = self.tap(4);
        let mut c5 = encoder[0][deepest].clone();
        for e in &encoder[1..] {
            c5 = concat_channels(&c5, &e[deepest]);
        }
        let last = encoder.last().unwrap();
        let lat = self.idx_lat5();
        let mut p = self.layers[lat].forward(&c5);
        let mut levels = vec![p.clone()];
        let mut fused_inputs = Vec::with_capacity(3);
        for (k, stage) in [3usize, 2, 1].into_iter().enumerate() {
            let cat = concat_channels(&upsample2(&p), &last[self.tap(stage)]);
            p = self.layers[lat + 1 + k].forward(&cat);
            relu(&mut p);
            fused_inputs.push(cat);
            levels.push(p.clone());
        }
        let q = self.layers[lat + 4].forward(&p);
        let head_dims = (q.h, q.w);
        let logits = resize_bilinear(&q, frames[0].h, frames[0].w);
        Ok((
            logits,
            Cache {
                encoder,
                c5,
                levels,
                fused_inputs,
                head_dims,
            },
        ))
    }

    pub fn forward_frames(&self, frames: &[Tensor<T>]) -> Result<Tensor<T>> {
        Ok(self.forward_cached(frames)?.0)
    }

    /// Single-frame forward pass.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward_frames(std::slice::from_ref(x))
    }

    /// Logits for a batch of images.
    pub fn forward_images(&self, imgs: &[RgbImage]) -> Result<Tensor<T>> {
        self.forward(&image_tensor(imgs)?)
    }

    /// Logits for one sequence of frames, oldest first.
    pub fn forward_temporal(&self, frames: &[RgbImage]) -> Result<Tensor<T>> {
        let tensors = frames
            .iter()
            .map(|f| image_tensor(std::slice::from_ref(f)))
            .collect::<Result<Vec<_>>>()?;
        self.forward_frames(&tensors)
    }

    /// Parameter gradients given the loss gradient w.r.t. the logits.
    pub fn backward(&self, cache: &Cache<T>, glogits: &Tensor<T>) -> Grads<T> {
        let mut grads = self.zero_grads();
        let lat = self.idx_lat5();
        let (qh, qw) = cache.head_dims;
        let gq = resize_bilinear_backward(glogits, qh, qw);
        let head = lat + 4;
        let mut gp = self.layers[head]
            .backward(&cache.levels[3], &gq, &mut grads.weight[head], &mut grads.bias[head], true)
            .unwrap();

        let d = self.config.decoder_width;
        let mut skip_grads: Vec<Option<Tensor<T>>> = vec![None; 5];
        for (k, stage) in [1usize, 2, 3].into_iter().enumerate() {
            let li = lat + 3 - k;
            relu_backward(&cache.levels[3 - k], &mut gp);
            let gcat = self.layers[li]
                .backward(&cache.fused_inputs[2 - k], &gp, &mut grads.weight[li], &mut grads.bias[li], true)
                .unwrap();
            let (gu, gskip) = split_channels(&gcat, d);
            skip_grads[stage] = Some(gskip);
            gp = upsample2_backward(&gu);
        }
        let gc5 = self.layers[lat]
            .backward(&cache.c5, &gp, &mut grads.weight[lat], &mut grads.bias[lat], true)
            .unwrap();

        let w4 = self.config.widths[4];
        let n_frames = cache.encoder.len();
        let mut rest = gc5;
        for f in 0..n_frames {
            let (mine, others) = if f + 1 < n_frames {
                split_channels(&rest, w4)
            } else {
                (rest.clone(), rest.clone())
            };
            rest = others;
            let mut taps: Vec<Option<Tensor<T>>> = vec![None; 5];
            taps[4] = Some(mine);
            if f + 1 == n_frames {
                for s in 1..4 {
                    taps[s] = skip_grads[s].take();
                }
            }
            self.encoder_backward(&cache.encoder[f], taps, &mut grads);
        }
        grads
    }

    fn encoder_backward(&self, acts: &[Tensor<T>], mut taps: Vec<Option<Tensor<T>>>, grads: &mut Grads<T>) {
        let mut g: Option<Tensor<T>> = None;
        for i in (0..self.config.encoder_convs()).rev() {
            if let Some(s) = (1..=4).find(|&s| self.tap(s) == i + 1) {
                if let Some(t) = taps[s].take() {
                    g = Some(match g {
                        Some(mut acc) => {
                            acc.add_assign(&t);
                            acc
                        }
                        None => t,
                    });
                }
            }
            let Some(mut gy) = g.take() else {
                continue;
            };
            relu_backward(&acts[i + 1], &mut gy);
            g = self.layers[i].backward(&acts[i], &gy, &mut grads.weight[i], &mut grads.bias[i], i > 0);
        }
    }

    /// Mean cross-entropy of the logits against `targets` (one label per
    /// output pixel, sample-major) and its parameter gradients.
    pub fn loss_and_grads(&self, frames: &[Tensor<T>], targets: &[u8]) -> Result<(f64, Grads<T>)> {
        let (logits, cache) = self.forward_cached(frames)?;
        let (loss, glogits) = cross_entropy(&logits, targets)?;
        Ok((loss, self.backward(&cache, &glogits)))
    }
}

/// Mean per-pixel softmax cross-entropy and its gradient w.r.t. the logits.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, targets: &[u8]) -> Result<(f64, Tensor<T>)> {
    let plane = logits.plane();
    if targets.len() != logits.n * plane {
        return Err(ModelError::invalid(format!(
            "{} targets for {} output pixels",
            targets.len(),
            logits.n * plane
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t as usize >= logits.c) {
        return Err(ModelError::invalid(format!("label {bad} outside {} bins", logits.c)));
    }
    let count = targets.len() as f64;
    let mut grad = Tensor::zeros(logits.n, logits.c, logits.h, logits.w);
    let mut total = 0.0f64;
    let mut probs = vec![0.0f64; logits.c];
    for n in 0..logits.n {
        let src = logits.sample(n);
        let dst = grad.sample_mut(n);
        for p in 0..plane {
            let mut max = f64::NEG_INFINITY;
            for k in 0..logits.c {
                max = max.max(src[k * plane + p].to_f64().unwrap());
            }
            let mut z = 0.0;
            for (k, pr) in probs.iter_mut().enumerate() {
                *pr = (src[k * plane + p].to_f64().unwrap() - max).exp();
                z += *pr;
            }
            let t = targets[n * plane + p] as usize;
            total += z.ln() - (src[t * plane + p].to_f64().unwrap() - max);
            for (k, pr) in probs.iter().enumerate() {
                let onehot = if k == t { 1.0 } else { 0.0 };
                dst[k * plane + p] = T::of((pr / z - onehot) / count);
            }
        }
    }
    Ok((total / count, grad))
}

/// Mean cross-entropy of `logits` against label images.
pub fn loss<T: Scalar>(logits: &Tensor<T>, target: &[LabelImage]) -> Result<f64> {
    if target.len() != logits.n || target.iter().any(|t| t.dims() != (logits.w, logits.h)) {
        return Err(ModelError::invalid("targets do not match the logit volume"));
    }
    let flat: Vec<u8> = target.iter().flat_map(|t| t.labels().iter().copied()).collect();
    Ok(cross_entropy(logits, &flat)?.0)
}

/// Per-pixel softmax probabilities.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let plane = logits.plane();
    let mut out = logits.clone();
    for n in 0..logits.n {
        let s = out.sample_mut(n);
        for p in 0..plane {
            let mut max = T::neg_infinity();
            for k in 0..logits.c {
                max = max.max(s[k * plane + p]);
            }
            let mut z = T::zero();
            for k in 0..logits.c {
                let e = (s[k * plane + p] - max).exp();
                s[k * plane + p] = e;
                z += e;
            }
            for k in 0..logits.c {
                s[k * plane + p] = s[k * plane + p] / z;
            }
        }
    }
    out
}

/// Per-pixel argmax; ties go to the lower bin.
pub fn argmax_labels<T: Scalar>(logits: &Tensor<T>) -> Vec<LabelImage> {
    let plane = logits.plane();
    (0..logits.n)
        .map(|n| {
            let s = logits.sample(n);
            let labels = (0..plane)
                .map(|p| {
                    let mut best = 0;
                    for k in 1..logits.c {
                        if s[k * plane + p] > s[best * plane + p] {
                            best = k;
                        }
                    }
                    best as u8
                })
                .collect();
            LabelImage::new(logits.w, logits.h, labels).expect("label buffer sized to logits")
        })
        .collect()
}
