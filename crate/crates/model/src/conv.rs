use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::tensor::{Scalar, Tensor};

/// 2-D convolution with square kernel, symmetric zero padding and bias.
/// Weights are `out_c x in_c x k x k`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv<T> {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv<T> {
    /// He-normal weights, zero bias.
    pub fn new<R: Rng>(in_c: usize, out_c: usize, k: usize, stride: usize, rng: &mut R) -> Self {
        let fan_in = (in_c * k * k) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("valid std");
        Self {
            in_c,
            out_c,
            k,
            stride,
            pad: k / 2,
            weight: (0..out_c * in_c * k * k).map(|_| T::of(normal.sample(rng))).collect(),
            bias: vec![T::zero(); out_c],
        }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.k) / self.stride + 1,
            (w + 2 * self.pad - self.k) / self.stride + 1,
        )
    }

    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad == 0
    }

    fn im2col(&self, x: &[T], h: usize, w: usize, cols: &mut [T]) {
        let (oh, ow) = self.out_dims(h, w);
        let p = oh * ow;
        let (k, s, pad) = (self.k, self.stride, self.pad as isize);
        for c in 0..self.in_c {
            let src = &x[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut cols[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - pad;
                        let dst = &mut row[oy * ow..(oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            dst.fill(T::zero());
                            continue;
                        }
                        let line = &src[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * s + kx) as isize - pad;
                            *d = if ix < 0 || ix >= w as isize {
                                T::zero()
                            } else {
                                line[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[T], h: usize, w: usize, gx: &mut [T]) {
        let (oh, ow) = self.out_dims(h, w);
        let p = oh * ow;
        let (k, s, pad) = (self.k, self.stride, self.pad as isize);
        for c in 0..self.in_c {
            let dst = &mut gx[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &cols[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - pad;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let line = &mut dst[iy as usize * w..(iy as usize + 1) * w];
                        for ox in 0..ow {
                            let ix = (ox * s + kx) as isize - pad;
                            if ix >= 0 && ix < w as isize {
                                line[ix as usize] += row[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Tensor<T> {
        assert_eq!(x.c, self.in_c, "conv input channels");
        let (oh, ow) = self.out_dims(x.h, x.w);
        let p = oh * ow;
        let ck = self.in_c * self.k * self.k;
        let mut y = Tensor::zeros(x.n, self.out_c, oh, ow);
        let mut cols = if self.is_pointwise() { Vec::new() } else { vec![T::zero(); ck * p] };
        for i in 0..x.n {
            let out = y.sample_mut(i);
            for (o, b) in self.bias.iter().enumerate() {
                out[o * p..(o + 1) * p].fill(*b);
            }
            let src: &[T] = if self.is_pointwise() {
                x.sample(i)
            } else {
                self.im2col(x.sample(i), x.h, x.w, &mut cols);
                &cols
            };
            T::gemm(self.out_c, ck, p, &self.weight, false, src, false, T::one(), out);
        }
        y
    }

    /// Accumulates parameter gradients into `gw`/`gb` and returns the input
    /// gradient when `want_input` is set.
    pub fn backward(
        &self,
        x: &Tensor<T>,
        gy: &Tensor<T>,
        gw: &mut [T],
        gb: &mut [T],
        want_input: bool,
    ) -> Option<Tensor<T>> {
        let (oh, ow) = self.out_dims(x.h, x.w);
        assert_eq!(gy.shape(), [x.n, self.out_c, oh, ow], "conv grad shape");
        let p = oh * ow;
        let ck = self.in_c * self.k * self.k;
        let mut cols = if self.is_pointwise() { Vec::new() } else { vec![T::zero(); ck * p] };
        let mut gcols = vec![T::zero(); ck * p];
        let mut gx = want_input.then(|| Tensor::zeros(x.n, x.c, x.h, x.w));
        for i in 0..x.n {
            let g = gy.sample(i);
            for (o, b) in gb.iter_mut().enumerate() {
                let mut s = T::zero();
                for &v in &g[o * p..(o + 1) * p] {
                    s += v;
                }
                *b += s;
            }
            let src: &[T] = if self.is_pointwise() {
                x.sample(i)
            } else {
                self.im2col(x.sample(i), x.h, x.w, &mut cols);
                &cols
            };
            T::gemm(self.out_c, p, ck, g, false, src, true, T::one(), gw);
            if let Some(gx) = gx.as_mut() {
                if self.is_pointwise() {
                    T::gemm(ck, self.out_c, p, &self.weight, true, g, false, T::zero(), gx.sample_mut(i));
                } else {
                    T::gemm(ck, self.out_c, p, &self.weight, true, g, false, T::zero(), &mut gcols);
                    self.col2im(&gcols, x.h, x.w, gx.sample_mut(i));
                }
            }
        }
        gx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct nested-loop convolution.
    fn naive(c: &Conv<f64>, x: &Tensor<f64>) -> Tensor<f64> {
        let (oh, ow) = c.out_dims(x.h, x.w);
        let mut y = Tensor::zeros(x.n, c.out_c, oh, ow);
        for n in 0..x.n {
            for o in 0..c.out_c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut s = c.bias[o];
                        for i in 0..c.in_c {
                            for ky in 0..c.k {
                                for kx in 0..c.k {
                                    let iy = (oy * c.stride + ky) as isize - c.pad as isize;
                                    let ix = (ox * c.stride + kx) as isize - c.pad as isize;
                                    if iy >= 0 && ix >= 0 && (iy as usize) < x.h && (ix as usize) < x.w {
                                        s += c.weight[((o * c.in_c + i) * c.k + ky) * c.k + kx]
                                            * x.at(n, i, iy as usize, ix as usize);
                                    }
                                }
                            }
                        }
                        y.data[((n * c.out_c + o) * oh + oy) * ow + ox] = s;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn matches_naive_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, stride) in [(3, 1), (3, 2), (1, 1)] {
            let mut c = Conv::<f64>::new(3, 4, k, stride, &mut rng);
            c.bias = vec![0.1, -0.2, 0.3, 0.0];
            let x = Tensor::from_vec(2, 3, 6, 8, (0..288).map(|v| (v as f64 * 0.7).sin()).collect());
            let fast = c.forward(&x);
            let slow = naive(&c, &x);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data.iter().zip(&slow.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn input_gradient_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (k, stride) in [(3, 1), (3, 2), (1, 1)] {
            let c = Conv::<f64>::new(2, 3, k, stride, &mut rng);
            let zero_bias = Conv { bias: vec![0.0; 3], ..c.clone() };
            let x = Tensor::from_vec(1, 2, 6, 6, (0..72).map(|v| (v as f64 * 0.3).cos()).collect());
            let y = zero_bias.forward(&x);
            let g = Tensor::from_vec(1, 3, y.h, y.w, (0..y.data.len()).map(|v| (v as f64 * 0.9).sin()).collect());
            let mut gw = vec![0.0; c.weight.len()];
            let mut gb = vec![0.0; 3];
            let gx = zero_bias.backward(&x, &g, &mut gw, &mut gb, true).unwrap();
            let l: f64 = y.data.iter().zip(&g.data).map(|(a, b)| a * b).sum();
            let r: f64 = x.data.iter().zip(&gx.data).map(|(a, b)| a * b).sum();
            assert!((l - r).abs() < 1e-10);
            // linear in weights: <y, g> = <w, gw>
            let r2: f64 = zero_bias.weight.iter().zip(&gw).map(|(a, b)| a * b).sum();
            assert!((l - r2).abs() < 1e-10);
            assert!((gb.iter().sum::<f64>() - g.data.iter().sum::<f64>()).abs() < 1e-10);
        }
    }
}
