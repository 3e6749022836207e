use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Element type of network tensors. Training runs in `f32`; `f64` exists
/// for finite-difference gradient checks.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    /// `c = a·b + beta·c` for row-major `a` (m×k, or k×m when `ta`), `b`
    /// (k×n, or n×k when `tb`) and `c` (m×n).
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], ta: bool, b: &[Self], tb: bool, beta: Self, c: &mut [Self]);

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("representable")
    }
}

fn strides(rows: usize, cols: usize, transposed: bool) -> (isize, isize) {
    // element (i, j) of the logical rows x cols matrix
    if transposed {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_scalar {
    ($t:ty, $f:path) => {
        impl Scalar for $t {
            fn gemm(m: usize, k: usize, n: usize, a: &[$t], ta: bool, b: &[$t], tb: bool, beta: $t, c: &mut [$t]) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                let (rsa, csa) = strides(m, k, ta);
                let (rsb, csb) = strides(k, n, tb);
                // SAFETY: slice lengths cover every index reached with these strides
                unsafe {
                    $f(
                        m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta,
                        c.as_mut_ptr(), n as isize, 1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// Dense `N x C x H x W` tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c,
            h,
            w,
            data: vec![T::zero(); n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * c * h * w, "tensor buffer size");
        Self { n, c, h, w, data }
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    /// Values of sample `i`, all channels.
    pub fn sample(&self, i: usize) -> &[T] {
        let s = self.c * self.plane();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let s = self.c * self.plane();
        &mut self.data[i * s..(i + 1) * s]
    }

    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[((n * self.c + c) * self.h + y) * self.w + x]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| U::of(v.to_f64().unwrap())).collect(),
        }
    }
}

/// Stacks `a` and `b` along channels.
pub fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_eq!((a.n, a.h, a.w), (b.n, b.h, b.w), "concat shape");
    let mut out = Tensor::zeros(a.n, a.c + b.c, a.h, a.w);
    for i in 0..a.n {
        let s = out.sample_mut(i);
        let k = a.sample(i).len();
        s[..k].copy_from_slice(a.sample(i));
        s[k..].copy_from_slice(b.sample(i));
    }
    out
}

/// Inverse of [`concat_channels`]: the first `ca` channels, then the rest.
pub fn split_channels<T: Scalar>(t: &Tensor<T>, ca: usize) -> (Tensor<T>, Tensor<T>) {
    let cb = t.c - ca;
    let mut a = Tensor::zeros(t.n, ca, t.h, t.w);
    let mut b = Tensor::zeros(t.n, cb, t.h, t.w);
    for i in 0..t.n {
        let s = t.sample(i);
        let k = ca * t.plane();
        a.sample_mut(i).copy_from_slice(&s[..k]);
        b.sample_mut(i).copy_from_slice(&s[k..]);
    }
    (a, b)
}

/// In-place ReLU.
pub fn relu<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub fn relu_backward<T: Scalar>(out: &Tensor<T>, grad: &mut Tensor<T>) {
    for (g, &y) in grad.data.iter_mut().zip(&out.data) {
        if y <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let (h, w) = (t.h * 2, t.w * 2);
    let mut out = Tensor::zeros(t.n, t.c, h, w);
    for nc in 0..t.n * t.c {
        let src = &t.data[nc * t.plane()..(nc + 1) * t.plane()];
        let dst = &mut out.data[nc * h * w..(nc + 1) * h * w];
        for y in 0..h {
            for x in 0..w {
                dst[y * w + x] = src[(y / 2) * t.w + x / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Scalar>(g: &Tensor<T>) -> Tensor<T> {
    let (h, w) = (g.h / 2, g.w / 2);
    let mut out = Tensor::zeros(g.n, g.c, h, w);
    for nc in 0..g.n * g.c {
        let src = &g.data[nc * g.plane()..(nc + 1) * g.plane()];
        let dst = &mut out.data[nc * h * w..(nc + 1) * h * w];
        for y in 0..g.h {
            for x in 0..g.w {
                dst[(y / 2) * w + x / 2] += src[y * g.w + x];
            }
        }
    }
    out
}

/// Source taps of half-pixel-center linear interpolation along one axis.
fn linear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (s.floor() as usize).min(src - 1);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize with half-pixel centers, as used to bring quarter
/// resolution logits to full resolution.
pub fn resize_bilinear<T: Scalar>(t: &Tensor<T>, h: usize, w: usize) -> Tensor<T> {
    let ty = linear_taps(t.h, h);
    let tx = linear_taps(t.w, w);
    let mut out = Tensor::zeros(t.n, t.c, h, w);
    for nc in 0..t.n * t.c {
        let src = &t.data[nc * t.plane()..(nc + 1) * t.plane()];
        let dst = &mut out.data[nc * h * w..(nc + 1) * h * w];
        for (y, &(y0, y1, fy)) in ty.iter().enumerate() {
            let fy = T::of(fy);
            for (x, &(x0, x1, fx)) in tx.iter().enumerate() {
                let fx = T::of(fx);
                let top = src[y0 * t.w + x0] * (T::one() - fx) + src[y0 * t.w + x1] * fx;
                let bot = src[y1 * t.w + x0] * (T::one() - fx) + src[y1 * t.w + x1] * fx;
                dst[y * w + x] = top * (T::one() - fy) + bot * fy;
            }
        }
    }
    out
}

pub fn resize_bilinear_backward<T: Scalar>(g: &Tensor<T>, h: usize, w: usize) -> Tensor<T> {
    let ty = linear_taps(h, g.h);
    let tx = linear_taps(w, g.w);
    let mut out = Tensor::zeros(g.n, g.c, h, w);
    for nc in 0..g.n * g.c {
        let src = &g.data[nc * g.plane()..(nc + 1) * g.plane()];
        let dst = &mut out.data[nc * h * w..(nc + 1) * h * w];
        for (y, &(y0, y1, fy)) in ty.iter().enumerate() {
            let fy = T::of(fy);
            for (x, &(x0, x1, fx)) in tx.iter().enumerate() {
                let fx = T::of(fx);
                let v = src[y * g.w + x];
                dst[y0 * w + x0] += v * (T::one() - fy) * (T::one() - fx);
                dst[y0 * w + x1] += v * (T::one() - fy) * fx;
                dst[y1 * w + x0] += v * fy * (T::one() - fx);
                dst[y1 * w + x1] += v * fy * fx;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposes() {
        // a = [[1,2],[3,4]], b = [[5,6],[7,8]]
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [5.0f64, 6.0, 7.0, 8.0];
        let mut c = [0.0; 4];
        f64::gemm(2, 2, 2, &a, false, &b, false, 0.0, &mut c);
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
        f64::gemm(2, 2, 2, &a, true, &b, false, 0.0, &mut c);
        assert_eq!(c, [26.0, 30.0, 38.0, 44.0]);
        f64::gemm(2, 2, 2, &a, false, &b, true, 1.0, &mut c);
        assert_eq!(c, [26.0 + 17.0, 30.0 + 23.0, 38.0 + 39.0, 44.0 + 53.0]);
    }

    #[test]
    fn concat_split_round_trip() {
        let a = Tensor::from_vec(2, 1, 1, 2, vec![1.0f32, 2.0, 3.0, 4.0]);
        let b = Tensor::from_vec(2, 2, 1, 2, (0..8).map(|v| v as f32).collect());
        let c = concat_channels(&a, &b);
        assert_eq!(c.sample(1), &[3.0, 4.0, 4.0, 5.0, 6.0, 7.0]);
        let (a2, b2) = split_channels(&c, 1);
        assert_eq!((a2, b2), (a, b));
    }

    #[test]
    fn resize_preserves_constants_and_is_adjoint() {
        let t = Tensor::from_vec(1, 1, 3, 3, vec![2.0f64; 9]);
        assert!(resize_bilinear(&t, 12, 12).data.iter().all(|v| (*v - 2.0).abs() < 1e-12));

        // <R x, y> == <x, R^T y>
        let x = Tensor::from_vec(1, 1, 3, 4, (0..12).map(|v| (v as f64 * 0.37).sin()).collect());
        let y = Tensor::from_vec(1, 1, 12, 16, (0..192).map(|v| (v as f64 * 0.11).cos()).collect());
        let rx = resize_bilinear(&x, 12, 16);
        let rty = resize_bilinear_backward(&y, 3, 4);
        let l: f64 = rx.data.iter().zip(&y.data).map(|(a, b)| a * b).sum();
        let r: f64 = x.data.iter().zip(&rty.data).map(|(a, b)| a * b).sum();
        assert!((l - r).abs() < 1e-10);

        let u = upsample2(&x);
        let y2 = Tensor::from_vec(1, 1, 6, 8, (0..48).map(|v| v as f64).collect());
        let l: f64 = u.data.iter().zip(&y2.data).map(|(a, b)| a * b).sum();
        let r: f64 = x.data.iter().zip(&upsample2_backward(&y2).data).map(|(a, b)| a * b).sum();
        assert!((l - r).abs() < 1e-9);
    }
}
