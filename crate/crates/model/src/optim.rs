use crate::net::{Grads, PressureNet};
use crate::tensor::Scalar;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Grads<T>,
    v: Grads<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &PressureNet<T>) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: net.zero_grads(),
            v: net.zero_grads(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut PressureNet<T>, grads: &Grads<T>, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let (one, eps) = (T::one(), T::of(self.eps));
        let (step_size, c2) = (T::of(lr / c1), T::of(c2));
        let update = |p: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                p[i] = p[i] - step_size * m[i] / ((v[i] / c2).sqrt() + eps);
            }
        };
        for (li, layer) in net.layers_mut().iter_mut().enumerate() {
            update(&mut layer.weight, &grads.weight[li], &mut self.m.weight[li], &mut self.v.weight[li]);
            update(&mut layer.bias, &grads.bias[li], &mut self.m.bias[li], &mut self.v.bias[li]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ModelConfig;

    #[test]
    fn first_step_moves_each_parameter_by_lr() {
        let cfg = ModelConfig {
            widths: [2, 2, 2, 2, 2],
            decoder_width: 2,
            convs_per_stage: 1,
            ..ModelConfig::tiny().with_input(32, 32)
        };
        let mut net = PressureNet::<f64>::new(cfg, 0).unwrap();
        let before = net.clone();
        let mut grads = net.zero_grads();
        for (i, g) in grads.weight.iter_mut().flatten().enumerate() {
            *g = if i % 2 == 0 { 0.3 } else { -2.0 };
        }
        let mut adam = Adam::new(&net);
        adam.step(&mut net, &grads, 1e-3);
        for (a, b) in net.layers().iter().zip(before.layers()) {
            for (x, y) in a.weight.iter().zip(&b.weight) {
                assert!(((x - y).abs() - 1e-3).abs() < 1e-8);
            }
            assert_eq!(a.bias, b.bias);
        }
    }
}
