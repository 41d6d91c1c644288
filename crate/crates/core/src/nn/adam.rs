use alloc::vec::Vec;
use core::marker::PhantomData;

use super::{Gradients, Model, Scalar, Tensor};
use crate::{Error, Result};

/// Adaptive-moment optimizer state (first and second moment per parameter).
///
/// Moments are kept in `f64` whatever the parameter type, and moments below
/// [`FLUSH`] are set to zero: weights that stop receiving gradient (dead
/// ReLUs) would otherwise decay their moments into the subnormal range,
/// where arithmetic is two orders of magnitude slower.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    /// First-moment decay.
    pub beta1: f64,
    /// Second-moment decay.
    pub beta2: f64,
    /// Denominator guard.
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> Adam<T> {
    /// Zeroed state shaped like `model`, with the usual (0.9, 0.999, 1e-8).
    pub fn new(model: &Model<T>) -> Self {
        Self::for_shapes(model.params())
    }

    /// Zeroed state shaped like `params`.
    pub fn for_shapes(params: &[Tensor<T>]) -> Self {
        let zeros = || params.iter().map(|p| alloc::vec![0.0; p.len()]).collect::<Vec<_>>();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros(), v: zeros(), _scalar: PhantomData }
    }

    /// Number of steps taken.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected update with learning rate `lr`.
    ///
    /// Rejects non-finite gradients before touching any state.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &Gradients<T>, lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.tensors.len() != self.m.len() {
            return Err(Error::Shape {
                expected: alloc::vec![self.m.len()],
                actual: alloc::vec![params.len(), grads.tensors.len()],
            });
        }
        for ((p, g), m) in params.iter().zip(&grads.tensors).zip(&self.m) {
            if p.len() != m.len() || g.shape() != p.shape() {
                return Err(Error::Shape { expected: p.shape().to_vec(), actual: g.shape().to_vec() });
            }
        }
        if !grads.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        self.step += 1;
        let t = self.step as f64;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - libm::pow(b1, t);
        let c2 = 1.0 - libm::pow(b2, t);
        // lr * sqrt(c2) / c1 folded into one step size
        let step_size = lr * libm::sqrt(c2) / c1;
        let eps = self.eps * libm::sqrt(c2);
        for (((p, g), m), v) in params.iter_mut().zip(&grads.tensors).zip(&mut self.m).zip(&mut self.v) {
            let (w, g) = (p.data_mut(), g.data());
            let n = w.len();
            let (m, v) = (&mut m[..n], &mut v[..n]);
            for i in 0..n {
                let gi = g[i].f64();
                m[i] = flush(b1 * m[i] + (1.0 - b1) * gi);
                v[i] = flush(b2 * v[i] + (1.0 - b2) * gi * gi);
                w[i] = T::of(w[i].f64() - step_size * m[i] / (libm::sqrt(v[i]) + eps));
            }
        }
        Ok(())
    }
}

/// Magnitude below which a moment is treated as zero.
pub const FLUSH: f64 = 1e-200;

fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH {
        0.0
    } else {
        x
    }
}
