use alloc::vec::Vec;

use super::Scalar;

/// 1-D convolution with odd kernel and same-length zero padding.
///
/// Weights are `[out][in][kernel]`, biases `[out]`; activations are
/// `[channels][batch][len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1d {
    /// Input channels.
    pub in_channels: usize,
    /// Output channels.
    pub out_channels: usize,
    /// Kernel width (odd).
    pub kernel: usize,
}

impl Conv1d {
    /// Number of weight elements.
    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel
    }

    fn pad(&self) -> usize {
        self.kernel / 2
    }

    /// Unrolls `x` into `cols` (`[in*kernel][batch*len]`). Every element of
    /// `cols` is written, so the buffer can be reused without clearing.
    fn im2col<T: Scalar>(&self, x: &[T], batch: usize, len: usize, cols: &mut Vec<T>) {
        let bl = batch * len;
        let pad = self.pad() as isize;
        set_len(cols, self.in_channels * self.kernel * bl);
        for ci in 0..self.in_channels {
            let xc = &x[ci * bl..(ci + 1) * bl];
            for j in 0..self.kernel {
                let shift = j as isize - pad;
                let row = &mut cols[(ci * self.kernel + j) * bl..(ci * self.kernel + j + 1) * bl];
                // dst[l] = src[l + shift] where in range, zero elsewhere
                let lo = ((-shift).max(0) as usize).min(len);
                let hi = ((len as isize - shift).min(len as isize).max(0) as usize).max(lo);
                for b in 0..batch {
                    let src = &xc[b * len..(b + 1) * len];
                    let dst = &mut row[b * len..(b + 1) * len];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    if lo < hi {
                        let s0 = (lo as isize + shift) as usize;
                        dst[lo..hi].copy_from_slice(&src[s0..s0 + (hi - lo)]);
                    }
                }
            }
        }
    }

    /// `y = W * im2col(x) + b`; leaves the unrolled input in `cols` for the
    /// backward pass.
    #[allow(clippy::too_many_arguments)]
    pub fn forward<T: Scalar>(
        &self,
        weight: &[T],
        bias: &[T],
        x: &[T],
        batch: usize,
        len: usize,
        cols: &mut Vec<T>,
        y: &mut Vec<T>,
    ) {
        debug_assert_eq!(x.len(), self.in_channels * batch * len);
        let bl = batch * len;
        self.im2col(x, batch, len, cols);
        set_len(y, self.out_channels * bl);
        for (row, &b) in y.chunks_exact_mut(bl).zip(bias) {
            row.fill(b);
        }
        T::gemm(
            false,
            false,
            self.out_channels,
            bl,
            self.in_channels * self.kernel,
            T::one(),
            weight,
            cols,
            T::one(),
            y,
        );
    }

    /// Gradients of weights and biases from `dy` (overwritten, not
    /// accumulated); when `dx` is given it receives the gradient with respect
    /// to the layer input, using `scratch` for the unrolled gradient.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Scalar>(
        &self,
        weight: &[T],
        cols: &[T],
        dy: &[T],
        batch: usize,
        len: usize,
        d_weight: &mut [T],
        d_bias: &mut [T],
        scratch: &mut Vec<T>,
        dx: Option<&mut Vec<T>>,
    ) {
        let bl = batch * len;
        let rows = self.in_channels * self.kernel;
        T::gemm(false, true, self.out_channels, rows, bl, T::one(), dy, cols, T::zero(), d_weight);
        for (db, row) in d_bias.iter_mut().zip(dy.chunks_exact(bl)) {
            *db = row.iter().copied().sum();
        }
        let Some(dx) = dx else { return };
        let dcols = scratch;
        set_len(dcols, rows * bl);
        T::gemm(true, false, rows, bl, self.out_channels, T::one(), weight, dy, T::zero(), dcols);
        // col2im
        set_len(dx, self.in_channels * bl);
        dx.fill(T::zero());
        let pad = self.pad() as isize;
        for ci in 0..self.in_channels {
            let dxc = &mut dx[ci * bl..(ci + 1) * bl];
            for j in 0..self.kernel {
                let shift = j as isize - pad;
                let row = &dcols[(ci * self.kernel + j) * bl..(ci * self.kernel + j + 1) * bl];
                for b in 0..batch {
                    let src = &row[b * len..(b + 1) * len];
                    let dst = &mut dxc[b * len..(b + 1) * len];
                    let lo = (-shift).max(0) as usize;
                    let hi = (len as isize - shift).min(len as isize).max(0) as usize;
                    if lo < hi {
                        let t0 = (lo as isize + shift) as usize;
                        for (d, &s) in dst[t0..t0 + (hi - lo)].iter_mut().zip(&src[lo..hi]) {
                            *d = *d + s;
                        }
                    }
                }
            }
        }
    }
}

/// Resizes `v` to `n` elements without touching the ones it keeps.
pub(crate) fn set_len<T: Scalar>(v: &mut Vec<T>, n: usize) {
    v.truncate(n);
    v.resize(n, T::zero());
}

/// Fully connected layer; weights `[out][in]`, activations `[batch][features]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    /// Input features.
    pub inputs: usize,
    /// Output features.
    pub outputs: usize,
}

impl Dense {
    /// Number of weight elements.
    pub fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    /// `y = x Wᵀ + b`.
    pub fn forward<T: Scalar>(&self, weight: &[T], bias: &[T], x: &[T], batch: usize, y: &mut Vec<T>) {
        debug_assert_eq!(x.len(), batch * self.inputs);
        y.clear();
        y.reserve(batch * self.outputs);
        for _ in 0..batch {
            y.extend_from_slice(bias);
        }
        T::gemm(false, true, batch, self.outputs, self.inputs, T::one(), x, weight, T::one(), y);
    }

    /// Gradients of weights and biases; optional input gradient.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Scalar>(
        &self,
        weight: &[T],
        x: &[T],
        dy: &[T],
        batch: usize,
        d_weight: &mut [T],
        d_bias: &mut [T],
        dx: Option<&mut Vec<T>>,
    ) {
        T::gemm(true, false, self.outputs, self.inputs, batch, T::one(), dy, x, T::zero(), d_weight);
        d_bias.fill(T::zero());
        for row in dy.chunks_exact(self.outputs) {
            for (db, &g) in d_bias.iter_mut().zip(row) {
                *db = *db + g;
            }
        }
        if let Some(dx) = dx {
            set_len(dx, batch * self.inputs);
            T::gemm(false, false, batch, self.inputs, self.outputs, T::one(), dy, weight, T::zero(), dx);
        }
    }
}

/// In-place ReLU.
pub fn relu_forward<T: Scalar>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Masks `grad` by the ReLU derivative, read off the activated output
/// (derivative 0 at the kink).
pub fn relu_backward<T: Scalar>(activated: &[T], grad: &mut [T]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}

/// `[channels][batch][len]` to `[batch][channels * len]`.
pub fn flatten_channels<T: Scalar>(x: &[T], channels: usize, batch: usize, len: usize, y: &mut Vec<T>) {
    y.clear();
    y.reserve(x.len());
    for b in 0..batch {
        for c in 0..channels {
            let start = (c * batch + b) * len;
            y.extend_from_slice(&x[start..start + len]);
        }
    }
}

/// Inverse of [`flatten_channels`].
pub fn unflatten_channels<T: Scalar>(x: &[T], channels: usize, batch: usize, len: usize, y: &mut Vec<T>) {
    y.clear();
    y.reserve(x.len());
    for c in 0..channels {
        for b in 0..batch {
            let start = (b * channels + c) * len;
            y.extend_from_slice(&x[start..start + len]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::stream(seed);
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    /// Direct-summation convolution used as a reference.
    fn conv_reference(c: &Conv1d, w: &[f64], bias: &[f64], x: &[f64], batch: usize, len: usize) -> Vec<f64> {
        let pad = (c.kernel / 2) as isize;
        let mut y = vec![0.0; c.out_channels * batch * len];
        for co in 0..c.out_channels {
            for b in 0..batch {
                for l in 0..len {
                    let mut acc = bias[co];
                    for ci in 0..c.in_channels {
                        for j in 0..c.kernel {
                            let src = l as isize + j as isize - pad;
                            if (0..len as isize).contains(&src) {
                                acc += w[(co * c.in_channels + ci) * c.kernel + j]
                                    * x[(ci * batch + b) * len + src as usize];
                            }
                        }
                    }
                    y[(co * batch + b) * len + l] = acc;
                }
            }
        }
        y
    }

    #[test]
    fn conv_matches_direct_sum() {
        let c = Conv1d { in_channels: 3, out_channels: 4, kernel: 5 };
        let (batch, len) = (2, 7);
        let w = random(c.weight_len(), 1);
        let b = random(4, 2);
        let x = random(3 * batch * len, 3);
        let (mut cols, mut y) = (Vec::new(), Vec::new());
        c.forward(&w, &b, &x, batch, len, &mut cols, &mut y);
        let r = conv_reference(&c, &w, &b, &x, batch, len);
        for (a, e) in y.iter().zip(&r) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    /// Loss `Σ g ⊙ y` with fixed random `g`, so `dL/dy = g`.
    #[test]
    fn conv_gradients_match_finite_differences() {
        let c = Conv1d { in_channels: 2, out_channels: 3, kernel: 5 };
        let (batch, len) = (2, 9);
        let mut w = random(c.weight_len(), 4);
        let mut b = random(3, 5);
        let mut x = random(2 * batch * len, 6);
        let g = random(3 * batch * len, 7);
        let objective = |w: &[f64], b: &[f64], x: &[f64]| -> f64 {
            let (mut cols, mut y) = (Vec::new(), Vec::new());
            c.forward(w, b, x, batch, len, &mut cols, &mut y);
            y.iter().zip(&g).map(|(a, b)| a * b).sum()
        };
        let (mut cols, mut y) = (Vec::new(), Vec::new());
        c.forward(&w, &b, &x, batch, len, &mut cols, &mut y);
        let mut dw = vec![0.0; c.weight_len()];
        let mut db = vec![0.0; 3];
        let mut dx = Vec::new();
        c.backward(&w, &cols, &g, batch, len, &mut dw, &mut db, &mut Vec::new(), Some(&mut dx));
        let h = 1e-6;
        for i in 0..w.len() {
            let w0 = w[i];
            w[i] = w0 + h;
            let up = objective(&w, &b, &x);
            w[i] = w0 - h;
            let down = objective(&w, &b, &x);
            w[i] = w0;
            assert!(rel_err((up - down) / (2.0 * h), dw[i]) < 1e-4, "w[{i}]");
        }
        for i in 0..b.len() {
            let b0 = b[i];
            b[i] = b0 + h;
            let up = objective(&w, &b, &x);
            b[i] = b0 - h;
            let down = objective(&w, &b, &x);
            b[i] = b0;
            assert!(rel_err((up - down) / (2.0 * h), db[i]) < 1e-4, "b[{i}]");
        }
        for i in 0..x.len() {
            let x0 = x[i];
            x[i] = x0 + h;
            let up = objective(&w, &b, &x);
            x[i] = x0 - h;
            let down = objective(&w, &b, &x);
            x[i] = x0;
            assert!(rel_err((up - down) / (2.0 * h), dx[i]) < 1e-4, "x[{i}]");
        }
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let d = Dense { inputs: 6, outputs: 4 };
        let batch = 3;
        let mut w = random(d.weight_len(), 8);
        let b = random(4, 9);
        let mut x = random(batch * 6, 10);
        let g = random(batch * 4, 11);
        let objective = |w: &[f64], x: &[f64]| -> f64 {
            let mut y = Vec::new();
            d.forward(w, &b, x, batch, &mut y);
            y.iter().zip(&g).map(|(a, b)| a * b).sum()
        };
        let mut dw = vec![0.0; d.weight_len()];
        let mut db = vec![0.0; 4];
        let mut dx = Vec::new();
        d.backward(&w, &x, &g, batch, &mut dw, &mut db, Some(&mut dx));
        let h = 1e-6;
        for i in 0..w.len() {
            let w0 = w[i];
            w[i] = w0 + h;
            let up = objective(&w, &x);
            w[i] = w0 - h;
            let down = objective(&w, &x);
            w[i] = w0;
            assert!(rel_err((up - down) / (2.0 * h), dw[i]) < 1e-4, "w[{i}]");
        }
        for i in 0..x.len() {
            let x0 = x[i];
            x[i] = x0 + h;
            let up = objective(&w, &x);
            x[i] = x0 - h;
            let down = objective(&w, &x);
            x[i] = x0;
            assert!(rel_err((up - down) / (2.0 * h), dx[i]) < 1e-4, "x[{i}]");
        }
        // bias gradient is the column sum of dL/dy
        for (o, &v) in db.iter().enumerate() {
            let s: f64 = (0..batch).map(|r| g[r * 4 + o]).sum();
            assert!((v - s).abs() < 1e-12);
        }
    }

    #[test]
    fn relu_gradient_matches_finite_differences() {
        // keep inputs away from the kink
        let x: Vec<f64> = random(40, 12).into_iter().map(|v| if v.abs() < 0.05 { 0.3 } else { v }).collect();
        let g = random(40, 13);
        let mut y = x.clone();
        relu_forward(&mut y);
        let mut grad = g.clone();
        relu_backward(&y, &mut grad);
        let h = 1e-6;
        for i in 0..x.len() {
            let f = |v: f64| if v > 0.0 { v } else { 0.0 };
            let num = g[i] * (f(x[i] + h) - f(x[i] - h)) / (2.0 * h);
            assert!((num - grad[i]).abs() < 1e-8, "{i}");
        }
    }

    #[test]
    fn zero_weight_conv_bias_gradient_is_mean_residual() {
        // One conv layer, zero weights and bias, loss = mean((y - t)^2):
        // dL/db_c = 2 * mean over (batch, positions) of (0 - t) for channel c.
        let c = Conv1d { in_channels: 1, out_channels: 2, kernel: 5 };
        let (batch, len) = (3, 10);
        let w = vec![0.0; c.weight_len()];
        let b = vec![0.0; 2];
        let x = random(batch * len, 14);
        let t = random(2 * batch * len, 15);
        let (mut cols, mut y) = (Vec::new(), Vec::new());
        c.forward(&w, &b, &x, batch, len, &mut cols, &mut y);
        assert!(y.iter().all(|&v| v == 0.0));
        let n = y.len() as f64;
        let dy: Vec<f64> = y.iter().zip(&t).map(|(a, b)| 2.0 * (a - b) / n).collect();
        let mut dw = vec![0.0; c.weight_len()];
        let mut db = vec![0.0; 2];
        c.backward(&w, &cols, &dy, batch, len, &mut dw, &mut db, &mut Vec::new(), None);
        for ch in 0..2 {
            let seg = &t[ch * batch * len..(ch + 1) * batch * len];
            let expected = -2.0 * seg.iter().sum::<f64>() / n;
            assert!((db[ch] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip() {
        let x: Vec<f64> = (0..24).map(|v| v as f64).collect();
        let (mut y, mut z) = (Vec::new(), Vec::new());
        flatten_channels(&x, 3, 2, 4, &mut y);
        // item 0 = channel rows 0..4, 8..12, 16..20
        assert_eq!(&y[..12], &[0.0, 1.0, 2.0, 3.0, 8.0, 9.0, 10.0, 11.0, 16.0, 17.0, 18.0, 19.0]);
        unflatten_channels(&y, 3, 2, 4, &mut z);
        assert_eq!(x, z);
    }
}
