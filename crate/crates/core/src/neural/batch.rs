//! Batched forward pass and backpropagation.
//!
//! Activations are stored feature-major with the batch as the contiguous
//! axis so every layer is one GEMM. The convolution input is laid out as a
//! `2T × (u·B)` matrix whose column `γ·B + b` holds position `γ` of example
//! `b`; the `F × (u·B)` convolution output is then, without reshuffling,
//! the `uF × B` matrix of flattened features.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::model::{sigmoid, FineDetectorModel, Params, TrainingExample};

/// Mean losses and gradient of the mean squared loss over a batch.
#[derive(Clone, Debug)]
pub struct BatchGradient<T> {
    /// Mean of `‖s − ŝ‖²`, the training objective.
    pub loss_sq: T,
    /// Mean of `‖s − ŝ‖`.
    pub loss_norm: T,
    pub grad: Params<T>,
}

/// Reusable activation buffers.
#[derive(Clone, Debug, Default)]
pub struct Workspace<T> {
    batch: usize,
    xin: Vec<T>,
    theta: Vec<T>,
    hidden: Vec<T>,
    out: Vec<T>,
    d_out: Vec<T>,
    d_hidden: Vec<T>,
    d_theta: Vec<T>,
}

fn row_major(cols: usize) -> (isize, isize) {
    (cols as isize, 1)
}

fn transposed(stored_cols: usize) -> (isize, isize) {
    (1, stored_cols as isize)
}

impl<T: Real> Workspace<T> {
    pub fn new() -> Self {
        Self {
            batch: 0,
            xin: Vec::new(),
            theta: Vec::new(),
            hidden: Vec::new(),
            out: Vec::new(),
            d_out: Vec::new(),
            d_hidden: Vec::new(),
            d_theta: Vec::new(),
        }
    }

    /// Runs the forward pass; returns the `pT × B` soft outputs.
    pub fn forward<'a>(
        &mut self,
        model: &FineDetectorModel<T>,
        inputs: impl ExactSizeIterator<Item = &'a [T]>,
    ) -> Result<&[T]> {
        let d = *model.dims();
        let p = model.params();
        let b = inputs.len();
        if b == 0 {
            return Err(Error::Dimension("empty batch".into()));
        }
        let (ch, u, f, tau, flat, out_len) = (d.channels(), d.u, d.f, d.tau, d.flat_len(), d.output_len());
        let ub = u * b;
        self.batch = b;
        self.xin.clear();
        self.xin.resize(ch * ub, T::zero());
        for (bi, x) in inputs.enumerate() {
            if x.len() != d.input_len() {
                return Err(Error::Dimension(format!(
                    "input has length {}, model expects {}",
                    x.len(),
                    d.input_len()
                )));
            }
            for gamma in 0..u {
                for t in 0..d.t {
                    for part in 0..2 {
                        self.xin[(2 * t + part) * ub + gamma * b + bi] = x[d.input_index(gamma, part, t)];
                    }
                }
            }
        }

        self.theta.clear();
        self.theta.resize(f * ub, T::zero());
        T::gemm(f, ch, ub, T::one(), &p.w, row_major(ch), &self.xin, row_major(ub), T::zero(), &mut self.theta, row_major(ub));
        for (row, &bias) in self.theta.chunks_mut(ub).zip(&p.c) {
            for x in row {
                *x = (*x + bias).tanh();
            }
        }

        self.hidden.clear();
        self.hidden.resize(tau * b, T::zero());
        T::gemm(tau, flat, b, T::one(), &p.a1, row_major(flat), &self.theta, row_major(b), T::zero(), &mut self.hidden, row_major(b));
        for (row, &bias) in self.hidden.chunks_mut(b).zip(&p.b1) {
            for x in row {
                *x = (*x + bias).tanh();
            }
        }

        self.out.clear();
        self.out.resize(out_len * b, T::zero());
        T::gemm(out_len, tau, b, T::one(), &p.a2, row_major(tau), &self.hidden, row_major(b), T::zero(), &mut self.out, row_major(b));
        for (row, &bias) in self.out.chunks_mut(b).zip(&p.b2) {
            for x in row {
                *x = sigmoid(*x + bias);
            }
        }
        Ok(&self.out)
    }

    /// Soft outputs of the last forward pass for example `bi`.
    pub fn output(&self, bi: usize, out_len: usize) -> Vec<T> {
        (0..out_len).map(|o| self.out[o * self.batch + bi]).collect()
    }

    /// Forward and backward pass over `batch`.
    pub fn gradient(&mut self, model: &FineDetectorModel<T>, batch: &[&TrainingExample<T>]) -> Result<BatchGradient<T>> {
        self.forward(model, batch.iter().map(|e| e.input.as_slice()))?;
        let d = *model.dims();
        let p = model.params();
        let b = batch.len();
        let (ch, u, f, tau, flat, out_len) = (d.channels(), d.u, d.f, d.tau, d.flat_len(), d.output_len());
        let ub = u * b;
        let inv_b = T::one() / T::lit(b as f64);
        let two = T::lit(2.0);

        let mut loss_sq = T::zero();
        let mut loss_norm = T::zero();
        self.d_out.clear();
        self.d_out.resize(out_len * b, T::zero());
        for (bi, ex) in batch.iter().enumerate() {
            if ex.target.len() != out_len {
                return Err(Error::Dimension(format!(
                    "target has {} bits, model produces {out_len}",
                    ex.target.len()
                )));
            }
            let mut sq = T::zero();
            for (o, &s) in ex.target.iter().enumerate() {
                let idx = o * b + bi;
                let s_hat = self.out[idx];
                let e = s_hat - s;
                sq += e * e;
                self.d_out[idx] = two * inv_b * e * s_hat * (T::one() - s_hat);
            }
            loss_sq += sq;
            loss_norm += sq.sqrt();
        }

        let mut grad = Params::zeros(&d);
        T::gemm(out_len, b, tau, T::one(), &self.d_out, row_major(b), &self.hidden, transposed(b), T::zero(), &mut grad.a2, row_major(tau));
        row_sums(&self.d_out, b, &mut grad.b2);

        self.d_hidden.clear();
        self.d_hidden.resize(tau * b, T::zero());
        T::gemm(tau, out_len, b, T::one(), &p.a2, transposed(tau), &self.d_out, row_major(b), T::zero(), &mut self.d_hidden, row_major(b));
        for (g, &h) in self.d_hidden.iter_mut().zip(&self.hidden) {
            *g *= T::one() - h * h;
        }
        T::gemm(tau, b, flat, T::one(), &self.d_hidden, row_major(b), &self.theta, transposed(b), T::zero(), &mut grad.a1, row_major(flat));
        row_sums(&self.d_hidden, b, &mut grad.b1);

        self.d_theta.clear();
        self.d_theta.resize(flat * b, T::zero());
        T::gemm(flat, tau, b, T::one(), &p.a1, transposed(flat), &self.d_hidden, row_major(b), T::zero(), &mut self.d_theta, row_major(b));
        for (g, &th) in self.d_theta.iter_mut().zip(&self.theta) {
            *g *= T::one() - th * th;
        }
        T::gemm(f, ub, ch, T::one(), &self.d_theta, row_major(ub), &self.xin, transposed(ub), T::zero(), &mut grad.w, row_major(ch));
        row_sums(&self.d_theta, ub, &mut grad.c);

        Ok(BatchGradient {
            loss_sq: loss_sq * inv_b,
            loss_norm: loss_norm * inv_b,
            grad,
        })
    }
}

fn row_sums<T: Real>(m: &[T], cols: usize, out: &mut [T]) {
    for (o, row) in out.iter_mut().zip(m.chunks(cols)) {
        *o = row.iter().copied().sum();
    }
}

/// Gradient of the mean squared loss `(1/B)Σ‖s − ŝ‖²` over `batch`.
pub fn model_grad<T: Real>(batch: &[TrainingExample<T>], model: &FineDetectorModel<T>) -> Result<BatchGradient<T>> {
    let refs: Vec<&TrainingExample<T>> = batch.iter().collect();
    Workspace::new().gradient(model, &refs)
}

/// Soft outputs for a set of inputs, one vector per input.
pub fn predict_batch<T: Real>(model: &FineDetectorModel<T>, inputs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut ws = Workspace::new();
    ws.forward(model, inputs.iter().map(Vec::as_slice))?;
    let out_len = model.dims().output_len();
    Ok((0..inputs.len()).map(|bi| ws.output(bi, out_len)).collect())
}
