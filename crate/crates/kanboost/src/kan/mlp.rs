//! Dense baseline network with silu nonlinearities.
//!
//! Kept to the same widths and training configuration as the spline
//! network so comparisons vary the architecture only.

use super::network::check_widths;
use super::train::Trainable;
use super::{loss::softmax_cross_entropy, silu, silu_prime, KanError};
use crate::io::{FormatError, Reader, Writer};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

const MAGIC: &[u8; 8] = b"MLPMODEL";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
struct DenseLayer {
    n_in: usize,
    n_out: usize,
    /// `n_out x n_in`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    fn init(n_in: usize, n_out: usize, rng: &mut SeededRng) -> Self {
        let bound = (1.0 / n_in as f64).sqrt();
        Self {
            n_in,
            n_out,
            weights: (0..n_out * n_in)
                .map(|_| rng.uniform_in(-bound, bound))
                .collect(),
            bias: vec![0.0; n_out],
        }
    }

    fn affine(&self, input: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(input.rows(), self.n_out);
        for r in 0..input.rows() {
            let x = input.row(r);
            let o = out.row_mut(r);
            for q in 0..self.n_out {
                let w = &self.weights[q * self.n_in..(q + 1) * self.n_in];
                let mut acc = self.bias[q];
                for (wi, xi) in w.iter().zip(x) {
                    acc += wi * xi;
                }
                o[q] = acc;
            }
        }
        out
    }
}

/// Dense layers with silu between them and raw logits at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
}

/// Gradients aligned with [`MlpNetwork`] parameters (per layer: weights,
/// bias).
pub struct MlpGrads {
    pub tensors: Vec<Vec<f64>>,
}

impl MlpNetwork {
    pub fn new(widths: &[usize], seed: u64) -> Result<Self, KanError> {
        check_widths(widths)?;
        let mut rng = SeededRng::new(seed);
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer::init(w[0], w[1], &mut rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].n_in];
        w.extend(self.layers.iter().map(|l| l.n_out));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("networks have layers").n_out
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Matrix, KanError> {
        if batch.cols() != self.input_width() {
            return Err(KanError::ShapeMismatch {
                context: "mlp input width",
                expected: self.input_width(),
                got: batch.cols(),
            });
        }
        let mut current = self.layers[0].affine(batch);
        for layer in &self.layers[1..] {
            apply_silu(&mut current);
            current = layer.affine(&current);
        }
        Ok(current)
    }

    /// Mean cross-entropy and gradients for one batch.
    pub fn loss_backward(
        &self,
        batch: &Matrix,
        labels: &[u32],
    ) -> Result<(f64, MlpGrads), KanError> {
        if batch.cols() != self.input_width() {
            return Err(KanError::ShapeMismatch {
                context: "mlp input width",
                expected: self.input_width(),
                got: batch.cols(),
            });
        }
        // Forward, keeping pre-activations of every layer.
        let mut pre: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        pre.push(self.layers[0].affine(batch));
        for layer in &self.layers[1..] {
            let mut act = pre.last().expect("pushed").clone();
            apply_silu(&mut act);
            pre.push(layer.affine(&act));
        }
        let logits = pre.last().expect("pushed");
        let (loss, out_grad) = softmax_cross_entropy(logits, labels)?;

        let rows = batch.rows();
        let mut tensors: Vec<Vec<f64>> = self
            .layers
            .iter()
            .flat_map(|l| [vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]])
            .collect();

        let mut delta = out_grad;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            // Input that fed this layer (post-silu for i > 0).
            let input_owned;
            let input: &Matrix = if i == 0 {
                batch
            } else {
                let mut act = pre[i - 1].clone();
                apply_silu(&mut act);
                input_owned = act;
                &input_owned
            };

            {
                let (dw, db) = {
                    let pair = &mut tensors[2 * i..2 * i + 2];
                    let (a, b) = pair.split_at_mut(1);
                    (&mut a[0], &mut b[0])
                };
                for r in 0..rows {
                    let d = delta.row(r);
                    let x = input.row(r);
                    for q in 0..layer.n_out {
                        let dq = d[q];
                        if dq == 0.0 {
                            continue;
                        }
                        db[q] += dq;
                        let w_row = &mut dw[q * layer.n_in..(q + 1) * layer.n_in];
                        for (g, xi) in w_row.iter_mut().zip(x) {
                            *g += dq * xi;
                        }
                    }
                }
            }

            if i > 0 {
                // delta w.r.t. this layer's input, through the silu.
                let mut next = Matrix::zeros(rows, layer.n_in);
                for r in 0..rows {
                    let d = delta.row(r);
                    let z = pre[i - 1].row(r);
                    let n = next.row_mut(r);
                    for q in 0..layer.n_out {
                        let dq = d[q];
                        if dq == 0.0 {
                            continue;
                        }
                        let w_row = &layer.weights[q * layer.n_in..(q + 1) * layer.n_in];
                        for (p, wi) in w_row.iter().enumerate() {
                            n[p] += dq * wi;
                        }
                    }
                    for (p, v) in n.iter_mut().enumerate() {
                        *v *= silu_prime(z[p]);
                    }
                }
                delta = next;
            }
        }
        Ok((loss, MlpGrads { tensors }))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, FORMAT_VERSION);
        w.u32(self.layers.len() as u32);
        for width in self.widths() {
            w.u32(width as u32);
        }
        for layer in &self.layers {
            w.f64_slice(&layer.weights);
            w.f64_slice(&layer.bias);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes, MAGIC, FORMAT_VERSION)?;
        let n_layers = r.u32()? as usize;
        if n_layers == 0 || n_layers > 1024 {
            return Err(FormatError::Corrupt(format!("layer count {n_layers}")));
        }
        let widths: Vec<usize> = (0..=n_layers)
            .map(|_| r.u32().map(|w| w as usize))
            .collect::<Result<_, _>>()?;
        let mut layers = Vec::with_capacity(n_layers);
        for w in widths.windows(2) {
            let weights = r.f64_vec(w[1] * w[0])?;
            let bias = r.f64_vec(w[1])?;
            layers.push(DenseLayer {
                n_in: w[0],
                n_out: w[1],
                weights,
                bias,
            });
        }
        r.expect_end()?;
        Ok(Self { layers })
    }
}

fn apply_silu(m: &mut Matrix) {
    for v in m.as_mut_slice() {
        *v = silu(*v);
    }
}

impl Trainable for MlpNetwork {
    fn input_width(&self) -> usize {
        self.input_width()
    }

    fn output_width(&self) -> usize {
        self.output_width()
    }

    fn logits(&self, batch: &Matrix) -> Result<Matrix, KanError> {
        self.forward(batch)
    }

    fn loss_and_grads(
        &self,
        batch: &Matrix,
        labels: &[u32],
    ) -> Result<(f64, Vec<Vec<f64>>), KanError> {
        let (loss, grads) = self.loss_backward(batch, labels)?;
        Ok((loss, grads.tensors))
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}
