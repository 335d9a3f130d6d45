//! One layer of learnable spline edge activations.

use super::{silu, silu_prime, squash, squash_prime, KanError};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::splines::{SplineGrid, SplineScratch};

/// A matrix of learnable edge activations mapping `n_in` to `n_out`.
///
/// Each edge `(q, p)` owns one coefficient vector over the shared grid, one
/// residual weight, and one spline scale. `output[q] = sum_p edge(q, p)(x_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    n_in: usize,
    n_out: usize,
    grid: SplineGrid,
    /// `n_out x n_in x B`, row-major.
    spline_coeffs: Vec<f64>,
    /// `n_out x n_in`.
    base_weights: Vec<f64>,
    /// `n_out x n_in`.
    spline_scales: Vec<f64>,
}

/// Gradients aligned with one layer's parameter tensors.
#[derive(Debug, Clone)]
pub struct KanLayerGrads {
    pub spline_coeffs: Vec<f64>,
    pub base_weights: Vec<f64>,
    pub spline_scales: Vec<f64>,
}

/// Per-batch forward state a layer needs to run its backward pass:
/// basis windows, derivative windows, and the pointwise activation values
/// for every (row, input) pair.
pub struct LayerDetail {
    rows: usize,
    win_start: Vec<u32>,
    basis_vals: Vec<f64>,
    basis_derivs: Vec<f64>,
    silu_vals: Vec<f64>,
    silu_primes: Vec<f64>,
    squash_primes: Vec<f64>,
    output: Matrix,
}

impl LayerDetail {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

impl KanLayer {
    /// Fresh layer with small random spline perturbations around the silu
    /// residual: coefficients ~ N(0, 0.1/sqrt(B)), residual weights from a
    /// fan-in-scaled uniform, scales fixed at 1.
    pub fn init(n_in: usize, n_out: usize, grid: SplineGrid, rng: &mut SeededRng) -> Self {
        let b = grid.basis_count();
        let sigma = 0.1 / (b as f64).sqrt();
        let spline_coeffs = (0..n_out * n_in * b)
            .map(|_| sigma * rng.normal())
            .collect();
        let bound = (1.0 / n_in as f64).sqrt();
        let base_weights = (0..n_out * n_in)
            .map(|_| rng.uniform_in(-bound, bound))
            .collect();
        Self {
            n_in,
            n_out,
            grid,
            spline_coeffs,
            base_weights,
            spline_scales: vec![1.0; n_out * n_in],
        }
    }

    /// Layer with explicitly given parameter tensors.
    pub fn from_parts(
        n_in: usize,
        n_out: usize,
        grid: SplineGrid,
        spline_coeffs: Vec<f64>,
        base_weights: Vec<f64>,
        spline_scales: Vec<f64>,
    ) -> Result<Self, KanError> {
        let b = grid.basis_count();
        check_len("spline_coeffs", n_out * n_in * b, spline_coeffs.len())?;
        check_len("base_weights", n_out * n_in, base_weights.len())?;
        check_len("spline_scales", n_out * n_in, spline_scales.len())?;
        Ok(Self {
            n_in,
            n_out,
            grid,
            spline_coeffs,
            base_weights,
            spline_scales,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn grid(&self) -> &SplineGrid {
        &self.grid
    }

    pub fn spline_coeffs(&self) -> &[f64] {
        &self.spline_coeffs
    }

    pub fn base_weights(&self) -> &[f64] {
        &self.base_weights
    }

    pub fn spline_scales(&self) -> &[f64] {
        &self.spline_scales
    }

    pub fn param_count(&self) -> usize {
        self.spline_coeffs.len() + self.base_weights.len() + self.spline_scales.len()
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [f64]; 3] {
        [
            &mut self.spline_coeffs,
            &mut self.base_weights,
            &mut self.spline_scales,
        ]
    }

    pub fn zero_grads(&self) -> KanLayerGrads {
        KanLayerGrads {
            spline_coeffs: vec![0.0; self.spline_coeffs.len()],
            base_weights: vec![0.0; self.base_weights.len()],
            spline_scales: vec![0.0; self.spline_scales.len()],
        }
    }

    fn check_batch(&self, batch: &Matrix) -> Result<(), KanError> {
        check_len("layer input width", self.n_in, batch.cols())
    }

    /// Batch forward pass.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix, KanError> {
        self.check_batch(batch)?;
        let window = self.grid.degree() + 1;
        let b = self.grid.basis_count();
        let (lo, hi) = self.grid.domain();
        let mut scratch = SplineScratch::for_grid(&self.grid);
        let mut out = Matrix::zeros(batch.rows(), self.n_out);

        let mut starts = vec![0usize; self.n_in];
        let mut vals = vec![0.0; self.n_in * window];
        let mut silus = vec![0.0; self.n_in];
        for r in 0..batch.rows() {
            let x = batch.row(r);
            for p in 0..self.n_in {
                let w = self
                    .grid
                    .window_values(squash(x[p], lo, hi), &mut scratch)
                    .expect("squashed input is inside the grid domain");
                starts[p] = w.start;
                vals[p * window..(p + 1) * window].copy_from_slice(w.values);
                silus[p] = silu(x[p]);
            }
            let out_row = out.row_mut(r);
            for q in 0..self.n_out {
                let edge = q * self.n_in;
                let mut acc = 0.0;
                for p in 0..self.n_in {
                    let coeffs = &self.spline_coeffs[(edge + p) * b + starts[p]..];
                    let win = &vals[p * window..(p + 1) * window];
                    let mut spline = 0.0;
                    for (c, v) in coeffs.iter().zip(win) {
                        spline += c * v;
                    }
                    acc += self.base_weights[edge + p] * silus[p]
                        + self.spline_scales[edge + p] * spline;
                }
                out_row[q] = acc;
            }
        }
        Ok(out)
    }

    /// Forward pass that also captures everything backward needs.
    pub fn forward_detailed(&self, batch: &Matrix) -> Result<LayerDetail, KanError> {
        self.check_batch(batch)?;
        let rows = batch.rows();
        let window = self.grid.degree() + 1;
        let b = self.grid.basis_count();
        let (lo, hi) = self.grid.domain();
        let mut scratch = SplineScratch::for_grid(&self.grid);

        let mut detail = LayerDetail {
            rows,
            win_start: vec![0; rows * self.n_in],
            basis_vals: vec![0.0; rows * self.n_in * window],
            basis_derivs: vec![0.0; rows * self.n_in * window],
            silu_vals: vec![0.0; rows * self.n_in],
            silu_primes: vec![0.0; rows * self.n_in],
            squash_primes: vec![0.0; rows * self.n_in],
            output: Matrix::zeros(rows, self.n_out),
        };

        for r in 0..rows {
            let x = batch.row(r);
            let base = r * self.n_in;
            for p in 0..self.n_in {
                let w = self
                    .grid
                    .window_with_derivs(squash(x[p], lo, hi), &mut scratch)
                    .expect("squashed input is inside the grid domain");
                detail.win_start[base + p] = w.start as u32;
                let at = (base + p) * window;
                detail.basis_vals[at..at + window].copy_from_slice(w.values);
                detail.basis_derivs[at..at + window].copy_from_slice(w.derivs);
                detail.silu_vals[base + p] = silu(x[p]);
                detail.silu_primes[base + p] = silu_prime(x[p]);
                detail.squash_primes[base + p] = squash_prime(x[p], lo, hi);
            }
            let out_row = detail.output.row_mut(r);
            for q in 0..self.n_out {
                let edge = q * self.n_in;
                let mut acc = 0.0;
                for p in 0..self.n_in {
                    let start = detail.win_start[base + p] as usize;
                    let at = (base + p) * window;
                    let coeffs = &self.spline_coeffs[(edge + p) * b + start..];
                    let win = &detail.basis_vals[at..at + window];
                    let mut spline = 0.0;
                    for (c, v) in coeffs.iter().zip(win) {
                        spline += c * v;
                    }
                    acc += self.base_weights[edge + p] * detail.silu_vals[base + p]
                        + self.spline_scales[edge + p] * spline;
                }
                out_row[q] = acc;
            }
        }
        Ok(detail)
    }

    /// Accumulates parameter gradients (and optionally input gradients)
    /// from the output gradient of this layer.
    pub fn backward(
        &self,
        detail: &LayerDetail,
        out_grad: &Matrix,
        grads: &mut KanLayerGrads,
        mut input_grad: Option<&mut Matrix>,
    ) {
        assert_eq!(out_grad.rows(), detail.rows, "row count mismatch");
        assert_eq!(out_grad.cols(), self.n_out, "output width mismatch");
        let window = self.grid.degree() + 1;
        let b = self.grid.basis_count();

        for r in 0..detail.rows {
            let delta = out_grad.row(r);
            let base = r * self.n_in;
            for q in 0..self.n_out {
                let d = delta[q];
                if d == 0.0 {
                    continue;
                }
                let edge = q * self.n_in;
                for p in 0..self.n_in {
                    let start = detail.win_start[base + p] as usize;
                    let at = (base + p) * window;
                    let vals = &detail.basis_vals[at..at + window];
                    let coeff_at = (edge + p) * b + start;
                    let scale = self.spline_scales[edge + p];

                    let mut spline = 0.0;
                    for (c, v) in self.spline_coeffs[coeff_at..].iter().zip(vals) {
                        spline += c * v;
                    }
                    grads.base_weights[edge + p] += d * detail.silu_vals[base + p];
                    grads.spline_scales[edge + p] += d * spline;
                    let ds = d * scale;
                    for (g, v) in grads.spline_coeffs[coeff_at..].iter_mut().zip(vals) {
                        *g += ds * v;
                    }

                    if let Some(ig) = input_grad.as_deref_mut() {
                        let derivs = &detail.basis_derivs[at..at + window];
                        let mut spline_slope = 0.0;
                        for (c, v) in self.spline_coeffs[coeff_at..].iter().zip(derivs) {
                            spline_slope += c * v;
                        }
                        let chain = self.base_weights[edge + p] * detail.silu_primes[base + p]
                            + scale * spline_slope * detail.squash_primes[base + p];
                        ig.row_mut(r)[p] += d * chain;
                    }
                }
            }
        }
    }
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<(), KanError> {
    if expected == got {
        Ok(())
    } else {
        Err(KanError::ShapeMismatch {
            context,
            expected,
            got,
        })
    }
}
