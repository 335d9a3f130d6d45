//! Composition of spline-activation layers into a network.

use super::layer::{KanLayer, KanLayerGrads, LayerDetail};
use super::loss::softmax_cross_entropy;
use super::train::Trainable;
use super::KanError;
use crate::io::{FormatError, Reader, Writer};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::splines::SplineGrid;

const MAGIC: &[u8; 8] = b"KANMODEL";
const FORMAT_VERSION: u32 = 1;

/// An ordered stack of [`KanLayer`]s with matching widths. The last
/// layer's outputs are raw class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
}

/// Per-layer forward state captured for the backward pass.
pub struct KanCache {
    details: Vec<LayerDetail>,
}

impl KanCache {
    /// Logits of the forward pass that produced this cache.
    pub fn logits(&self) -> &Matrix {
        self.details.last().expect("networks have layers").output()
    }
}

/// Gradients for every parameter tensor of a [`KanNetwork`].
pub struct KanGrads {
    pub layers: Vec<KanLayerGrads>,
}

impl KanGrads {
    /// Flat tensors in the network's canonical parameter order
    /// (per layer: coefficients, residual weights, scales).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 3);
        for l in &self.layers {
            out.push(l.spline_coeffs.as_slice());
            out.push(l.base_weights.as_slice());
            out.push(l.spline_scales.as_slice());
        }
        out
    }
}

impl KanNetwork {
    /// Seeded random network with the given layer widths; every layer
    /// shares one grid configuration on the domain `[-1, 1]`.
    pub fn new(
        widths: &[usize],
        degree: usize,
        interval_count: usize,
        seed: u64,
    ) -> Result<Self, KanError> {
        check_widths(widths)?;
        let grid = SplineGrid::new(degree, interval_count, -1.0, 1.0)?;
        let mut rng = SeededRng::new(seed);
        let layers = widths
            .windows(2)
            .map(|w| KanLayer::init(w[0], w[1], grid.clone(), &mut rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<KanLayer>) -> Result<Self, KanError> {
        if layers.is_empty() {
            return Err(KanError::TooFewWidths(1));
        }
        for pair in layers.windows(2) {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(KanError::ShapeMismatch {
                    context: "adjacent layer widths",
                    expected: pair[0].n_out(),
                    got: pair[1].n_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    /// `[input, hidden..., output]` widths.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].n_in()];
        w.extend(self.layers.iter().map(KanLayer::n_out));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("networks have layers").n_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(KanLayer::param_count).sum()
    }

    /// Sequential composition of all layers; returns raw logits.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix, KanError> {
        let mut current = self.layers[0].forward(batch)?;
        for layer in &self.layers[1..] {
            current = layer.forward(&current)?;
        }
        Ok(current)
    }

    /// Activations after the penultimate layer; the representation the
    /// boosted-tree stage consumes.
    pub fn hidden(&self, batch: &Matrix) -> Result<Matrix, KanError> {
        if self.layers.len() < 2 {
            return Err(KanError::NoHiddenLayer);
        }
        let mut current = self.layers[0].forward(batch)?;
        for layer in &self.layers[1..self.layers.len() - 1] {
            current = layer.forward(&current)?;
        }
        Ok(current)
    }

    /// Forward pass retaining everything the backward pass needs.
    pub fn forward_cached(&self, batch: &Matrix) -> Result<KanCache, KanError> {
        let mut details = Vec::with_capacity(self.layers.len());
        let mut input = batch;
        for layer in &self.layers {
            let detail = layer.forward_detailed(input)?;
            details.push(detail);
            input = details.last().expect("just pushed").output();
        }
        Ok(KanCache { details })
    }

    pub fn zero_grads(&self) -> KanGrads {
        KanGrads {
            layers: self.layers.iter().map(KanLayer::zero_grads).collect(),
        }
    }

    /// Exact reverse-mode gradients of a scalar loss given its gradient
    /// with respect to the logits.
    pub fn backward(&self, batch: &Matrix, cache: &KanCache, out_grad: &Matrix) -> KanGrads {
        let mut grads = self.zero_grads();
        let mut delta = out_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input_rows = if i == 0 {
                batch.rows()
            } else {
                cache.details[i - 1].output().rows()
            };
            let mut input_grad = (i > 0).then(|| Matrix::zeros(input_rows, layer.n_in()));
            layer.backward(
                &cache.details[i],
                &delta,
                &mut grads.layers[i],
                input_grad.as_mut(),
            );
            if let Some(next_delta) = input_grad {
                delta = next_delta;
            }
        }
        grads
    }

    /// Mean cross-entropy and full parameter gradients on one batch.
    pub fn loss_backward(
        &self,
        batch: &Matrix,
        labels: &[u32],
    ) -> Result<(f64, KanGrads), KanError> {
        let cache = self.forward_cached(batch)?;
        let (loss, out_grad) = softmax_cross_entropy(cache.logits(), labels)?;
        Ok((loss, self.backward(batch, &cache, &out_grad)))
    }

    /// Serializes as a versioned flat binary file.
    pub fn to_bytes(&self) -> Vec<u8> {
        let grid = self.layers[0].grid();
        let (lo, hi) = grid.domain();
        let mut w = Writer::new(MAGIC, FORMAT_VERSION);
        w.u32(self.layers.len() as u32);
        for width in self.widths() {
            w.u32(width as u32);
        }
        w.u32(grid.degree() as u32);
        w.u32(grid.interval_count() as u32);
        w.f64(lo);
        w.f64(hi);
        for layer in &self.layers {
            w.f64_slice(layer.spline_coeffs());
            w.f64_slice(layer.base_weights());
            w.f64_slice(layer.spline_scales());
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
        let degree = r.u32()? as usize;
        let intervals = r.u32()? as usize;
        let lo = r.f64()?;
        let hi = r.f64()?;
        let grid = SplineGrid::new(degree, intervals, lo, hi)
            .map_err(|e| FormatError::Corrupt(e.to_string()))?;
        let b = grid.basis_count();
        let mut layers = Vec::with_capacity(n_layers);
        for w in widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let coeffs = r.f64_vec(n_out * n_in * b)?;
            let base = r.f64_vec(n_out * n_in)?;
            let scales = r.f64_vec(n_out * n_in)?;
            let layer = KanLayer::from_parts(n_in, n_out, grid.clone(), coeffs, base, scales)
                .map_err(|e| FormatError::Corrupt(e.to_string()))?;
            layers.push(layer);
        }
        r.expect_end()?;
        Self::from_layers(layers).map_err(|e| FormatError::Corrupt(e.to_string()))
    }
}

impl Trainable for KanNetwork {
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
        let flat = grads
            .layers
            .into_iter()
            .flat_map(|l| [l.spline_coeffs, l.base_weights, l.spline_scales])
            .collect();
        Ok((loss, flat))
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .collect()
    }
}

pub(super) fn check_widths(widths: &[usize]) -> Result<(), KanError> {
    if widths.len() < 2 {
        return Err(KanError::TooFewWidths(widths.len()));
    }
    if widths.contains(&0) {
        return Err(KanError::ZeroWidth);
    }
    Ok(())
}
