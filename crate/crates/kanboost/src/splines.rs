//! B-spline basis evaluation over a fixed uniform grid.
//!
//! A [`SplineGrid`] fixes a degree `k`, a core domain `[t_lo, t_hi]` split
//! into `G` uniform intervals, and the knot vector extended by `k` uniformly
//! spaced knots on each side. Over that grid the crate evaluates all
//! `B = G + k` basis functions, their first derivatives, and coefficient
//! splines. Evaluation uses the Cox-de Boor recursion in its triangular
//! form: at any `x` inside the domain exactly `k + 1` consecutive basis
//! functions are nonzero, and the recursion computes that window directly.
//!
//! The basis on the core domain is a partition of unity, every value is
//! nonnegative, and each basis function is supported on `k + 2` consecutive
//! knots. These properties are load-bearing for the network layers built on
//! top and are enforced by the tests below.

use thiserror::Error;

/// Absolute slack allowed beyond a domain endpoint before evaluation is
/// rejected. Values inside the slack are clamped to the endpoint.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("degenerate domain [{lo}, {hi}]: bounds must be finite with lo < hi")]
    DegenerateDomain { lo: f64, hi: f64 },

    #[error("interval count must be at least 1, got {0}")]
    InvalidIntervalCount(usize),

    #[error("x = {x} lies outside the grid domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("expected {expected} spline coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
}

/// Degree, domain, and knot vector for one family of B-spline bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineGrid {
    degree: usize,
    interval_count: usize,
    t_lo: f64,
    t_hi: f64,
    knots: Vec<f64>,
}

impl SplineGrid {
    /// Builds a uniform grid of `interval_count` intervals on
    /// `[t_lo, t_hi]`, extended by `degree` knots per side at the same
    /// spacing.
    pub fn new(
        degree: usize,
        interval_count: usize,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self, SplineError> {
        if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo >= t_hi {
            return Err(SplineError::DegenerateDomain { lo: t_lo, hi: t_hi });
        }
        if interval_count == 0 {
            return Err(SplineError::InvalidIntervalCount(interval_count));
        }
        let g = interval_count as f64;
        let span = t_hi - t_lo;
        // Index i maps to core position (i - degree) / G; endpoints land on
        // t_lo and t_hi exactly.
        let knots = (0..interval_count + 2 * degree + 1)
            .map(|i| {
                let j = i as isize - degree as isize;
                t_lo + span * (j as f64 / g)
            })
            .collect();
        Ok(Self {
            degree,
            interval_count,
            t_lo,
            t_hi,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interval_count(&self) -> usize {
        self.interval_count
    }

    /// Number of basis functions, `G + k`.
    pub fn basis_count(&self) -> usize {
        self.interval_count + self.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Clamps `x` into the domain, rejecting violations beyond
    /// [`DOMAIN_TOLERANCE`].
    fn admit(&self, x: f64) -> Result<f64, SplineError> {
        if !x.is_finite() || x < self.t_lo - DOMAIN_TOLERANCE || x > self.t_hi + DOMAIN_TOLERANCE {
            return Err(SplineError::OutOfDomain {
                x,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        Ok(x.clamp(self.t_lo, self.t_hi))
    }

    /// Knot span index `s` with `knots[s] <= x` and, except at the right
    /// endpoint, `x < knots[s + 1]`. Always a core span.
    fn span_of(&self, x: f64) -> usize {
        let k = self.degree;
        let hi_span = k + self.interval_count - 1;
        // Binary search over the core knots keeps knots[s] <= x exact.
        let mut lo = k;
        let mut hi = hi_span;
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// Triangular Cox-de Boor pass at `span`.
    ///
    /// Fills `out[0..=degree]` with the nonzero degree-`k` values
    /// `N_{span-k+r, k}(x)`. When `prev` is given, it receives the
    /// degree-`k-1` row `N_{span-k+1+r, k-1}(x)` used by the derivative
    /// identity.
    fn triangle(
        &self,
        span: usize,
        x: f64,
        out: &mut [f64],
        mut prev: Option<&mut [f64]>,
        left: &mut [f64],
        right: &mut [f64],
    ) {
        let k = self.degree;
        let knots = &self.knots;
        out[0] = 1.0;
        for j in 1..=k {
            left[j] = x - knots[span + 1 - j];
            right[j] = knots[span + j] - x;
            if j == k {
                if let Some(prev) = prev.as_deref_mut() {
                    prev[..j].copy_from_slice(&out[..j]);
                }
            }
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// All `B` basis values at `x`.
    ///
    /// Values are nonnegative and sum to 1 on the core domain.
    pub fn basis_values(&self, x: f64) -> Result<Vec<f64>, SplineError> {
        let mut out = vec![0.0; self.basis_count()];
        let mut scratch = SplineScratch::for_grid(self);
        let w = self.window_values(x, &mut scratch)?;
        out[w.start..w.start + w.values.len()].copy_from_slice(w.values);
        Ok(out)
    }

    /// First derivative of every basis function at `x`.
    ///
    /// Uses the knot-difference identity on the degree-`k-1` basis; all
    /// zeros for degree 0.
    pub fn basis_derivatives(&self, x: f64) -> Result<Vec<f64>, SplineError> {
        let mut out = vec![0.0; self.basis_count()];
        let mut scratch = SplineScratch::for_grid(self);
        let w = self.window_with_derivs(x, &mut scratch)?;
        out[w.start..w.start + w.derivs.len()].copy_from_slice(w.derivs);
        Ok(out)
    }

    /// Evaluates the spline with the given coefficient vector at `x`.
    pub fn spline_eval(&self, coefficients: &[f64], x: f64) -> Result<f64, SplineError> {
        if coefficients.len() != self.basis_count() {
            return Err(SplineError::CoefficientCount {
                expected: self.basis_count(),
                got: coefficients.len(),
            });
        }
        let mut scratch = SplineScratch::for_grid(self);
        let w = self.window_values(x, &mut scratch)?;
        Ok(w.values
            .iter()
            .zip(&coefficients[w.start..])
            .map(|(n, c)| n * c)
            .sum())
    }

    /// Nonzero basis window at `x`: `values[r]` is basis `start + r`.
    pub fn window_values<'s>(
        &self,
        x: f64,
        scratch: &'s mut SplineScratch,
    ) -> Result<ValueWindow<'s>, SplineError> {
        let x = self.admit(x)?;
        let span = self.span_of(x);
        let SplineScratch {
            values,
            left,
            right,
            ..
        } = scratch;
        self.triangle(span, x, values, None, left, right);
        Ok(ValueWindow {
            start: span - self.degree,
            values: &scratch.values[..self.degree + 1],
        })
    }

    /// Nonzero basis window plus first derivatives at `x`.
    pub fn window_with_derivs<'s>(
        &self,
        x: f64,
        scratch: &'s mut SplineScratch,
    ) -> Result<DerivWindow<'s>, SplineError> {
        let x = self.admit(x)?;
        let span = self.span_of(x);
        let k = self.degree;
        let SplineScratch {
            values,
            lower,
            derivs,
            left,
            right,
        } = scratch;
        self.triangle(span, x, values, Some(lower), left, right);

        let start = span - k;
        if k == 0 {
            derivs[0] = 0.0;
        } else {
            // lower[r] holds N_{span-k+1+r, k-1}; shift so nd(i) addresses
            // N_{start+i, k-1} with zeros at both ends of the window.
            let nd = |i: usize| -> f64 {
                if i == 0 || i > k {
                    0.0
                } else {
                    lower[i - 1]
                }
            };
            let knots = &self.knots;
            for (r, d) in derivs.iter_mut().enumerate() {
                let b = start + r;
                let dl = nd(r) / (knots[b + k] - knots[b]);
                let dr = nd(r + 1) / (knots[b + k + 1] - knots[b + 1]);
                *d = k as f64 * (dl - dr);
            }
        }
        Ok(DerivWindow {
            start,
            values: &scratch.values[..k + 1],
            derivs: &scratch.derivs[..k + 1],
        })
    }
}

/// Reusable buffers for repeated window evaluations on one grid.
pub struct SplineScratch {
    values: Vec<f64>,
    lower: Vec<f64>,
    derivs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl SplineScratch {
    pub fn for_grid(grid: &SplineGrid) -> Self {
        let k = grid.degree();
        Self {
            values: vec![0.0; k + 1],
            lower: vec![0.0; k.max(1)],
            derivs: vec![0.0; k + 1],
            left: vec![0.0; k + 1],
            right: vec![0.0; k + 1],
        }
    }
}

/// Borrowed view of the nonzero basis values at a point.
pub struct ValueWindow<'a> {
    pub start: usize,
    pub values: &'a [f64],
}

/// Borrowed view of the nonzero basis values and derivatives at a point.
pub struct DerivWindow<'a> {
    pub start: usize,
    pub values: &'a [f64],
    pub derivs: &'a [f64],
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize, g: usize, lo: f64, hi: f64) -> SplineGrid {
        SplineGrid::new(k, g, lo, hi).unwrap()
    }

    #[test]
    fn degree_zero_grid_is_core_partition() {
        let g = grid(0, 2, 0.0, 1.0);
        assert_eq!(g.knots(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.basis_count(), 2);
    }

    #[test]
    fn degree_five_grid_counts() {
        let g = grid(5, 7, -1.0, 1.0);
        assert_eq!(g.knots().len(), 18);
        assert_eq!(g.basis_count(), 12);
    }

    #[test]
    fn one_interval_linear_grid() {
        let g = grid(1, 1, 0.0, 1.0);
        assert_eq!(g.knots(), &[-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(g.basis_count(), 2);
    }

    #[test]
    fn core_knots_uniform() {
        let g = grid(5, 7, -1.0, 1.0);
        let h = 2.0 / 7.0;
        for w in g.knots().windows(2) {
            assert!((w[1] - w[0] - h).abs() < 1e-14);
        }
        assert_eq!(g.knots()[5], -1.0);
        assert_eq!(g.knots()[12], 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            SplineGrid::new(2, 3, 1.0, 1.0),
            Err(SplineError::DegenerateDomain { .. })
        ));
        assert!(matches!(
            SplineGrid::new(2, 3, 2.0, -1.0),
            Err(SplineError::DegenerateDomain { .. })
        ));
        assert!(matches!(
            SplineGrid::new(2, 0, 0.0, 1.0),
            Err(SplineError::InvalidIntervalCount(0))
        ));
    }

    #[test]
    fn degree_zero_basis_is_span_indicator() {
        let g = grid(0, 2, 0.0, 1.0);
        assert_eq!(g.basis_values(0.25).unwrap(), vec![1.0, 0.0]);
        assert_eq!(g.basis_values(0.75).unwrap(), vec![0.0, 1.0]);
        // Right endpoint belongs to the last span.
        assert_eq!(g.basis_values(1.0).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn quadratic_midspan_values_match_hand_evaluation() {
        let g = grid(2, 3, 0.0, 3.0);
        let v = g.basis_values(1.5).unwrap();
        let expected = [0.0, 0.125, 0.75, 0.125, 0.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn partition_of_unity_at_default_configuration() {
        let g = grid(5, 7, -1.0, 1.0);
        let v = g.basis_values(0.3).unwrap();
        assert_eq!(v.len(), 12);
        let sum: f64 = v.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn local_support_window() {
        let g = grid(2, 3, 0.0, 3.0);
        let k = g.degree();
        for b in 0..g.basis_count() {
            let lo = g.knots()[b];
            let hi = g.knots()[b + k + 1];
            for i in 0..=300 {
                let x = i as f64 / 100.0;
                let v = g.basis_values(x).unwrap()[b];

                if x < lo - 1e-12 || x > hi + 1e-12 {
                    assert_eq!(v, 0.0, "basis {b} at {x}");
                }
            }
        }
    }

    #[test]
    fn degree_zero_derivatives_vanish() {
        let g = grid(0, 4, 0.0, 1.0);
        assert!(g.basis_derivatives(0.3).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn derivatives_sum_to_zero() {
        for &(k, gg) in &[(1usize, 4usize), (2, 3), (3, 5), (5, 7)] {
            let g = grid(k, gg, -1.0, 1.0);
            for i in 1..20 {
                let x = -1.0 + 2.0 * i as f64 / 20.0;
                let s: f64 = g.basis_derivatives(x).unwrap().iter().sum();
                assert!(s.abs() < 1e-10, "k={k} G={gg} x={x} sum={s}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = grid(2, 3, 0.0, 3.0);
        let h = 1e-5;
        let x = 1.5;
        let d = g.basis_derivatives(x).unwrap();
        let up = g.basis_values(x + h).unwrap();
        let dn = g.basis_values(x - h).unwrap();
        for b in 0..g.basis_count() {
            let fd = (up[b] - dn[b]) / (2.0 * h);
            assert!((d[b] - fd).abs() < 1e-6, "basis {b}: {} vs {}", d[b], fd);
        }
    }

    #[test]
    fn spline_eval_constant_coefficients() {
        let g = grid(3, 5, -1.0, 1.0);
        let coeffs = vec![2.5; g.basis_count()];
        for i in 0..=10 {
            let x = -1.0 + 0.2 * i as f64;
            assert!((g.spline_eval(&coeffs, x).unwrap() - 2.5).abs() < 1e-12);
        }
        let zeros = vec![0.0; g.basis_count()];
        assert_eq!(g.spline_eval(&zeros, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn spline_eval_single_coefficient_midspan() {
        let g = grid(2, 3, 0.0, 3.0);
        let mut coeffs = vec![0.0; g.basis_count()];
        coeffs[1] = 1.0;
        let v = g.spline_eval(&coeffs, 1.5).unwrap();
        assert!((v - 0.125).abs() < 1e-12);
    }

    #[test]
    fn spline_eval_checks_coefficient_count() {
        let g = grid(2, 3, 0.0, 3.0);
        assert_eq!(
            g.spline_eval(&[1.0, 2.0], 1.0),
            Err(SplineError::CoefficientCount {
                expected: 5,
                got: 2
            })
        );
    }

    #[test]
    fn domain_tolerance_clamps_and_rejects() {
        let g = grid(2, 3, 0.0, 3.0);
        // Inside the tolerance band: clamped to the endpoint.
        let v = g.basis_values(3.0 + 1e-10).unwrap();
        let at_end = g.basis_values(3.0).unwrap();
        assert_eq!(v, at_end);
        // Beyond it: rejected.
        assert!(matches!(
            g.basis_values(3.0 + 1e-6),
            Err(SplineError::OutOfDomain { .. })
        ));
        assert!(matches!(
            g.basis_values(f64::NAN),
            Err(SplineError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn linearity_in_coefficients() {
        let g = grid(3, 6, -1.0, 1.0);
        let b = g.basis_count();
        let c1: Vec<f64> = (0..b).map(|i| (i as f64 * 0.37).sin()).collect();
        let c2: Vec<f64> = (0..b).map(|i| (i as f64 * 0.11).cos()).collect();
        let (a, bb) = (0.7, -1.3);
        let mixed: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + bb * y).collect();
        for i in 0..=20 {
            let x = -1.0 + 0.1 * i as f64;
            let lhs = g.spline_eval(&mixed, x).unwrap();
            let rhs = a * g.spline_eval(&c1, x).unwrap() + bb * g.spline_eval(&c2, x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
