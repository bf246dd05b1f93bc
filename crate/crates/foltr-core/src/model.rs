//! Linear and single-hidden-layer neural scoring functions with a flat
//! parameter-vector view.
//!
//! Federation, attacks and defenses all operate on [`ParamVector`] only, so
//! aggregation rules never need to know the model architecture.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num;

/// Flat view of all model parameters; the unit of federation, attack and
/// aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`. Lengths must match.
    pub fn add_scaled(&mut self, other: &ParamVector, alpha: f64) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.0.iter_mut() {
            *a *= alpha;
        }
    }

    pub fn norm(&self) -> f64 {
        num::sqrt(self.0.iter().map(|v| v * v).sum())
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        num::sqrt(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector(values)
    }
}

/// Ranker architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    /// One ReLU hidden layer of the given width, scalar output.
    Neural {
        hidden_dim: usize,
    },
}

/// Architecture plus input dimension; fixes the parameter layout.
///
/// Neural parameters are laid out as `[W, b_h, w_out, b_out]` where `W` is
/// `hidden_dim x input_dim` row-major (one row per hidden unit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
}

pub const DEFAULT_HIDDEN_DIM: usize = 64;

impl ModelSpec {
    pub fn linear(input_dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            input_dim,
        }
    }

    pub fn neural(input_dim: usize, hidden_dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Neural { hidden_dim },
            input_dim,
        }
    }

    pub fn param_len(&self) -> usize {
        match self.kind {
            ModelKind::Linear => self.input_dim,
            ModelKind::Neural { hidden_dim } => {
                self.input_dim * hidden_dim + hidden_dim + hidden_dim + 1
            }
        }
    }

    /// Initial parameters: all zeros for the linear ranker; for the neural
    /// ranker, weights drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
    /// and biases zero. Deterministic per seed.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        match self.kind {
            ModelKind::Linear => ParamVector::zeros(self.input_dim),
            ModelKind::Neural { hidden_dim } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut values = vec![0.0; self.param_len()];
                let w_bound = 1.0 / num::sqrt(self.input_dim as f64);
                for v in values.iter_mut().take(self.input_dim * hidden_dim) {
                    *v = rng.gen_range(-w_bound..w_bound);
                }
                // b_h stays zero
                let out_start = self.input_dim * hidden_dim + hidden_dim;
                let out_bound = 1.0 / num::sqrt(hidden_dim as f64);
                for v in values[out_start..out_start + hidden_dim].iter_mut() {
                    *v = rng.gen_range(-out_bound..out_bound);
                }
                // b_out stays zero
                ParamVector(values)
            }
        }
    }

    fn check_dims(&self, params: &ParamVector, features: &[f64]) -> Result<()> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: features.len(),
            });
        }
        if params.len() != self.param_len() {
            return Err(Error::DimensionMismatch {
                expected: self.param_len(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Score one document.
    pub fn score(&self, params: &ParamVector, features: &[f64]) -> Result<f64> {
        self.check_dims(params, features)?;
        let y = match self.kind {
            ModelKind::Linear => dot(params, features),
            ModelKind::Neural { hidden_dim } => {
                let (w, b_h, w_out, b_out) = self.neural_views(params, hidden_dim);
                let mut y = b_out;
                for h in 0..hidden_dim {
                    let pre =
                        dot(&w[h * self.input_dim..(h + 1) * self.input_dim], features) + b_h[h];
                    if pre > 0.0 {
                        y += w_out[h] * pre;
                    }
                }
                y
            }
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Gradient of the score with respect to the flat parameter vector.
    pub fn score_gradient(&self, params: &ParamVector, features: &[f64]) -> Result<ParamVector> {
        self.check_dims(params, features)?;
        match self.kind {
            ModelKind::Linear => Ok(ParamVector(features.to_vec())),
            ModelKind::Neural { hidden_dim } => {
                let (w, b_h, w_out, _) = self.neural_views(params, hidden_dim);
                let mut grad = vec![0.0; self.param_len()];
                let d = self.input_dim;
                let b_h_start = d * hidden_dim;
                let w_out_start = b_h_start + hidden_dim;
                for h in 0..hidden_dim {
                    let pre = dot(&w[h * d..(h + 1) * d], features) + b_h[h];
                    // ReLU subgradient: zero at the kink.
                    if pre > 0.0 {
                        for (j, &x) in features.iter().enumerate() {
                            grad[h * d + j] = w_out[h] * x;
                        }
                        grad[b_h_start + h] = w_out[h];
                        grad[w_out_start + h] = pre;
                    }
                }
                grad[w_out_start + hidden_dim] = 1.0; // b_out
                Ok(ParamVector(grad))
            }
        }
    }

    fn neural_views<'a>(
        &self,
        params: &'a ParamVector,
        hidden_dim: usize,
    ) -> (&'a [f64], &'a [f64], &'a [f64], f64) {
        let d = self.input_dim;
        let w = &params[..d * hidden_dim];
        let b_h = &params[d * hidden_dim..d * hidden_dim + hidden_dim];
        let w_out = &params[d * hidden_dim + hidden_dim..d * hidden_dim + 2 * hidden_dim];
        let b_out = params[d * hidden_dim + 2 * hidden_dim];
        (w, b_h, w_out, b_out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_init_is_all_zeros() {
        let spec = ModelSpec::linear(46);
        let p = spec.init_params(123);
        assert_eq!(p.len(), 46);
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn neural_param_count() {
        let spec = ModelSpec::neural(2, 3);
        assert_eq!(spec.param_len(), 2 * 3 + 3 + 3 + 1);
        assert_eq!(spec.init_params(0).len(), 13);
    }

    #[test]
    fn neural_init_is_deterministic_and_bounded() {
        let spec = ModelSpec::neural(4, 8);
        let a = spec.init_params(7);
        let b = spec.init_params(7);
        assert_eq!(a, b);
        let c = spec.init_params(8);
        assert_ne!(a, c);
        let w_bound = 1.0 / 2.0;
        for &v in a.iter().take(32) {
            assert!(v.abs() <= w_bound);
        }
        // hidden biases zero
        for &v in a[32..40].iter() {
            assert_eq!(v, 0.0);
        }
        // output bias zero
        assert_eq!(a[48], 0.0);
    }

    #[test]
    fn linear_score_is_dot_product() {
        let spec = ModelSpec::linear(2);
        let p = ParamVector(vec![1.0, 2.0]);
        assert_eq!(spec.score(&p, &[3.0, 4.0]).unwrap(), 11.0);
        let zero = ParamVector::zeros(2);
        assert_eq!(spec.score(&zero, &[5.0, -7.0]).unwrap(), 0.0);
    }

    #[test]
    fn score_rejects_dimension_mismatch() {
        let spec = ModelSpec::linear(2);
        let p = ParamVector(vec![1.0, 2.0]);
        assert!(matches!(
            spec.score(&p, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let p3 = ParamVector(vec![1.0, 2.0, 3.0]);
        assert!(spec.score(&p3, &[1.0, 2.0]).is_err());
    }

    /// Independent forward pass written in a different style (explicit
    /// index arithmetic, no early relu skip).
    fn neural_forward_oracle(spec: &ModelSpec, params: &[f64], x: &[f64]) -> f64 {
        let (d, h) = match spec.kind {
            ModelKind::Neural { hidden_dim } => (spec.input_dim, hidden_dim),
            _ => unreachable!(),
        };
        let mut acc = params[d * h + 2 * h];
        for i in 0..h {
            let mut pre = params[d * h + i];
            for j in 0..d {
                pre += params[i * d + j] * x[j];
            }
            let relu = if pre > 0.0 { pre } else { 0.0 };
            acc += params[d * h + h + i] * relu;
        }
        acc
    }

    #[test]
    fn neural_score_matches_independent_forward_pass() {
        let spec = ModelSpec::neural(5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let params = ParamVector(
                (0..spec.param_len())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            );
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = spec.score(&params, &x).unwrap();
            let want = neural_forward_oracle(&spec, &params, &x);
            assert!((got - want).abs() < 1e-12);
        }
    }

    fn finite_diff_gradient(spec: &ModelSpec, params: &ParamVector, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..params.len())
            .map(|i| {
                let mut plus = params.clone();
                plus[i] += h;
                let mut minus = params.clone();
                minus[i] -= h;
                (spec.score(&plus, x).unwrap() - spec.score(&minus, x).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn linear_gradient_is_the_feature_vector() {
        let spec = ModelSpec::linear(3);
        let p = ParamVector(vec![0.3, -0.2, 0.9]);
        let x = [1.5, -2.0, 0.25];
        let g = spec.score_gradient(&p, &x).unwrap();
        assert_eq!(&g[..], &x[..]);
    }

    #[test]
    fn zero_hidden_weights_gradient_is_relu_of_biases() {
        // W = 0 so hidden activations equal relu(b_h); the output-weight
        // gradient components must match, verified numerically.
        let spec = ModelSpec::neural(3, 4);
        let mut params = ParamVector::zeros(spec.param_len());
        let b_h = [0.5, -0.3, 1.2, 0.0];
        for (i, &b) in b_h.iter().enumerate() {
            params[3 * 4 + i] = b;
        }
        for i in 0..4 {
            params[3 * 4 + 4 + i] = 0.7; // nonzero output weights
        }
        let x = [0.2, -0.4, 0.6];
        let g = spec.score_gradient(&params, &x).unwrap();
        let fd = finite_diff_gradient(&spec, &params, &x);
        for (i, &b) in b_h.iter().enumerate() {
            let idx = 3 * 4 + 4 + i;
            let relu_b = if b > 0.0 { b } else { 0.0 };
            assert!((g[idx] - relu_b).abs() < 1e-12);
            // skip the exact-kink coordinate (b_h = 0): central differences
            // straddle the non-differentiable point there
            if b != 0.0 {
                assert!((g[idx] - fd[idx]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for spec in [ModelSpec::linear(4), ModelSpec::neural(4, 3)] {
            for _ in 0..20 {
                let params = ParamVector(
                    (0..spec.param_len())
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect(),
                );
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let g = spec.score_gradient(&params, &x).unwrap();
                let fd = finite_diff_gradient(&spec, &params, &x);
                for (a, b) in g.iter().zip(fd.iter()) {
                    let tol = 1e-5_f64.max(1e-4 * b.abs());
                    assert!((a - b).abs() < tol, "analytic {a} vs fd {b}");
                }
            }
        }
    }

    #[test]
    fn linear_score_is_homogeneous() {
        let spec = ModelSpec::linear(3);
        let p = ParamVector(vec![0.4, -1.0, 2.0]);
        let x = [0.1, 0.2, 0.3];
        let base = spec.score(&p, &x).unwrap();
        for alpha in [0.0, 0.5, -2.0, 10.0] {
            let mut scaled = p.clone();
            scaled.scale(alpha);
            let got = spec.score(&scaled, &x).unwrap();
            assert!((got - alpha * base).abs() < 1e-12);
        }
    }
}
