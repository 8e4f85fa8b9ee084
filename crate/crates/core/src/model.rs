//! Primal weights and the dual state maintained by coordinate ascent.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::projection;
use crate::sign::SignPattern;

/// Weights `w ∈ R^d`, or `W ∈ R^{d×m}` stored column-major (one column per
/// class), together with the sign pattern they satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalModel {
    weights: Vec<f64>,
    pattern: SignPattern,
}

impl PrimalModel {
    /// Fails if the shapes disagree or `weights` violates `pattern`.
    pub fn new(weights: Vec<f64>, pattern: SignPattern) -> Result<Self> {
        if weights.len() != pattern.len() {
            return Err(Error::DimensionMismatch {
                what: "model weights",
                expected: pattern.len(),
                found: weights.len(),
            });
        }
        if !pattern.is_feasible(&weights) {
            return Err(Error::InvalidConfig(
                "weights violate their sign pattern".into(),
            ));
        }
        Ok(PrimalModel { weights, pattern })
    }

    pub fn zeros(pattern: SignPattern) -> Self {
        PrimalModel {
            weights: vec![0.0; pattern.len()],
            pattern,
        }
    }

    /// For solver outputs that are feasible by construction.
    pub(crate) fn from_feasible(weights: Vec<f64>, pattern: &SignPattern) -> Self {
        debug_assert!(pattern.is_feasible(&weights));
        PrimalModel {
            weights,
            pattern: pattern.clone(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pattern(&self) -> &SignPattern {
        &self.pattern
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    /// Number of weight columns; 1 for binary and regression models.
    pub fn outputs(&self) -> usize {
        self.pattern.classes()
    }

    /// Weight column for class `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.weights[j * d..(j + 1) * d]
    }

    /// `Wᵀ x`, one score per output.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs()).map(|j| linalg::dot(self.column(j), x)).collect()
    }

    /// Scores of every example in `data`, `outputs()` values per example.
    pub fn score_all(&self, data: &DataMatrix) -> Result<Vec<f64>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.dim(),
                found: data.dim(),
            });
        }
        Ok(data.columns().flat_map(|x| self.scores(x)).collect())
    }

    /// Highest-scoring class, ties going to the smaller index.
    pub fn predict_class(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for (j, &v) in s.iter().enumerate().skip(1) {
            if v > s[best] {
                best = j;
            }
        }
        best
    }
}

/// Dual variables `α` (one length-`m` block per example) with the running
/// primal accumulator `w̄ = Xα/(λn)` and its sign-corrected image
/// `w = Π_S(w̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    alpha: Vec<f64>,
    w_bar: Vec<f64>,
    w: Vec<f64>,
    outputs: usize,
}

impl DualState {
    /// `α = 0`, `w̄ = 0`, `w = 0`.
    pub fn zeros(n: usize, d: usize, outputs: usize) -> Self {
        DualState {
            alpha: vec![0.0; n * outputs],
            w_bar: vec![0.0; d * outputs],
            w: vec![0.0; d * outputs],
            outputs,
        }
    }

    /// Builds a consistent state from an arbitrary `α`, computing `w̄` from
    /// scratch.
    pub fn from_alpha(
        alpha: Vec<f64>,
        data: &DataMatrix,
        lambda: f64,
        pattern: &SignPattern,
    ) -> Result<Self> {
        let outputs = pattern.classes();
        if pattern.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                what: "sign pattern rows",
                expected: data.dim(),
                found: pattern.dim(),
            });
        }
        if alpha.len() != data.len() * outputs {
            return Err(Error::DimensionMismatch {
                what: "dual vector",
                expected: data.len() * outputs,
                found: alpha.len(),
            });
        }
        let w_bar = primal_accumulator(&alpha, outputs, data, lambda);
        let w = projection::sign_correct(&w_bar, pattern);
        Ok(DualState {
            alpha,
            w_bar,
            w,
            outputs,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// The block `α_i` (a single value for scalar losses).
    pub fn alpha_i(&self, i: usize) -> &[f64] {
        &self.alpha[i * self.outputs..(i + 1) * self.outputs]
    }

    pub fn w_bar(&self) -> &[f64] {
        &self.w_bar
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Applies `α_i += Δ`, `w̄ += x_i Δᵀ/(λn)` and refreshes `w`.
    pub(crate) fn apply(
        &mut self,
        i: usize,
        delta: &[f64],
        x: &[f64],
        lambda_n: f64,
        pattern: &SignPattern,
    ) {
        let d = x.len();
        for (j, &dj) in delta.iter().enumerate() {
            self.alpha[i * self.outputs + j] += dj;
            if dj != 0.0 {
                linalg::axpy(dj / lambda_n, x, &mut self.w_bar[j * d..(j + 1) * d]);
            }
        }
        self.w.copy_from_slice(&self.w_bar);
        projection::sign_correct_in_place(&mut self.w, pattern);
    }

    /// Largest entrywise deviation of the incrementally maintained `w̄` from
    /// a fresh `Xα/(λn)`, relative to `max(1, max |w̄|)`.
    pub fn bookkeeping_error(&self, data: &DataMatrix, lambda: f64) -> f64 {
        let fresh = primal_accumulator(&self.alpha, self.outputs, data, lambda);
        let scale = fresh.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        fresh
            .iter()
            .zip(&self.w_bar)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }
}

/// `(1/λn) Σ_i x_i α_iᵀ`, flattened column-major.
pub(crate) fn primal_accumulator(
    alpha: &[f64],
    outputs: usize,
    data: &DataMatrix,
    lambda: f64,
) -> Vec<f64> {
    let d = data.dim();
    let lambda_n = lambda * data.len() as f64;
    let mut w = vec![0.0; d * outputs];
    for (i, x) in data.columns().enumerate() {
        for j in 0..outputs {
            let a = alpha[i * outputs + j];
            if a != 0.0 {
                linalg::axpy(a / lambda_n, x, &mut w[j * d..(j + 1) * d]);
            }
        }
    }
    w
}
