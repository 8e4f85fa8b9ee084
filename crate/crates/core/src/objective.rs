//! Primal and dual objective values.
//!
//! `P(w) = λ/2 ||w||² + (1/n) Σ_i φ_i(<w, x_i>)` and
//! `D(α) = −λ/2 ||Π_S(Xα/(λn))||² − (1/n) Σ_i φ_i*(−α_i)`.
//! For multiclass models the norm is Frobenius and the score is `Wᵀ x_i`.
//! Sums run over examples in index order.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::LossSpec;
use crate::model::{primal_accumulator, DualState, PrimalModel};
use crate::projection;
use crate::sign::SignPattern;

pub(crate) fn check_shapes(
    weights_len: usize,
    data: &DataMatrix,
    loss: &LossSpec,
) -> Result<()> {
    let expected = data.dim() * loss.outputs();
    if weights_len != expected {
        return Err(Error::DimensionMismatch {
            what: "weights (d x outputs)",
            expected,
            found: weights_len,
        });
    }
    if data.labels().len() != data.len() {
        return Err(Error::DimensionMismatch {
            what: "label vector",
            expected: data.len(),
            found: data.labels().len(),
        });
    }
    // Validates the label kind against the family.
    LossSpec::new(loss.family(), data.labels())?;
    Ok(())
}

/// `(1/n) Σ_i φ_i(Wᵀ x_i)` for raw flattened weights.
pub(crate) fn empirical_risk(w: &[f64], data: &DataMatrix, loss: &LossSpec) -> f64 {
    let d = data.dim();
    let m = loss.outputs();
    let labels = data.labels();
    let mut s = vec![0.0; m];
    let mut total = 0.0;
    for (i, x) in data.columns().enumerate() {
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = linalg::dot(&w[j * d..(j + 1) * d], x);
        }
        total += loss.value_at(labels.target(i), &s);
    }
    total / data.len() as f64
}

/// `P(w)` for flattened weights, without a feasibility requirement.
pub fn primal_value(w: &[f64], data: &DataMatrix, loss: &LossSpec, lambda: f64) -> Result<f64> {
    check_shapes(w.len(), data, loss)?;
    Ok(0.5 * lambda * linalg::norm_sq(w) + empirical_risk(w, data, loss))
}

/// `P(w)` at a model's weights.
pub fn primal_objective(
    model: &PrimalModel,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<f64> {
    primal_value(model.weights(), data, loss, lambda)
}

/// `(1/n) Σ_i φ_i*(−α_i)`; `+∞` if any block is outside its domain.
pub(crate) fn conjugate_sum(alpha: &[f64], data: &DataMatrix, loss: &LossSpec) -> f64 {
    let m = loss.outputs();
    let labels = data.labels();
    let mut u = vec![0.0; m];
    let mut total = 0.0;
    for i in 0..data.len() {
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = -alpha[i * m + j];
        }
        total += loss.conjugate_at(labels.target(i), &u);
    }
    total / data.len() as f64
}

/// `D(α)` from an explicit dual vector; `−∞` outside the conjugate domain.
pub fn dual_value(
    alpha: &[f64],
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
) -> Result<f64> {
    check_shapes(pattern.len(), data, loss)?;
    let m = loss.outputs();
    if alpha.len() != data.len() * m {
        return Err(Error::DimensionMismatch {
            what: "dual vector",
            expected: data.len() * m,
            found: alpha.len(),
        });
    }
    let w = projection::sign_correct(&primal_accumulator(alpha, m, data, lambda), pattern);
    Ok(-0.5 * lambda * linalg::norm_sq(&w) - conjugate_sum(alpha, data, loss))
}

/// `D(α)` using the state's maintained `w = Π_S(w̄)`; `−∞` outside the
/// conjugate domain.
pub fn dual_objective(
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
) -> Result<f64> {
    check_shapes(state.w().len(), data, loss)?;
    if pattern.len() != state.w().len() {
        return Err(Error::DimensionMismatch {
            what: "sign pattern",
            expected: state.w().len(),
            found: pattern.len(),
        });
    }
    Ok(-0.5 * lambda * linalg::norm_sq(state.w()) - conjugate_sum(state.alpha(), data, loss))
}
