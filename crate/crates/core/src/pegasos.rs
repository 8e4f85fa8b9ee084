//! Sign-constrained Pegasos.
//!
//! Each iteration takes a subgradient step on the mini-batch objective
//! `P_t(w) = λ/2 ||w||² + (1/k) Σ_{i∈A_t} φ_i(<w, x_i>)` with step size
//! `1/(λt)`, clamps coordinates that violate their sign, and shrinks the
//! result onto the ball of radius `sqrt(r_loss/λ)`. The returned model is
//! the average of `w_1 = 0, …, w_T`.
//!
//! Multiclass losses run through the same code with `W ∈ R^{d×m}` flattened
//! column-major and the Frobenius norm.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::LossSpec;
use crate::model::PrimalModel;
use crate::objective;
use crate::projection;
use crate::sign::SignPattern;
use crate::trace::{ConvergenceTrace, Recorder, TraceRow};

/// Output of [`train_pegasos`].
#[derive(Debug, Clone)]
pub struct PegasosRun {
    /// `(1/T) Σ_{t=1}^T w_t`.
    pub averaged: PrimalModel,
    /// `w_{T+1}`.
    pub final_iterate: PrimalModel,
    pub trace: ConvergenceTrace,
}

pub(crate) fn check_problem(data: &DataMatrix, loss: &LossSpec, pattern: &SignPattern) -> Result<()> {
    if pattern.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            what: "sign pattern rows",
            expected: data.dim(),
            found: pattern.dim(),
        });
    }
    if pattern.classes() != loss.outputs() {
        return Err(Error::DimensionMismatch {
            what: "sign pattern columns",
            expected: loss.outputs(),
            found: pattern.classes(),
        });
    }
    LossSpec::new(loss.family(), data.labels())?;
    Ok(())
}

struct Workspace {
    grad: Vec<f64>,
    scores: Vec<f64>,
    g: Vec<f64>,
}

impl Workspace {
    fn new(d: usize, m: usize) -> Self {
        Workspace {
            grad: vec![0.0; d * m],
            scores: vec![0.0; m],
            g: vec![0.0; m],
        }
    }
}

/// Overwrites `w` with `((t−1)/t) w − (1/(kλt)) Σ_{i∈batch} x_i ∇φ_i(Wᵀx_i)ᵀ`.
fn gradient_step_in_place(
    w: &mut [f64],
    t: usize,
    batch: &[usize],
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    ws: &mut Workspace,
) {
    let d = data.dim();
    let labels = data.labels();
    ws.grad.iter_mut().for_each(|v| *v = 0.0);
    for &i in batch {
        let x = data.column(i);
        for (j, s) in ws.scores.iter_mut().enumerate() {
            *s = linalg::dot(&w[j * d..(j + 1) * d], x);
        }
        loss.gradient_at(labels.target(i), &ws.scores, &mut ws.g);
        for (j, &gj) in ws.g.iter().enumerate() {
            if gj != 0.0 {
                linalg::axpy(gj, x, &mut ws.grad[j * d..(j + 1) * d]);
            }
        }
    }
    let a = (t - 1) as f64 / t as f64;
    let b = 1.0 / (batch.len() as f64 * lambda * t as f64);
    for (wh, gh) in w.iter_mut().zip(&ws.grad) {
        *wh = a * *wh - b * gh;
    }
}

fn check_step_args(w: &[f64], t: usize, batch: &[usize], data: &DataMatrix, loss: &LossSpec) -> Result<()> {
    objective::check_shapes(w.len(), data, loss)?;
    if t == 0 {
        return Err(Error::InvalidConfig("iteration index starts at 1".into()));
    }
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty mini-batch".into()));
    }
    if let Some(&i) = batch.iter().find(|&&i| i >= data.len()) {
        return Err(Error::InvalidData(format!(
            "batch index {i} out of range for n={}",
            data.len()
        )));
    }
    Ok(())
}

/// The uncorrected iterate `w_{t+1/3}`, evaluated at the current `w_t`.
pub fn gradient_step(
    w: &[f64],
    t: usize,
    batch: &[usize],
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_step_args(w, t, batch, data, loss)?;
    let mut out = w.to_vec();
    let mut ws = Workspace::new(data.dim(), loss.outputs());
    gradient_step_in_place(&mut out, t, batch, data, loss, lambda, &mut ws);
    Ok(out)
}

/// One full iteration: gradient step, sign correction, ball projection.
pub fn pegasos_step(
    w: &[f64],
    t: usize,
    batch: &[usize],
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
) -> Result<Vec<f64>> {
    check_problem(data, loss, pattern)?;
    let mut out = gradient_step(w, t, batch, data, loss, lambda)?;
    projection::sign_correct_in_place(&mut out, pattern);
    projection::project_ball_in_place(&mut out, projection::ball_radius(lambda, loss.r_loss()));
    Ok(out)
}

/// Runs `T` iterations from `w_1 = 0`. Each batch holds `k` distinct
/// examples drawn uniformly; batches are independent across iterations.
pub fn train_pegasos(
    data: &DataMatrix,
    loss: &LossSpec,
    config: &TrainConfig,
    pattern: &SignPattern,
) -> Result<PegasosRun> {
    check_problem(data, loss, pattern)?;
    let n = data.len();
    config.validate_pegasos(n)?;
    let lambda = config.lambda;
    let k = config.batch_size;
    let radius = projection::ball_radius(lambda, loss.r_loss());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ws = Workspace::new(data.dim(), loss.outputs());

    let mut w = vec![0.0; pattern.len()];
    let mut sum = vec![0.0; pattern.len()];
    let mut trace = ConvergenceTrace::new();
    let mut recorder = config.trace_every.map(Recorder::new);
    if let Some(r) = recorder.as_mut() {
        r.sample(&mut trace, 0.0, |ms| pegasos_row(0.0, &w, &w, data, loss, lambda, ms))?;
    }

    for t in 1..=config.iterations {
        for (s, wh) in sum.iter_mut().zip(&w) {
            *s += wh;
        }
        let batch = index::sample(&mut rng, n, k).into_vec();
        gradient_step_in_place(&mut w, t, &batch, data, loss, lambda, &mut ws);
        projection::sign_correct_in_place(&mut w, pattern);
        projection::project_ball_in_place(&mut w, radius);

        if let Some(r) = recorder.as_mut() {
            let epoch = (t * k) as f64 / n as f64;
            if r.due(epoch) || t == config.iterations {
                let avg: Vec<f64> = sum.iter().map(|s| s / t as f64).collect();
                r.sample(&mut trace, epoch, |ms| pegasos_row(epoch, &w, &avg, data, loss, lambda, ms))?;
            }
        }
    }

    let averaged: Vec<f64> = sum.iter().map(|s| s / config.iterations as f64).collect();
    Ok(PegasosRun {
        averaged: PrimalModel::from_feasible(averaged, pattern),
        final_iterate: PrimalModel::from_feasible(w, pattern),
        trace,
    })
}

fn pegasos_row(
    epoch: f64,
    w: &[f64],
    avg: &[f64],
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    wall_ms: f64,
) -> Result<TraceRow> {
    Ok(TraceRow {
        epoch,
        primal: objective::primal_value(w, data, loss, lambda)?,
        primal_average: Some(objective::primal_value(avg, data, loss, lambda)?),
        dual: None,
        gap: None,
        wall_ms,
    })
}

/// [`train_pegasos`] restricted to multiclass losses.
pub fn train_pegasos_multiclass(
    data: &DataMatrix,
    loss: &LossSpec,
    config: &TrainConfig,
    pattern: &SignPattern,
) -> Result<PegasosRun> {
    if !loss.is_multiclass() {
        return Err(Error::InvalidConfig(format!(
            "`{}` is not a multiclass loss",
            loss.family()
        )));
    }
    train_pegasos(data, loss, config, pattern)
}
