//! Sign-constrained stochastic dual coordinate ascent.
//!
//! The solver keeps dual variables `α`, the accumulator `w̄ = Xα/(λn)` and
//! the primal iterate `w = Π_S(w̄)`. Each iteration picks an example `i`
//! uniformly (with replacement) and raises the local dual objective
//!
//! `D_t(Δ) = −λ/2 ||w + x_i Δᵀ/(λn)||² − (1/n) φ_i*(−α_i − Δ)`
//!
//! either exactly or through a lower bound that only needs smoothness. The
//! returned model is the average of `w` over iterations `T0 .. T−1`.
//!
//! Exact steps, with `z = Wᵀ x_i` and `q = ||x_i||²/(λn)`:
//!
//! * hinge: `Δ = y clip_[0,1]((1 − yz)/q + yα) − α`
//! * smoothed hinge: `β = α + (y − z − γα)/(q + γ)`, then `yβ` clipped to `[0, 1]`
//! * square: `Δ = (y − z − α)/(1 + q)`
//! * absolute: `Δ = clip_[−1,1](α + (y − z)/q) − α`
//! * max-hinge and top-k hinge: with `p = e_y − α − Δ`, the maximizer is the
//!   Euclidean projection of `e_y − α + (z − e_y)/q` onto the conjugate domain
//! * soft-max: the stationarity condition `ln p_j + q p_j = const_j − μ` is
//!   solved per coordinate by Newton's method and for `μ` by safeguarded
//!   Newton on `Σ p_j = 1`
//!
//! When `x_i = 0` the local problem only involves the conjugate and its
//! maximizer is taken directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DualUpdate, TrainConfig};
use crate::data::{DataMatrix, Target};
use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{LossFamily, LossSpec};
use crate::model::{DualState, PrimalModel};
use crate::objective;
use crate::pegasos::check_problem;
use crate::sign::SignPattern;
use crate::trace::{ConvergenceTrace, Recorder, TraceRow};

/// Output of [`train_sdca`].
#[derive(Debug, Clone)]
pub struct SdcaRun {
    /// `(1/(T−T0)) Σ_{t=T0+1}^{T} w^{(t−1)}`.
    pub averaged: PrimalModel,
    /// `w^{(T)}`.
    pub final_iterate: PrimalModel,
    pub state: DualState,
    pub trace: ConvergenceTrace,
    /// The `T0` actually used.
    pub burn_in: usize,
}

/// `s_lb = λnγ / (λnγ + R²)`.
pub fn lower_bound_scale(lambda: f64, n: usize, gamma: f64, radius: f64) -> f64 {
    let a = lambda * n as f64 * gamma;
    a / (a + radius * radius)
}

/// The step rule chosen for a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Plan {
    ScalarExact,
    LowerBound { gamma: f64, s_lb: f64 },
    MulticlassExact,
}

fn has_scalar_closed_form(family: LossFamily) -> bool {
    matches!(
        family,
        LossFamily::Hinge
            | LossFamily::SmoothedHinge { .. }
            | LossFamily::SquareError
            | LossFamily::AbsoluteError
    )
}

fn plan(loss: &LossSpec, update: DualUpdate, data: &DataMatrix, lambda: f64) -> Result<Plan> {
    let family = loss.family();
    let lower_bound = || match loss.gamma() {
        Some(gamma) => Ok(Plan::LowerBound {
            gamma,
            s_lb: lower_bound_scale(lambda, data.len(), gamma, data.radius()),
        }),
        None => Err(Error::Unsupported {
            loss: family.to_string(),
            reason: "the lower-bound step needs a smooth loss".into(),
        }),
    };
    match update {
        DualUpdate::LowerBound => lower_bound(),
        DualUpdate::Auto | DualUpdate::ClosedForm if loss.is_multiclass() => {
            Ok(Plan::MulticlassExact)
        }
        DualUpdate::Auto | DualUpdate::ClosedForm if has_scalar_closed_form(family) => {
            Ok(Plan::ScalarExact)
        }
        DualUpdate::Auto => lower_bound(),
        DualUpdate::ClosedForm => Err(Error::Unsupported {
            loss: family.to_string(),
            reason: "no closed-form coordinate step".into(),
        }),
    }
}

/// Exact scalar step. `lambda_n = λn`.
fn scalar_exact(family: LossFamily, y: f64, alpha: f64, z: f64, norm_sq: f64, lambda_n: f64) -> f64 {
    match family {
        LossFamily::SmoothedHinge { gamma } if gamma > 0.0 => {
            let q = norm_sq / lambda_n;
            let beta = alpha + (y - z - gamma * alpha) / (q + gamma);
            y * (y * beta).clamp(0.0, 1.0) - alpha
        }
        LossFamily::Hinge | LossFamily::SmoothedHinge { .. } => {
            if norm_sq == 0.0 {
                y - alpha
            } else {
                y * ((1.0 - y * z) * (lambda_n / norm_sq) + y * alpha).clamp(0.0, 1.0) - alpha
            }
        }
        LossFamily::SquareError => (y - z - alpha) / (1.0 + norm_sq / lambda_n),
        LossFamily::AbsoluteError => {
            if norm_sq == 0.0 {
                if y > 0.0 {
                    1.0 - alpha
                } else if y < 0.0 {
                    -1.0 - alpha
                } else {
                    0.0
                }
            } else {
                (alpha + (y - z) * (lambda_n / norm_sq)).clamp(-1.0, 1.0) - alpha
            }
        }
        _ => unreachable!("no scalar closed form for {family}"),
    }
}

/// Lower-bound step `Δ = s q` with `q = −∇φ(z) − α`, written into `out`.
fn lower_bound_step(
    loss: &LossSpec,
    t: Target,
    alpha: &[f64],
    z: &[f64],
    gamma: f64,
    s_lb: f64,
    out: &mut [f64],
) {
    loss.gradient_at(t, z, out);
    for (q, a) in out.iter_mut().zip(alpha) {
        *q = -*q - a;
    }
    let qq = linalg::norm_sq(out);
    if qq == 0.0 {
        out.iter_mut().for_each(|q| *q = 0.0);
        return;
    }
    let neg_alpha: Vec<f64> = alpha.iter().map(|a| -a).collect();
    let fenchel = linalg::dot(z, alpha) + loss.conjugate_at(t, &neg_alpha) + loss.value_at(t, z);
    let s = (0.5 + fenchel / (gamma * qq)).clamp(0.0, 1.0 / s_lb) * s_lb;
    for q in out.iter_mut() {
        *q *= s;
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Root of a decreasing function on `[lo, hi]` by bisection, run until the
/// bracket stops shrinking.
fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Projection onto the top-k conjugate domain
/// `{p : Σp = 1, p >= 0, p_j <= 1/k and (k−1) p_j + p_y <= 1 for j ≠ y}`.
///
/// For a fixed `p_y = τ` the remaining coordinates solve a capped-simplex
/// projection `p_j = clip(v_j − θ, 0, cap(τ))`; the outer problem in `τ` is
/// convex and its derivative is monotone, so both levels use bisection.
pub(crate) fn project_topk_domain(v: &[f64], y: usize, k: usize) -> Result<Vec<f64>> {
    if k <= 1 {
        return Ok(project_simplex(v));
    }
    let kf = k as f64;
    let others: Vec<f64> = v.iter().enumerate().filter(|&(j, _)| j != y).map(|(_, &x)| x).collect();
    let vmin = others.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = others.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cap_at = |tau: f64| (1.0 / kf).min((1.0 - tau) / (kf - 1.0));
    let theta_at = |tau: f64| {
        let cap = cap_at(tau);
        let target = 1.0 - tau;
        bisect(vmin - cap - 1.0, vmax + 1.0, |th| {
            others.iter().map(|&x| (x - th).clamp(0.0, cap)).sum::<f64>() - target
        })
    };
    // derivative of the partial minimum in τ, negated so it decreases
    let neg_slope = |tau: f64| {
        let cap = cap_at(tau);
        let th = theta_at(tau);
        let mut slope = tau - v[y] + th;
        if (1.0 - tau) / (kf - 1.0) < 1.0 / kf {
            let mu: f64 = others.iter().map(|&x| (x - th - cap).max(0.0)).sum();
            slope += mu / (kf - 1.0);
        }
        -slope
    };
    let tau = bisect(0.0, 1.0, neg_slope).clamp(0.0, 1.0);
    let cap = cap_at(tau);
    let th = theta_at(tau);
    let mut p: Vec<f64> = v.iter().map(|&x| (x - th).clamp(0.0, cap)).collect();
    p[y] = tau;
    let residual = (p.iter().sum::<f64>() - 1.0).abs();
    if residual > 1e-12 {
        return Err(Error::InnerSolver { residual });
    }
    Ok(p)
}

/// Solves `u + κ e^u = c` for `u`.
fn log_root(c: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return c;
    }
    // Both starts lie right of the root, where Newton on this convex
    // increasing function decreases monotonically.
    let mut u = if c <= kappa { c } else { c.min((c / kappa).ln()) };
    for _ in 0..100 {
        let e = kappa * u.exp();
        let step = (u + e - c) / (1.0 + e);
        u -= step;
        if step.abs() <= 1e-16 * (1.0 + u.abs()) {
            break;
        }
    }
    u
}

/// Minimizes `κ/2 ||p − q0||² − <z, p> + Σ p ln p` over the simplex.
pub(crate) fn softmax_inner(z: &[f64], q0: &[f64], kappa: f64) -> Result<Vec<f64>> {
    let m = z.len();
    let r: Vec<f64> = z.iter().zip(q0).map(|(zj, qj)| zj + kappa * qj - 1.0).collect();
    let rmax = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = rmax - kappa;
    let mut hi = rmax - ((1.0 / m as f64).ln() + kappa / m as f64);
    let mut p = vec![0.0; m];
    let eval = |mu: f64, p: &mut [f64]| {
        let mut total = 0.0;
        let mut deriv = 0.0;
        for (pj, rj) in p.iter_mut().zip(&r) {
            *pj = log_root(rj - mu, kappa).exp();
            total += *pj;
            deriv -= *pj / (1.0 + kappa * *pj);
        }
        (total - 1.0, deriv)
    };
    let mut mu = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let (f, df) = eval(mu, &mut p);
        residual = f.abs();
        if residual <= 1e-15 {
            break;
        }
        if f > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = mu - f / df;
        mu = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * (1.0 + mu.abs()) {
            let (f, _) = eval(mu, &mut p);
            residual = f.abs();
            break;
        }
    }
    if residual > 1e-12 {
        return Err(Error::InnerSolver { residual });
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Exact multiclass step written into `out`; `kappa = ||x_i||²/(λn)`.
fn multiclass_exact(
    family: LossFamily,
    y: usize,
    alpha: &[f64],
    z: &[f64],
    kappa: f64,
    out: &mut [f64],
) -> Result<()> {
    let m = alpha.len();
    let mut q0: Vec<f64> = alpha.iter().map(|a| -a).collect();
    q0[y] += 1.0;
    let p = match family {
        LossFamily::Softmax => softmax_inner(z, &q0, kappa)?,
        LossFamily::MaxHinge | LossFamily::TopKHinge { .. } if kappa == 0.0 => {
            // Only p_y matters: keep a current point that already has
            // p_y = 0, otherwise spread the mass over the other classes.
            let current_ok = q0[y] == 0.0
                && family_conjugate_finite(family, y, &q0);
            if current_ok {
                q0
            } else {
                let mut p = vec![1.0 / (m - 1) as f64; m];
                p[y] = 0.0;
                p
            }
        }
        LossFamily::MaxHinge | LossFamily::TopKHinge { .. } => {
            let mut v = q0;
            for (vj, zj) in v.iter_mut().zip(z) {
                *vj += zj / kappa;
            }
            v[y] -= 1.0 / kappa;
            match family {
                LossFamily::TopKHinge { k } => project_topk_domain(&v, y, k)?,
                _ => project_simplex(&v),
            }
        }
        _ => unreachable!("{family} is not multiclass"),
    };
    // β = e_y − p, Δ = β − α
    for (j, o) in out.iter_mut().enumerate() {
        let beta = if j == y { 1.0 - p[j] } else { -p[j] };
        *o = beta - alpha[j];
    }
    Ok(())
}

fn family_conjugate_finite(family: LossFamily, y: usize, p: &[f64]) -> bool {
    let u: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| if j == y { pj - 1.0 } else { pj })
        .collect();
    crate::losses::multiclass_conjugate(family, y, &u).is_finite()
}

fn check_state(state: &DualState, data: &DataMatrix, loss: &LossSpec, i: usize) -> Result<()> {
    objective::check_shapes(state.w().len(), data, loss)?;
    if state.alpha().len() != data.len() * loss.outputs() {
        return Err(Error::DimensionMismatch {
            what: "dual vector",
            expected: data.len() * loss.outputs(),
            found: state.alpha().len(),
        });
    }
    if i >= data.len() {
        return Err(Error::InvalidData(format!(
            "example index {i} out of range for n={}",
            data.len()
        )));
    }
    Ok(())
}

fn scores(state: &DualState, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (j, s) in out.iter_mut().enumerate() {
        *s = linalg::dot(&state.w()[j * d..(j + 1) * d], x);
    }
}

/// `D_t(Δ)` at the state's projected iterate; `−∞` outside the conjugate
/// domain.
pub fn sdca_local_objective(
    delta: &[f64],
    i: usize,
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<f64> {
    check_state(state, data, loss, i)?;
    let m = loss.outputs();
    if delta.len() != m {
        return Err(Error::Arity {
            loss: loss.family().to_string(),
            expected: m,
            found: delta.len(),
        });
    }
    let d = data.dim();
    let n = data.len() as f64;
    let x = data.column(i);
    let lambda_n = lambda * n;
    let mut w = state.w().to_vec();
    for (j, &dj) in delta.iter().enumerate() {
        linalg::axpy(dj / lambda_n, x, &mut w[j * d..(j + 1) * d]);
    }
    let u: Vec<f64> = state.alpha_i(i).iter().zip(delta).map(|(a, dj)| -a - dj).collect();
    let conj = loss.conjugate_at(data.labels().target(i), &u);
    Ok(-0.5 * lambda * linalg::norm_sq(&w) - conj / n)
}

/// Exact maximizer of `D_t` for the hinge, smoothed hinge, square and
/// absolute losses.
pub fn delta_alpha_closed_form(
    i: usize,
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<f64> {
    check_state(state, data, loss, i)?;
    if !has_scalar_closed_form(loss.family()) {
        return Err(Error::Unsupported {
            loss: loss.family().to_string(),
            reason: "no scalar closed-form coordinate step".into(),
        });
    }
    let Target::Value(y) = data.labels().target(i) else {
        unreachable!("scalar loss with class labels")
    };
    let x = data.column(i);
    let z = linalg::dot(state.w(), x);
    Ok(scalar_exact(
        loss.family(),
        y,
        state.alpha_i(i)[0],
        z,
        data.norm_sq(i),
        lambda * data.len() as f64,
    ))
}

/// The step maximizing the quadratic lower bound of `D_t`; needs a
/// `(1/γ)`-smooth loss.
pub fn delta_alpha_lower_bound(
    i: usize,
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_state(state, data, loss, i)?;
    let Plan::LowerBound { gamma, s_lb } = plan(loss, DualUpdate::LowerBound, data, lambda)? else {
        unreachable!()
    };
    let m = loss.outputs();
    let mut z = vec![0.0; m];
    scores(state, data.column(i), &mut z);
    let mut out = vec![0.0; m];
    lower_bound_step(loss, data.labels().target(i), state.alpha_i(i), &z, gamma, s_lb, &mut out);
    Ok(out)
}

/// Exact maximizer of the `m`-dimensional `D_t` for multiclass losses.
pub fn delta_alpha_multiclass(
    i: usize,
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_state(state, data, loss, i)?;
    if !loss.is_multiclass() {
        return Err(Error::InvalidConfig(format!(
            "`{}` is not a multiclass loss",
            loss.family()
        )));
    }
    let Target::Class(y) = data.labels().target(i) else {
        unreachable!("multiclass loss with scalar labels")
    };
    let m = loss.outputs();
    let mut z = vec![0.0; m];
    scores(state, data.column(i), &mut z);
    let kappa = data.norm_sq(i) / (lambda * data.len() as f64);
    let mut out = vec![0.0; m];
    multiclass_exact(loss.family(), y, state.alpha_i(i), &z, kappa, &mut out)?;
    Ok(out)
}

/// Reusable buffers for [`step_with_plan`].
struct Scratch {
    z: Vec<f64>,
    delta: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn step_with_plan(
    plan: Plan,
    state: &mut DualState,
    i: usize,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda_n: f64,
    pattern: &SignPattern,
    scratch: &mut Scratch,
) -> Result<()> {
    let x = data.column(i);
    let t = data.labels().target(i);
    scores(state, x, &mut scratch.z);
    match (plan, t) {
        (Plan::ScalarExact, Target::Value(y)) => {
            scratch.delta[0] = scalar_exact(
                loss.family(),
                y,
                state.alpha_i(i)[0],
                scratch.z[0],
                data.norm_sq(i),
                lambda_n,
            );
        }
        (Plan::LowerBound { gamma, s_lb }, _) => {
            lower_bound_step(loss, t, state.alpha_i(i), &scratch.z, gamma, s_lb, &mut scratch.delta);
        }
        (Plan::MulticlassExact, Target::Class(y)) => {
            let kappa = data.norm_sq(i) / lambda_n;
            multiclass_exact(loss.family(), y, state.alpha_i(i), &scratch.z, kappa, &mut scratch.delta)?;
        }
        _ => unreachable!("plan does not fit the label kind"),
    }
    state.apply(i, &scratch.delta, x, lambda_n, pattern);
    Ok(())
}

/// One coordinate step on example `i`; returns the applied `Δα_i`.
pub fn sdca_step(
    state: &mut DualState,
    i: usize,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
    update: DualUpdate,
) -> Result<Vec<f64>> {
    check_problem(data, loss, pattern)?;
    check_state(state, data, loss, i)?;
    let plan = plan(loss, update, data, lambda)?;
    let m = loss.outputs();
    let mut scratch = Scratch {
        z: vec![0.0; m],
        delta: vec![0.0; m],
    };
    step_with_plan(plan, state, i, data, loss, lambda * data.len() as f64, pattern, &mut scratch)?;
    Ok(scratch.delta)
}

fn sdca_row(
    epoch: f64,
    state: &DualState,
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
    wall_ms: f64,
) -> Result<TraceRow> {
    let primal = objective::primal_value(state.w(), data, loss, lambda)?;
    let dual = objective::dual_objective(state, data, loss, lambda, pattern)?;
    Ok(TraceRow {
        epoch,
        primal,
        primal_average: None,
        dual: Some(dual),
        gap: Some(primal - dual),
        wall_ms,
    })
}

/// Runs `T` iterations from `α = 0`.
pub fn train_sdca(
    data: &DataMatrix,
    loss: &LossSpec,
    config: &TrainConfig,
    pattern: &SignPattern,
) -> Result<SdcaRun> {
    check_problem(data, loss, pattern)?;
    let n = data.len();
    let t0 = config.validate_sdca(n)?;
    let lambda = config.lambda;
    let lambda_n = lambda * n as f64;
    let plan = plan(loss, config.dual_update, data, lambda)?;
    let m = loss.outputs();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = DualState::zeros(n, data.dim(), m);
    let mut scratch = Scratch {
        z: vec![0.0; m],
        delta: vec![0.0; m],
    };
    let mut sum = vec![0.0; pattern.len()];

    let mut trace = ConvergenceTrace::new();
    let mut recorder = config.trace_every.map(Recorder::new);
    if let Some(r) = recorder.as_mut() {
        r.sample(&mut trace, 0.0, |ms| sdca_row(0.0, &state, data, loss, lambda, pattern, ms))?;
    }

    for t in 1..=config.iterations {
        if t > t0 {
            for (s, wh) in sum.iter_mut().zip(state.w()) {
                *s += wh;
            }
        }
        let i = rng.random_range(0..n);
        step_with_plan(plan, &mut state, i, data, loss, lambda_n, pattern, &mut scratch)?;

        if let Some(r) = recorder.as_mut() {
            let epoch = t as f64 / n as f64;
            if r.due(epoch) || t == config.iterations {
                r.sample(&mut trace, epoch, |ms| {
                    sdca_row(epoch, &state, data, loss, lambda, pattern, ms)
                })?;
            }
        }
    }

    let count = (config.iterations - t0) as f64;
    let averaged: Vec<f64> = sum.iter().map(|s| s / count).collect();
    Ok(SdcaRun {
        averaged: PrimalModel::from_feasible(averaged, pattern),
        final_iterate: PrimalModel::from_feasible(state.w().to_vec(), pattern),
        state,
        trace,
        burn_in: t0,
    })
}

/// [`train_sdca`] restricted to multiclass losses.
pub fn train_sdca_multiclass(
    data: &DataMatrix,
    loss: &LossSpec,
    config: &TrainConfig,
    pattern: &SignPattern,
) -> Result<SdcaRun> {
    if !loss.is_multiclass() {
        return Err(Error::InvalidConfig(format!(
            "`{}` is not a multiclass loss",
            loss.family()
        )));
    }
    train_sdca(data, loss, config, pattern)
}
