//! High-accuracy deterministic reference solutions, used to score the
//! stochastic solvers.
//!
//! [`reference_solve`] runs projected accelerated gradient (FISTA with
//! backtracking and function-value restarts) on the sign cone. Nonsmooth
//! losses are replaced by smooth surrogates whose uniform error `e(μ)` is
//! known, and `μ` is shrunk by a factor of 10 per stage until `e(μ)` fits
//! in half the tolerance:
//!
//! | loss        | surrogate                                  | `e(μ)`                    |
//! |-------------|--------------------------------------------|---------------------------|
//! | hinge       | smoothed hinge with `γ = μ`                | `μ/2`                     |
//! | absolute    | Huber with width `μ`                       | `μ/2`                     |
//! | max-hinge   | `μ log Σ_j exp(a_j/μ)`                     | `μ ln m`                  |
//! | top-k hinge | entropic top-k sum, then `μ softplus(·/μ)` | `μ (m ln 2 / k + ln 2)`   |
//!
//! A stage stops once the gradient-mapping certificate `||G||²/(2λ)`
//! bounds the surrogate suboptimality, which with the surrogate error
//! bounds the true suboptimality.

use crate::data::{DataMatrix, Target};
use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{self, LossFamily, LossSpec, Smoothness};
use crate::objective;
use crate::pegasos::check_problem;
use crate::projection;
use crate::sign::SignPattern;

/// Stopping rule for [`reference_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Bound on `P(w) − P★` for the returned `w`.
    pub tol: f64,
    /// Total gradient steps over all smoothing stages.
    pub max_iterations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-9,
            max_iterations: 5_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub weights: Vec<f64>,
    /// `P` at `weights`.
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Surrogate {
    Exact,
    Hinge,
    Huber,
    LogSumExp,
    TopK(usize),
}

impl Surrogate {
    fn of(family: LossFamily) -> Surrogate {
        match family {
            LossFamily::Hinge => Surrogate::Hinge,
            LossFamily::SmoothedHinge { gamma: 0.0 } => Surrogate::Hinge,
            LossFamily::AbsoluteError => Surrogate::Huber,
            LossFamily::MaxHinge => Surrogate::LogSumExp,
            LossFamily::TopKHinge { k } => Surrogate::TopK(k),
            _ => Surrogate::Exact,
        }
    }

    /// `e(μ) / μ`.
    fn error_rate(self, m: usize) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match self {
            Surrogate::Exact => 0.0,
            Surrogate::Hinge | Surrogate::Huber => 0.5,
            Surrogate::LogSumExp => (m as f64).ln(),
            Surrogate::TopK(k) => m as f64 * ln2 / k as f64 + ln2,
        }
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Entropic top-k sum `min_ν kν + μ Σ_j softplus((a_j − ν)/μ)`, with its
/// gradient `q_j = σ((a_j − ν)/μ)` written to `q`.
fn smooth_topk_sum(a: &[f64], k: usize, mu: f64, q: &mut [f64]) -> f64 {
    let m = a.len();
    let kf = k as f64;
    let excess = |nu: f64| a.iter().map(|&aj| sigmoid((aj - nu) / mu)).sum::<f64>() - kf;
    let ratio = (kf / (m as f64 - kf)).ln();
    let amin = a.iter().copied().fold(f64::INFINITY, f64::min);
    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = amin - mu * (ratio.max(0.0) + 1.0);
    let mut hi = amax + mu * ((-ratio).max(0.0) + 1.0);
    let mut nu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = excess(nu);
        if f.abs() <= 1e-15 * kf {
            break;
        }
        if f > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let slope: f64 = a
            .iter()
            .map(|&aj| {
                let s = sigmoid((aj - nu) / mu);
                s * (1.0 - s)
            })
            .sum::<f64>()
            / mu;
        let newton = nu + f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == nu {
            break;
        }
        nu = next;
    }
    let mut v = kf * nu;
    for (qj, &aj) in q.iter_mut().zip(a) {
        let t = (aj - nu) / mu;
        *qj = sigmoid(t);
        v += mu * softplus(t);
    }
    v
}

/// Value of the (surrogate) loss at scores `s`, with its gradient in `g`.
fn surrogate_at(
    sur: Surrogate,
    loss: &LossSpec,
    t: Target,
    s: &[f64],
    mu: f64,
    g: &mut [f64],
    a: &mut [f64],
) -> f64 {
    match (sur, t) {
        (Surrogate::Exact, _) => {
            loss.gradient_at(t, s, g);
            loss.value_at(t, s)
        }
        (Surrogate::Hinge, Target::Value(y)) => {
            let f = LossFamily::SmoothedHinge { gamma: mu };
            g[0] = losses::scalar_derivative(f, y, s[0]);
            losses::scalar_value(f, y, s[0])
        }
        (Surrogate::Huber, Target::Value(y)) => {
            let r = s[0] - y;
            if r.abs() <= mu {
                g[0] = r / mu;
                0.5 * r * r / mu
            } else {
                g[0] = r.signum();
                r.abs() - 0.5 * mu
            }
        }
        (Surrogate::LogSumExp | Surrogate::TopK(_), Target::Class(y)) => {
            for (j, aj) in a.iter_mut().enumerate() {
                *aj = if j == y { 0.0 } else { s[j] - s[y] + 1.0 };
            }
            let v = match sur {
                Surrogate::LogSumExp => {
                    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut z = 0.0;
                    for (gj, &aj) in g.iter_mut().zip(a.iter()) {
                        *gj = ((aj - amax) / mu).exp();
                        z += *gj;
                    }
                    g.iter_mut().for_each(|gj| *gj /= z);
                    amax + mu * z.ln()
                }
                Surrogate::TopK(k) => {
                    let kf = k as f64;
                    let t = smooth_topk_sum(a, k, mu, g) / kf;
                    let c = sigmoid(t / mu) / kf;
                    g.iter_mut().for_each(|gj| *gj *= c);
                    mu * softplus(t / mu)
                }
                _ => unreachable!(),
            };
            // a_j depends on s_j and s_y for j ≠ y; a_y is constant
            g[y] = 0.0;
            let total: f64 = g.iter().sum();
            g[y] = -total;
            v
        }
        _ => unreachable!("label kind checked before solving"),
    }
}

struct Problem<'a> {
    data: &'a DataMatrix,
    loss: &'a LossSpec,
    lambda: f64,
    sur: Surrogate,
    scores: Vec<f64>,
    g: Vec<f64>,
    a: Vec<f64>,
}

impl Problem<'_> {
    /// Surrogate objective at `w`, with its gradient in `grad`.
    fn eval(&mut self, w: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let d = self.data.dim();
        let n = self.data.len() as f64;
        let labels = self.data.labels();
        grad.copy_from_slice(w);
        grad.iter_mut().for_each(|v| *v *= self.lambda);
        let mut risk = 0.0;
        for (i, x) in self.data.columns().enumerate() {
            for (j, s) in self.scores.iter_mut().enumerate() {
                *s = linalg::dot(&w[j * d..(j + 1) * d], x);
            }
            risk += surrogate_at(
                self.sur,
                self.loss,
                labels.target(i),
                &self.scores,
                mu,
                &mut self.g,
                &mut self.a,
            );
            for (j, &gj) in self.g.iter().enumerate() {
                if gj != 0.0 {
                    linalg::axpy(gj / n, x, &mut grad[j * d..(j + 1) * d]);
                }
            }
        }
        0.5 * self.lambda * linalg::norm_sq(w) + risk / n
    }

    fn value(&mut self, w: &[f64], mu: f64) -> f64 {
        let mut scratch = vec![0.0; w.len()];
        self.eval(w, mu, &mut scratch)
    }
}

/// Minimizes `P(w)` over the sign cone to within `options.tol`.
///
/// Returns [`Error::Budget`] with the last objective value if the
/// iteration budget runs out first.
pub fn reference_solve(
    data: &DataMatrix,
    loss: &LossSpec,
    lambda: f64,
    pattern: &SignPattern,
    options: &OracleOptions,
) -> Result<OracleSolution> {
    check_problem(data, loss, pattern)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::InvalidConfig("oracle tolerance must be positive".into()));
    }
    let m = loss.outputs();
    let sur = Surrogate::of(loss.family());
    let rate = sur.error_rate(m);
    let mean_norm_sq = (0..data.len()).map(|i| data.norm_sq(i)).sum::<f64>() / data.len() as f64;
    let mut prob = Problem {
        data,
        loss,
        lambda,
        sur,
        scores: vec![0.0; m],
        g: vec![0.0; m],
        a: vec![0.0; m],
    };

    let half_tol = 0.5 * options.tol;
    let final_mu = if rate > 0.0 { half_tol / rate } else { 0.0 };
    let mut mu = if rate > 0.0 { final_mu.max(1.0f64.min(mean_norm_sq.sqrt())) } else { 0.0 };
    let mut w = vec![0.0; pattern.len()];
    let mut iterations = 0;
    loop {
        let last = mu <= final_mu;
        let stage_tol = if last { half_tol } else { rate * mu };
        let beta = match (sur, loss.smoothness()) {
            (Surrogate::Exact, Smoothness::Smooth(b)) => b,
            _ => 1.0 / mu,
        };
        let l0 = lambda + beta * mean_norm_sq;
        match fista(&mut prob, &mut w, mu, l0, stage_tol, pattern, options.max_iterations - iterations) {
            Ok(k) => iterations += k,
            Err(k) => {
                iterations += k;
                return Err(Error::Budget {
                    iterations,
                    last_objective: objective::primal_value(&w, data, loss, lambda)?,
                });
            }
        }
        if last {
            break;
        }
        mu = (mu / 10.0).max(final_mu);
    }
    let objective = objective::primal_value(&w, data, loss, lambda)?;
    Ok(OracleSolution {
        weights: w,
        objective,
        iterations,
    })
}

/// Runs FISTA from `x` until the certificate drops below `tol`. Returns the
/// step count, or the step count as an error on budget exhaustion; either
/// way `x` holds the best verified iterate.
fn fista(
    prob: &mut Problem<'_>,
    x: &mut [f64],
    mu: f64,
    l0: f64,
    tol: f64,
    pattern: &SignPattern,
    budget: usize,
) -> std::result::Result<usize, usize> {
    let lambda = prob.lambda;
    let len = x.len();
    let mut y = x.to_vec();
    let mut grad = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    let mut x_new = vec![0.0; len];
    let mut fx = prob.value(x, mu);
    let mut t = 1.0f64;
    let mut l = l0;
    for k in 0..budget {
        let fy = prob.eval(&y, mu, &mut grad);
        let fnew = loop {
            for ((xn, &yh), &gh) in x_new.iter_mut().zip(&y).zip(&grad) {
                *xn = yh - gh / l;
            }
            projection::sign_correct_in_place(&mut x_new, pattern);
            let fnew = prob.eval(&x_new, mu, &mut scratch);
            let mut lin = 0.0;
            let mut dist = 0.0;
            for ((&xn, &yh), &gh) in x_new.iter().zip(&y).zip(&grad) {
                lin += gh * (xn - yh);
                dist += (xn - yh) * (xn - yh);
            }
            let slack = 1e-15 * fy.abs().max(1.0);
            if fnew <= fy + lin + 0.5 * l * dist + slack {
                break fnew;
            }
            l *= 2.0;
        };
        let cert = l * l * linalg::dist_sq(&y, &x_new) / (2.0 * lambda);
        if cert <= tol {
            x.copy_from_slice(&x_new);
            return Ok(k + 1);
        }
        if fnew > fx {
            // Reject the step and restart momentum from the last accepted
            // point with a more cautious curvature estimate.
            t = 1.0;
            y.copy_from_slice(x);
            l *= 2.0;
            continue;
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for ((yh, &xn), &xo) in y.iter_mut().zip(&x_new).zip(x.iter()) {
                *yh = xn + beta * (xn - xo);
            }
            x.copy_from_slice(&x_new);
            fx = fnew;
            t = t_next;
        }
        l = (0.9 * l).max(lambda);
    }
    Err(budget)
}

/// Maximizes a scalar function over `[lo, hi]` by scanning a grid of the
/// given step, then refining by ternary search within one step of the best
/// grid point. The refinement is kept only if strictly better, so ties keep
/// the smallest grid point.
pub fn grid_argmax_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    assert!(lo <= hi && step > 0.0, "need lo <= hi and step > 0");
    let count = ((hi - lo) / step).floor() as usize;
    let mut best = (lo, f(lo));
    let try_point = |x: f64, best: &mut (f64, f64)| {
        let v = f(x);
        if v > best.1 {
            *best = (x, v);
        }
    };
    for s in 1..=count {
        try_point(lo + s as f64 * step, &mut best);
    }
    try_point(hi, &mut best);
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    try_point(0.5 * (a + b), &mut best);
    best
}
