//! Per-example losses `φ_i` with their (sub)gradients, convex conjugates and
//! the constants the solvers need.
//!
//! Binary and regression losses act on a scalar score `s = <w, x_i>`; the
//! multiclass losses act on the score vector `s = Wᵀ x_i ∈ R^m`. Every
//! entry point takes the score as a slice so both cases share one surface.
//!
//! Conjugates are `φ*(u) = sup_s (<u, s> − φ(s))` and return `+∞` outside
//! their effective domain. The closed forms, with `b = u·y` for the binary
//! losses and `p = u + e_y` for the multiclass ones:
//!
//! | family          | conjugate                          | domain                         |
//! |-----------------|------------------------------------|--------------------------------|
//! | hinge           | `b`                                | `b ∈ [−1, 0]`                  |
//! | smoothed hinge  | `b + γ b² / 2`                     | `b ∈ [−1, 0]`                  |
//! | logistic        | `(−b) ln(−b) + (1 + b) ln(1 + b)`  | `b ∈ [−1, 0]`                  |
//! | square          | `u² / 2 + u y`                     | all `u`                        |
//! | absolute        | `u y`                              | `|u| ≤ 1`                      |
//! | soft-max        | `Σ_j p_j ln p_j`                   | `p` in the simplex             |
//! | max-hinge       | `p_y − 1`                          | `p` in the simplex             |
//! | top-k hinge     | `p_y − 1`                          | simplex, `p_j ≤ 1/k`, `(k−1) p_j + p_y ≤ 1` for `j ≠ y` |

use std::fmt;
use std::str::FromStr;

use crate::data::{Labels, Target};
use crate::error::{Error, Result};

/// Slack allowed on conjugate domain boundaries, absorbing the rounding of
/// dual updates that land exactly on an edge.
pub const DOMAIN_TOL: f64 = 1e-12;

/// The loss families available to both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFamily {
    /// `max(0, 1 − y s)`
    Hinge,
    /// Hinge with a quadratic piece of width `gamma` around the kink.
    SmoothedHinge { gamma: f64 },
    /// `ln(1 + exp(−y s))`
    Logistic,
    /// `(s − y)² / 2`
    SquareError,
    /// `|s − y|`
    AbsoluteError,
    /// `ln Σ_j exp(s_j − s_y)`
    Softmax,
    /// `max_j (s_j − s_y + [j ≠ y])`
    MaxHinge,
    /// `max(0, mean of the k largest entries of (s_j − s_y + [j ≠ y])_j)`
    TopKHinge { k: usize },
}

/// Regularity class of a loss, as used by the convergence guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    /// `|φ(s + δ) − φ(s)| ≤ L |δ|`
    Lipschitz(f64),
    /// Gradient is Lipschitz with this constant (`1/γ`).
    Smooth(f64),
}

impl LossFamily {
    pub fn is_multiclass(&self) -> bool {
        matches!(
            self,
            LossFamily::Softmax | LossFamily::MaxHinge | LossFamily::TopKHinge { .. }
        )
    }

    /// Families whose labels must be in {−1, +1}.
    pub fn needs_binary_labels(&self) -> bool {
        matches!(
            self,
            LossFamily::Hinge | LossFamily::SmoothedHinge { .. } | LossFamily::Logistic
        )
    }
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossFamily::Hinge => f.write_str("hinge"),
            LossFamily::SmoothedHinge { gamma } => write!(f, "smoothed-hinge@{gamma}"),
            LossFamily::Logistic => f.write_str("logistic"),
            LossFamily::SquareError => f.write_str("square"),
            LossFamily::AbsoluteError => f.write_str("absolute"),
            LossFamily::Softmax => f.write_str("softmax"),
            LossFamily::MaxHinge => f.write_str("max-hinge"),
            LossFamily::TopKHinge { k } => write!(f, "top-k@{k}"),
        }
    }
}

impl FromStr for LossFamily {
    type Err = Error;

    /// Parses the names produced by `Display`: parameterised families carry
    /// their parameter after `@` (`smoothed-hinge@0.01`, `top-k@2`).
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once('@') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let bad = || Error::InvalidConfig(format!("unknown loss `{s}`"));
        let family = match (name, param) {
            ("hinge", None) => LossFamily::Hinge,
            ("smoothed-hinge", Some(p)) => LossFamily::SmoothedHinge {
                gamma: p.parse().map_err(|_| bad())?,
            },
            ("logistic", None) => LossFamily::Logistic,
            ("square", None) => LossFamily::SquareError,
            ("absolute", None) => LossFamily::AbsoluteError,
            ("softmax", None) => LossFamily::Softmax,
            ("max-hinge", None) => LossFamily::MaxHinge,
            ("top-k", Some(p)) => LossFamily::TopKHinge {
                k: p.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        if let LossFamily::SmoothedHinge { gamma } = family {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::InvalidConfig(format!(
                    "smoothed hinge needs 0 <= gamma <= 1, got {gamma}"
                )));
            }
        }
        Ok(family)
    }
}

/// A loss family bound to a label set: knows the score arity and the
/// `r_loss` bound `(1/n) Φ(0) ≤ r_loss`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    family: LossFamily,
    outputs: usize,
    r_loss: f64,
}

impl LossSpec {
    /// Validates `labels` against the family and computes `r_loss`.
    pub fn new(family: LossFamily, labels: &Labels) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidLabels("empty label vector".into()));
        }
        let require_binary = || match labels {
            Labels::Binary(_) => Ok(()),
            other => Err(Error::InvalidLabels(format!(
                "loss `{family}` needs binary labels, got {} labels",
                other.kind()
            ))),
        };
        let scalar_labels = || {
            labels.values().ok_or_else(|| {
                Error::InvalidLabels(format!("loss `{family}` needs scalar labels"))
            })
        };
        let class_count = || {
            labels.class_count().ok_or_else(|| {
                Error::InvalidLabels(format!(
                    "loss `{family}` needs class labels, got {} labels",
                    labels.kind()
                ))
            })
        };

        let (outputs, r_loss) = match family {
            LossFamily::Hinge => {
                require_binary()?;
                (1, 1.0)
            }
            LossFamily::SmoothedHinge { gamma } => {
                require_binary()?;
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::InvalidConfig(format!(
                        "smoothed hinge needs 0 <= gamma <= 1, got {gamma}"
                    )));
                }
                (1, 1.0 - 0.5 * gamma)
            }
            LossFamily::Logistic => {
                require_binary()?;
                (1, std::f64::consts::LN_2)
            }
            LossFamily::SquareError => {
                let y = scalar_labels()?;
                (1, y.iter().map(|v| v * v).sum::<f64>() / (2.0 * n as f64))
            }
            LossFamily::AbsoluteError => {
                let y = scalar_labels()?;
                (1, y.iter().map(|v| v.abs()).sum::<f64>() / n as f64)
            }
            LossFamily::Softmax => {
                let m = class_count()?;
                (m, (m as f64).ln())
            }
            LossFamily::MaxHinge => (class_count()?, 1.0),
            LossFamily::TopKHinge { k } => {
                let m = class_count()?;
                if k == 0 || k >= m {
                    return Err(Error::InvalidConfig(format!(
                        "top-k hinge needs 1 <= k < m, got k={k}, m={m}"
                    )));
                }
                (m, 1.0)
            }
        };
        Ok(LossSpec {
            family,
            outputs,
            r_loss,
        })
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    /// Score arity: 1 for binary/regression, `m` for multiclass.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn is_multiclass(&self) -> bool {
        self.family.is_multiclass()
    }

    pub fn r_loss(&self) -> f64 {
        self.r_loss
    }

    pub fn smoothness(&self) -> Smoothness {
        match self.family {
            LossFamily::Hinge | LossFamily::AbsoluteError => Smoothness::Lipschitz(1.0),
            LossFamily::SmoothedHinge { gamma } if gamma > 0.0 => Smoothness::Smooth(1.0 / gamma),
            LossFamily::SmoothedHinge { .. } => Smoothness::Lipschitz(1.0),
            LossFamily::Logistic => Smoothness::Smooth(0.25),
            LossFamily::SquareError => Smoothness::Smooth(1.0),
            LossFamily::Softmax => Smoothness::Smooth(1.0),
            LossFamily::MaxHinge | LossFamily::TopKHinge { .. } => {
                Smoothness::Lipschitz(std::f64::consts::SQRT_2)
            }
        }
    }

    /// Global Lipschitz constant in the score, where one exists. The smooth
    /// classification losses are 1-Lipschitz as well; the square loss is not
    /// Lipschitz at all.
    pub fn lipschitz(&self) -> Option<f64> {
        match self.family {
            LossFamily::SquareError => None,
            LossFamily::Hinge
            | LossFamily::SmoothedHinge { .. }
            | LossFamily::Logistic
            | LossFamily::AbsoluteError => Some(1.0),
            LossFamily::Softmax | LossFamily::MaxHinge | LossFamily::TopKHinge { .. } => {
                Some(std::f64::consts::SQRT_2)
            }
        }
    }

    /// `γ` for a `(1/γ)`-smooth loss.
    pub fn gamma(&self) -> Option<f64> {
        match self.smoothness() {
            Smoothness::Smooth(beta) => Some(1.0 / beta),
            Smoothness::Lipschitz(_) => None,
        }
    }

    fn check(&self, labels: &Labels, i: usize, s: &[f64]) -> Result<Target> {
        if s.len() != self.outputs {
            return Err(Error::Arity {
                loss: self.family.to_string(),
                expected: self.outputs,
                found: s.len(),
            });
        }
        if i >= labels.len() {
            return Err(Error::InvalidLabels(format!(
                "example index {i} out of range for {} labels",
                labels.len()
            )));
        }
        let t = labels.target(i);
        match (t, self.is_multiclass()) {
            (Target::Value(_), false) => Ok(t),
            (Target::Class(c), true) if c < self.outputs => Ok(t),
            _ => Err(Error::InvalidLabels(format!(
                "label of example {i} does not fit loss `{}`",
                self.family
            ))),
        }
    }

    /// `φ_i(s)`.
    pub fn value(&self, labels: &Labels, i: usize, s: &[f64]) -> Result<f64> {
        let t = self.check(labels, i, s)?;
        Ok(self.value_at(t, s))
    }

    /// An element of `∂φ_i(s)`; at kinks the choice documented on
    /// [`scalar_derivative`] and [`multiclass_gradient`] is returned.
    pub fn subgradient(&self, labels: &Labels, i: usize, s: &[f64]) -> Result<Vec<f64>> {
        let t = self.check(labels, i, s)?;
        let mut g = vec![0.0; self.outputs];
        self.gradient_at(t, s, &mut g);
        Ok(g)
    }

    /// `φ_i*(u)`, `+∞` outside the domain.
    pub fn conjugate(&self, labels: &Labels, i: usize, u: &[f64]) -> Result<f64> {
        let t = self.check(labels, i, u)?;
        Ok(self.conjugate_at(t, u))
    }

    pub(crate) fn value_at(&self, t: Target, s: &[f64]) -> f64 {
        match t {
            Target::Value(y) => scalar_value(self.family, y, s[0]),
            Target::Class(y) => multiclass_value(self.family, y, s),
        }
    }

    pub(crate) fn gradient_at(&self, t: Target, s: &[f64], out: &mut [f64]) {
        match t {
            Target::Value(y) => out[0] = scalar_derivative(self.family, y, s[0]),
            Target::Class(y) => multiclass_gradient(self.family, y, s, out),
        }
    }

    pub(crate) fn conjugate_at(&self, t: Target, u: &[f64]) -> f64 {
        match t {
            Target::Value(y) => scalar_conjugate(self.family, y, u[0]),
            Target::Class(y) => multiclass_conjugate(self.family, y, u),
        }
    }
}

/// Clamps `b` into `[lo, hi]` if it is within [`DOMAIN_TOL`] of it.
#[inline]
fn in_domain(b: f64, lo: f64, hi: f64) -> Option<f64> {
    if b >= lo - DOMAIN_TOL && b <= hi + DOMAIN_TOL {
        Some(b.clamp(lo, hi))
    } else {
        None
    }
}

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Value of a scalar-score loss.
pub fn scalar_value(family: LossFamily, y: f64, s: f64) -> f64 {
    match family {
        LossFamily::Hinge => (1.0 - y * s).max(0.0),
        LossFamily::SmoothedHinge { gamma } => {
            let m = y * s;
            if m >= 1.0 {
                0.0
            } else if m <= 1.0 - gamma {
                1.0 - m - 0.5 * gamma
            } else {
                (1.0 - m) * (1.0 - m) / (2.0 * gamma)
            }
        }
        LossFamily::Logistic => {
            let a = -y * s;
            if a > 0.0 {
                a + (-a).exp().ln_1p()
            } else {
                a.exp().ln_1p()
            }
        }
        LossFamily::SquareError => 0.5 * (s - y) * (s - y),
        LossFamily::AbsoluteError => (s - y).abs(),
        _ => panic!("{family} is not a scalar loss"),
    }
}

/// Derivative (or subgradient) of a scalar-score loss.
///
/// At kinks: the hinge returns 0 at `y s = 1`, the absolute loss returns 0
/// at `s = y`.
pub fn scalar_derivative(family: LossFamily, y: f64, s: f64) -> f64 {
    match family {
        LossFamily::Hinge => {
            if y * s < 1.0 {
                -y
            } else {
                0.0
            }
        }
        LossFamily::SmoothedHinge { gamma } => {
            let m = y * s;
            if m >= 1.0 {
                0.0
            } else if m <= 1.0 - gamma {
                -y
            } else {
                -y * (1.0 - m) / gamma
            }
        }
        LossFamily::Logistic => {
            let a = y * s;
            if a >= 0.0 {
                let e = (-a).exp();
                -y * e / (1.0 + e)
            } else {
                -y / (1.0 + a.exp())
            }
        }
        LossFamily::SquareError => s - y,
        LossFamily::AbsoluteError => {
            if s > y {
                1.0
            } else if s < y {
                -1.0
            } else {
                0.0
            }
        }
        _ => panic!("{family} is not a scalar loss"),
    }
}

/// Convex conjugate of a scalar-score loss.
pub fn scalar_conjugate(family: LossFamily, y: f64, u: f64) -> f64 {
    match family {
        LossFamily::Hinge => in_domain(u * y, -1.0, 0.0).unwrap_or(f64::INFINITY),
        LossFamily::SmoothedHinge { gamma } => in_domain(u * y, -1.0, 0.0)
            .map(|b| b + 0.5 * gamma * b * b)
            .unwrap_or(f64::INFINITY),
        LossFamily::Logistic => in_domain(u * y, -1.0, 0.0)
            .map(|b| xlogx(-b) + xlogx(1.0 + b))
            .unwrap_or(f64::INFINITY),
        LossFamily::SquareError => 0.5 * u * u + u * y,
        LossFamily::AbsoluteError => in_domain(u, -1.0, 1.0)
            .map(|u| u * y)
            .unwrap_or(f64::INFINITY),
        _ => panic!("{family} is not a scalar loss"),
    }
}

/// Margin vector `a_j = s_j − s_y + [j ≠ y]`.
fn margins(y: usize, s: &[f64]) -> Vec<f64> {
    let sy = s[y];
    s.iter()
        .enumerate()
        .map(|(j, &sj)| if j == y { 0.0 } else { sj - sy + 1.0 })
        .collect()
}

/// Indices of the `k` largest entries, ties going to the smaller index.
fn top_k_indices(a: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    idx.truncate(k);
    idx
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Value of a multiclass loss at score vector `s` for true class `y`.
pub fn multiclass_value(family: LossFamily, y: usize, s: &[f64]) -> f64 {
    match family {
        LossFamily::Softmax => (log_sum_exp(s) - s[y]).max(0.0),
        LossFamily::MaxHinge => margins(y, s)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
        LossFamily::TopKHinge { k } => {
            let a = margins(y, s);
            let top: f64 = top_k_indices(&a, k).iter().map(|&j| a[j]).sum();
            (top / k as f64).max(0.0)
        }
        _ => panic!("{family} is not a multiclass loss"),
    }
}

/// Gradient (or subgradient) of a multiclass loss, written into `out`.
///
/// The max-hinge uses the smallest-index maximiser of the margins. The
/// top-k hinge uses the `k` largest margins (ties to the smaller index)
/// while their mean is non-negative, and 0 once it is negative; with
/// `k = 1` this coincides with the max-hinge choice.
pub fn multiclass_gradient(family: LossFamily, y: usize, s: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    match family {
        LossFamily::Softmax => {
            let lse = log_sum_exp(s);
            for (g, &sj) in out.iter_mut().zip(s) {
                *g = (sj - lse).exp();
            }
            out[y] -= 1.0;
        }
        LossFamily::MaxHinge => {
            let a = margins(y, s);
            let j = top_k_indices(&a, 1)[0];
            out[j] += 1.0;
            out[y] -= 1.0;
        }
        LossFamily::TopKHinge { k } => {
            let a = margins(y, s);
            let top = top_k_indices(&a, k);
            let sum: f64 = top.iter().map(|&j| a[j]).sum();
            if sum >= 0.0 {
                let w = 1.0 / k as f64;
                for &j in &top {
                    out[j] += w;
                    out[y] -= w;
                }
            }
        }
        _ => panic!("{family} is not a multiclass loss"),
    }
}

/// Convex conjugate of a multiclass loss at `u ∈ R^m`.
pub fn multiclass_conjugate(family: LossFamily, y: usize, u: &[f64]) -> f64 {
    let total: f64 = u.iter().sum();
    if total.abs() > DOMAIN_TOL * u.len() as f64 {
        return f64::INFINITY;
    }
    let mut p = u.to_vec();
    p[y] += 1.0;
    if p.iter().any(|&v| v < -DOMAIN_TOL) {
        return f64::INFINITY;
    }
    match family {
        LossFamily::Softmax => p.iter().map(|&v| xlogx(v.max(0.0))).sum(),
        LossFamily::MaxHinge => p[y].max(0.0) - 1.0,
        LossFamily::TopKHinge { k } => {
            let cap = 1.0 / k as f64;
            let slack = 1.0 - p[y];
            let ok = p.iter().enumerate().filter(|&(j, _)| j != y).all(|(_, &pj)| {
                pj <= cap + DOMAIN_TOL && (k as f64 - 1.0) * pj <= slack + DOMAIN_TOL
            });
            if ok {
                p[y].max(0.0) - 1.0
            } else {
                f64::INFINITY
            }
        }
        _ => panic!("{family} is not a multiclass loss"),
    }
}
