//! Euclidean projections onto the sign-constrained cone `S = {w : c ⊙ w >= 0}`
//! and onto its intersection with the ball of radius `sqrt(r_loss / λ)`.
//!
//! Both operate on flat slices, so a `d x m` weight matrix and its sign
//! matrix are handled by the same code as a vector.

use crate::linalg;
use crate::sign::{Sign, SignPattern};

/// Relative slack under which a point counts as inside the ball. It absorbs
/// the rounding of the rescale itself, which keeps the projection exactly
/// idempotent.
const BALL_SLACK: f64 = 8.0 * f64::EPSILON;

/// `Π_S(z) = z + c ⊙ (−c ⊙ z)_+`: clamps entries that violate their sign
/// constraint to zero and leaves the rest untouched.
pub fn sign_correct(z: &[f64], pattern: &SignPattern) -> Vec<f64> {
    let mut w = z.to_vec();
    sign_correct_in_place(&mut w, pattern);
    w
}

pub fn sign_correct_in_place(w: &mut [f64], pattern: &SignPattern) {
    assert_eq!(w.len(), pattern.len(), "sign pattern does not match weights");
    for (v, s) in w.iter_mut().zip(pattern.signs()) {
        match s {
            Sign::Positive if *v < 0.0 => *v = 0.0,
            Sign::Negative if *v > 0.0 => *v = 0.0,
            _ => {}
        }
    }
}

/// Radius of the ball that contains the constrained optimum.
#[inline]
pub fn ball_radius(lambda: f64, r_loss: f64) -> f64 {
    (r_loss / lambda).sqrt()
}

/// Shrinks `w` onto the ball of the given radius if it lies outside.
pub fn project_ball_in_place(w: &mut [f64], radius: f64) {
    let norm = linalg::norm(w);
    if norm > radius * (1.0 + BALL_SLACK) {
        let scale = radius / norm;
        for v in w.iter_mut() {
            *v *= scale;
        }
    }
}

/// `Π_{B∩S}(z) = min{1, sqrt(r_loss/λ) / ||Π_S(z)||} Π_S(z)`.
///
/// When `Π_S(z) = 0` the scale is taken as 1. `r_loss = 0` collapses the
/// ball to the origin.
pub fn project_ball_cap_sign(z: &[f64], pattern: &SignPattern, lambda: f64, r_loss: f64) -> Vec<f64> {
    assert!(lambda > 0.0 && r_loss >= 0.0, "need lambda > 0 and r_loss >= 0");
    let mut w = sign_correct(z, pattern);
    project_ball_in_place(&mut w, ball_radius(lambda, r_loss));
    w
}
