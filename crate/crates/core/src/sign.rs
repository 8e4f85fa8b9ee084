//! Per-coordinate sign constraints.

use std::fmt;

use crate::error::{Error, Result};

/// Constraint on a single weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `w_h <= 0`
    Negative,
    /// unconstrained
    Free,
    /// `w_h >= 0`
    Positive,
}

impl Sign {
    pub fn from_int(c: i64) -> Result<Sign> {
        match c {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Free),
            1 => Ok(Sign::Positive),
            other => Err(Error::InvalidConfig(format!(
                "sign entries must be -1, 0 or +1, got {other}"
            ))),
        }
    }

    pub fn as_int(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Free => 0,
            Sign::Positive => 1,
        }
    }

    #[inline]
    pub fn admits(self, w: f64) -> bool {
        match self {
            Sign::Negative => w <= 0.0,
            Sign::Free => true,
            Sign::Positive => w >= 0.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "-1",
            Sign::Free => "0",
            Sign::Positive => "+1",
        })
    }
}

/// The vector `c` (or the `d x m` matrix `C`) that defines the feasible cone
/// `{w : c ⊙ w >= 0}`.
///
/// Matrices are stored column-major, one column per class, matching the
/// layout of multiclass weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    signs: Vec<Sign>,
    rows: usize,
    cols: usize,
}

impl SignPattern {
    pub fn new(signs: Vec<Sign>) -> Self {
        let rows = signs.len();
        SignPattern {
            signs,
            rows,
            cols: 1,
        }
    }

    pub fn matrix(rows: usize, cols: usize, signs: Vec<Sign>) -> Result<Self> {
        if signs.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "sign matrix",
                expected: rows * cols,
                found: signs.len(),
            });
        }
        Ok(SignPattern { signs, rows, cols })
    }

    pub fn from_ints(c: &[i64]) -> Result<Self> {
        let signs = c.iter().map(|&v| Sign::from_int(v)).collect::<Result<_>>()?;
        Ok(SignPattern::new(signs))
    }

    pub fn unconstrained(d: usize) -> Self {
        SignPattern::new(vec![Sign::Free; d])
    }

    pub fn unconstrained_matrix(d: usize, m: usize) -> Self {
        SignPattern {
            signs: vec![Sign::Free; d * m],
            rows: d,
            cols: m,
        }
    }

    /// Repeats a single-column pattern across `m` class columns.
    pub fn broadcast(&self, m: usize) -> Result<Self> {
        if self.cols != 1 {
            return Err(Error::InvalidConfig(
                "only a single-column pattern can be broadcast".into(),
            ));
        }
        let mut signs = Vec::with_capacity(self.rows * m);
        for _ in 0..m {
            signs.extend_from_slice(&self.signs);
        }
        SignPattern::matrix(self.rows, m, signs)
    }

    /// Feature count `d`.
    pub fn dim(&self) -> usize {
        self.rows
    }

    /// Column count `m` (1 for a vector pattern).
    pub fn classes(&self) -> usize {
        self.cols
    }

    /// Total number of constrained entries, `d * m`.
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn get(&self, idx: usize) -> Sign {
        self.signs[idx]
    }

    pub fn is_unconstrained(&self) -> bool {
        self.signs.iter().all(|&s| s == Sign::Free)
    }

    /// Exact check of `c ⊙ w >= 0`, with no tolerance.
    pub fn is_feasible(&self, w: &[f64]) -> bool {
        w.len() == self.signs.len() && self.signs.iter().zip(w).all(|(s, &v)| s.admits(v))
    }

    /// Signs as integers in {-1, 0, +1}.
    pub fn to_ints(&self) -> Vec<i8> {
        self.signs.iter().map(|s| s.as_int()).collect()
    }
}
