//! Example storage: a dense, column-major feature matrix with its labels.

use crate::error::{Error, Result};
use crate::linalg;

/// Per-example supervision.
///
/// Class labels are stored zero-based; the text formats use 1-based classes.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// Entries in {-1, +1}.
    Binary(Vec<f64>),
    /// Arbitrary real targets.
    Real(Vec<f64>),
    /// Class indices in `0..count`.
    Class { classes: Vec<usize>, count: usize },
}

/// The label of a single example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Value(f64),
    Class(usize),
}

impl Labels {
    /// Binary labels; every entry must be exactly -1 or +1.
    pub fn binary(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 1.0 && v != -1.0)
        {
            return Err(Error::InvalidLabels(format!(
                "binary label at example {i} is {v}, expected -1 or +1"
            )));
        }
        Ok(Labels::Binary(values))
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidLabels(format!(
                "label at example {i} is not finite"
            )));
        }
        Ok(Labels::Real(values))
    }

    /// Zero-based class labels over `count` classes.
    pub fn class(classes: Vec<usize>, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidLabels(format!(
                "multiclass labels need at least 2 classes, got {count}"
            )));
        }
        if let Some((i, c)) = classes.iter().enumerate().find(|(_, &c)| c >= count) {
            return Err(Error::InvalidLabels(format!(
                "class label at example {i} is {c}, expected < {count}"
            )));
        }
        Ok(Labels::Class { classes, count })
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Binary(v) | Labels::Real(v) => v.len(),
            Labels::Class { classes, .. } => classes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn target(&self, i: usize) -> Target {
        match self {
            Labels::Binary(v) | Labels::Real(v) => Target::Value(v[i]),
            Labels::Class { classes, .. } => Target::Class(classes[i]),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Labels::Binary(_) => "binary",
            Labels::Real(_) => "real",
            Labels::Class { .. } => "class",
        }
    }

    /// Scalar view of binary or real labels.
    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Labels::Binary(v) | Labels::Real(v) => Some(v),
            Labels::Class { .. } => None,
        }
    }

    pub fn class_count(&self) -> Option<usize> {
        match self {
            Labels::Class { count, .. } => Some(*count),
            _ => None,
        }
    }

    /// Reinterprets scalar labels as binary, failing on anything but +-1.
    pub fn to_binary(&self) -> Result<Labels> {
        match self {
            Labels::Binary(_) => Ok(self.clone()),
            Labels::Real(v) => Labels::binary(v.clone()),
            Labels::Class { .. } => Err(Error::InvalidLabels(
                "class labels cannot be used as binary labels".into(),
            )),
        }
    }

    pub fn to_real(&self) -> Result<Labels> {
        match self {
            Labels::Binary(v) | Labels::Real(v) => Ok(Labels::Real(v.clone())),
            Labels::Class { .. } => Err(Error::InvalidLabels(
                "class labels cannot be used as real targets".into(),
            )),
        }
    }

    /// Reinterprets 1-based integer labels as zero-based classes. The class
    /// count is the largest label, or `min_count` when that is larger.
    pub fn to_classes(&self, min_count: usize) -> Result<Labels> {
        match self {
            Labels::Class { classes, count } => {
                Labels::class(classes.clone(), (*count).max(min_count))
            }
            Labels::Binary(_) => Err(Error::InvalidLabels(
                "binary labels cannot be used as class labels".into(),
            )),
            Labels::Real(v) => {
                let mut classes = Vec::with_capacity(v.len());
                for (i, &y) in v.iter().enumerate() {
                    if y < 1.0 || y.fract() != 0.0 {
                        return Err(Error::InvalidLabels(format!(
                            "label at example {i} is {y}, expected a class in 1..=m"
                        )));
                    }
                    classes.push(y as usize - 1);
                }
                let count = classes.iter().map(|c| c + 1).max().unwrap_or(0);
                Labels::class(classes, count.max(min_count))
            }
        }
    }

    fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Binary(v) => Labels::Binary(idx.iter().map(|&i| v[i]).collect()),
            Labels::Real(v) => Labels::Real(idx.iter().map(|&i| v[i]).collect()),
            Labels::Class { classes, count } => Labels::Class {
                classes: idx.iter().map(|&i| classes[i]).collect(),
                count: *count,
            },
        }
    }
}

/// `n` examples of dimension `d`, stored so that each example is a
/// contiguous slice.
///
/// Memory is `n * d * 8` bytes; there is no sparse path.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    d: usize,
    n: usize,
    features: Vec<f64>,
    labels: Labels,
    norms_sq: Vec<f64>,
    radius: f64,
}

impl DataMatrix {
    /// Builds a matrix from `features` laid out column by column
    /// (`features[i * d + h]` is feature `h` of example `i`).
    pub fn new(d: usize, n: usize, features: Vec<f64>, labels: Labels) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidData(format!(
                "need d >= 1 and n >= 1, got d={d}, n={n}"
            )));
        }
        if features.len() != d * n {
            return Err(Error::DimensionMismatch {
                what: "feature buffer",
                expected: d * n,
                found: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                what: "label vector",
                expected: n,
                found: labels.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite feature value".into()));
        }
        let norms_sq: Vec<f64> = features.chunks_exact(d).map(linalg::norm_sq).collect();
        let radius = norms_sq.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
        Ok(DataMatrix {
            d,
            n,
            features,
            labels,
            norms_sq,
            radius,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>], labels: Labels) -> Result<Self> {
        let d = columns.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(d * columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    what: if i == 0 { "example" } else { "example length" },
                    expected: d,
                    found: c.len(),
                });
            }
            features.extend_from_slice(c);
        }
        DataMatrix::new(d, columns.len(), features, labels)
    }

    /// Feature count.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Example count.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    #[inline]
    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i]
    }

    /// `max_i ||x_i||`, computed at construction.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_labels(self, labels: Labels) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "label vector",
                expected: self.n,
                found: labels.len(),
            });
        }
        Ok(DataMatrix { labels, ..self })
    }

    /// Examples at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            if i >= self.n {
                return Err(Error::InvalidData(format!(
                    "example index {i} out of range for n={}",
                    self.n
                )));
            }
            features.extend_from_slice(self.column(i));
        }
        DataMatrix::new(self.d, idx.len(), features, self.labels.select(idx))
    }

    /// Pads every example with zeros up to `d` features.
    pub fn widen(&self, d: usize) -> Result<Self> {
        if d < self.d {
            return Err(Error::DimensionMismatch {
                what: "widened dimension",
                expected: self.d,
                found: d,
            });
        }
        let mut features = Vec::with_capacity(d * self.n);
        for c in self.columns() {
            features.extend_from_slice(c);
            features.resize(features.len() + d - self.d, 0.0);
        }
        DataMatrix::new(d, self.n, features, self.labels.clone())
    }
}
