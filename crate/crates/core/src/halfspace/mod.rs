//! Binary halfspaces `h_w(x) = sign(⟨w, (x, 1)⟩)` over `R^d`.

mod oracle;
mod train;

pub use oracle::{exact_best_error, ExactFit, MAX_ORACLE_POINTS_2D};
pub use train::{
    train_erm_approx, train_erm_approx_with, train_realizable, ErmConfig,
    DEFAULT_REALIZABLE_BUDGET,
};

use crate::error::{invalid, Result};

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Weight vector of length `d + 1`; the last coordinate is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    weights: Vec<f64>,
}

impl Halfspace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return invalid("a halfspace over R^d needs d + 1 >= 2 weights");
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return invalid("halfspace weights must be finite");
        }
        Ok(Halfspace { weights })
    }

    /// The constant classifier with value `value` (pure bias).
    pub fn constant(dim: usize, value: i8) -> Self {
        let mut weights = vec![0.0; dim + 1];
        weights[dim] = if value >= 0 { 1.0 } else { -1.0 };
        Halfspace { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨w, x̄⟩` without a dimension check.
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        self.weights[..d]
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.weights[d]
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        if x.len() != self.dim() {
            return invalid(format!(
                "point has dimension {}, halfspace expects {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(self.predict_unchecked(x))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> i8 {
        sign(self.score(x))
    }

    pub fn negated(&self) -> Halfspace {
        Halfspace {
            weights: self.weights.iter().map(|w| -w).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Halfspace {
        Halfspace {
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Points in `R^d` with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySample {
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<i8>,
}

impl BinarySample {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        if points.len() != labels.len() {
            return invalid("points and labels differ in length");
        }
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return invalid("points do not share a dimension");
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("points must have finite coordinates");
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return invalid("binary labels must be ±1");
        }
        Ok(BinarySample {
            dim,
            points,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], i8)> {
        self.points.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    pub fn with_flipped_labels(&self) -> BinarySample {
        BinarySample {
            labels: self.labels.iter().map(|y| -y).collect(),
            ..self.clone()
        }
    }

    /// Majority label, `+1` on ties.
    pub fn majority(&self) -> i8 {
        let pos = self.labels.iter().filter(|&&y| y > 0).count();
        if 2 * pos >= self.labels.len() {
            1
        } else {
            -1
        }
    }

    /// True when both labels occur.
    pub fn is_two_sided(&self) -> bool {
        self.labels.iter().any(|&y| y > 0) && self.labels.iter().any(|&y| y < 0)
    }

    pub(crate) fn mistakes(&self, h: &Halfspace) -> usize {
        self.iter().filter(|&(x, y)| h.predict_unchecked(x) != y).count()
    }
}

/// Fraction of points of `sample` misclassified by `h`.
pub fn empirical_error(h: &Halfspace, sample: &BinarySample) -> Result<f64> {
    if sample.is_empty() {
        return invalid("empirical error of an empty sample");
    }
    if sample.dim() != h.dim() {
        return invalid(format!(
            "sample has dimension {}, halfspace expects {}",
            sample.dim(),
            h.dim()
        ));
    }
    Ok(sample.mistakes(h) as f64 / sample.len() as f64)
}
