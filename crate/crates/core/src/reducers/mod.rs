//! The multiclass predictors built from halfspaces, their trainers, and the
//! conversions tree → linear predictor → all-pairs.

mod convert;
mod train;
mod tree;

pub use convert::{msvm_to_ap, tree_to_msvm, tree_to_msvm_with, TreeConversion, TreeConversionConfig};
pub use train::{
    train_ap, train_binary, train_ecoc, train_msvm, train_ova, train_tree, BinaryLearner,
    LearnerConfig, MsvmMode,
};
pub use tree::{Nested, Node, TreeShape};

use crate::codes::CodeMatrix;
use crate::error::{invalid, Result};
use crate::halfspace::Halfspace;
use crate::Label;

/// `k × (d+1)` matrix; predicts `argmax_i (W x̄)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return invalid(format!("a weight matrix needs k >= 2 rows, got {}", rows.len()));
        }
        let width = rows[0].len();
        if width < 2 {
            return invalid("weight rows need length d + 1 >= 2");
        }
        if rows.iter().any(|r| r.len() != width) {
            return invalid("weight rows have different lengths");
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("weights must be finite");
        }
        Ok(WeightMatrix { rows })
    }

    pub fn zeros(k: usize, dim: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; dim + 1]; k])
    }

    pub fn num_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    #[inline]
    pub fn score(&self, i: usize, x: &[f64]) -> f64 {
        let w = &self.rows[i];
        let d = w.len() - 1;
        w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        check_dim(x, self.dim())?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Label {
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..self.rows.len() {
            let s = self.score(i, x);
            if s > best.1 {
                best = (i, s);
            }
        }
        best.0
    }
}

/// `msvm_predict(W, x)`: smallest index attaining `max_i (W x̄)_i`.
pub fn msvm_predict(w: &WeightMatrix, x: &[f64]) -> Result<Label> {
    w.predict(x)
}

/// Tree of halfspaces: `+1` at a node moves right, `-1` moves left.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    shape: TreeShape,
    leaf_labels: Vec<Label>,
    classifiers: Vec<Halfspace>,
}

impl TreeModel {
    /// `leaf_labels[slot]` is the label of leaf `slot`; `classifiers[id]`
    /// sits at internal node `id`.
    pub fn new(shape: TreeShape, leaf_labels: Vec<Label>, classifiers: Vec<Halfspace>) -> Result<Self> {
        let k = shape.num_leaves();
        check_bijection(&leaf_labels, k)?;
        if classifiers.len() != shape.num_internal() {
            return invalid(format!(
                "tree has {} internal nodes but {} classifiers",
                shape.num_internal(),
                classifiers.len()
            ));
        }
        let d = classifiers[0].dim();
        if classifiers.iter().any(|h| h.dim() != d) {
            return invalid("node classifiers differ in dimension");
        }
        Ok(TreeModel {
            shape,
            leaf_labels,
            classifiers,
        })
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn leaf_labels(&self) -> &[Label] {
        &self.leaf_labels
    }

    pub fn classifiers(&self) -> &[Halfspace] {
        &self.classifiers
    }

    pub fn num_classes(&self) -> usize {
        self.leaf_labels.len()
    }

    pub fn dim(&self) -> usize {
        self.classifiers[0].dim()
    }

    /// Leaf slot holding `label`.
    pub fn slot_of_label(&self, label: Label) -> Option<usize> {
        self.leaf_labels.iter().position(|&y| y == label)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(self.predict_counted(x)?.0)
    }

    /// Prediction together with the number of classifiers evaluated.
    pub fn predict_counted(&self, x: &[f64]) -> Result<(Label, usize)> {
        check_dim(x, self.dim())?;
        Ok(self.predict_counted_unchecked(x))
    }

    pub(crate) fn predict_counted_unchecked(&self, x: &[f64]) -> (Label, usize) {
        let mut idx = self.shape.root();
        let mut evals = 0;
        loop {
            match self.shape.node(idx) {
                Node::Leaf { slot } => return (self.leaf_labels[slot], evals),
                Node::Internal { id, left, right } => {
                    evals += 1;
                    idx = if self.classifiers[id].predict_unchecked(x) > 0 {
                        right
                    } else {
                        left
                    };
                }
            }
        }
    }
}

pub fn tree_predict(t: &TreeModel, x: &[f64]) -> Result<Label> {
    t.predict(x)
}

/// Code matrix with one halfspace per column.
#[derive(Debug, Clone, PartialEq)]
pub struct EcocModel {
    code: CodeMatrix,
    classifiers: Vec<Halfspace>,
}

impl EcocModel {
    pub fn new(code: CodeMatrix, classifiers: Vec<Halfspace>) -> Result<Self> {
        if classifiers.len() != code.code_length() {
            return invalid(format!(
                "code has {} columns but {} classifiers",
                code.code_length(),
                classifiers.len()
            ));
        }
        let d = classifiers[0].dim();
        if classifiers.iter().any(|h| h.dim() != d) {
            return invalid("column classifiers differ in dimension");
        }
        Ok(EcocModel { code, classifiers })
    }

    pub fn code(&self) -> &CodeMatrix {
        &self.code
    }

    pub fn classifiers(&self) -> &[Halfspace] {
        &self.classifiers
    }

    pub fn num_classes(&self) -> usize {
        self.code.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.classifiers[0].dim()
    }

    /// `(h_1(x), ..., h_l(x))`.
    pub fn column_outputs(&self, x: &[f64]) -> Result<Vec<i8>> {
        check_dim(x, self.dim())?;
        Ok(self.outputs_unchecked(x))
    }

    fn outputs_unchecked(&self, x: &[f64]) -> Vec<i8> {
        self.classifiers.iter().map(|h| h.predict_unchecked(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        check_dim(x, self.dim())?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Label {
        self.code.decode_unchecked(&self.outputs_unchecked(x))
    }
}

pub fn ecoc_predict(e: &EcocModel, x: &[f64]) -> Result<Label> {
    e.predict(x)
}

/// Labelled points `(x, y)` with `y ∈ 0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassSample {
    num_classes: usize,
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl MulticlassSample {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return invalid(format!("need k >= 2 classes, got {num_classes}"));
        }
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
        if let Some(y) = labels.iter().find(|&&y| y >= num_classes) {
            return invalid(format!("label {y} outside 0..{num_classes}"));
        }
        Ok(MulticlassSample {
            num_classes,
            dim,
            points,
            labels,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> {
        self.points.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }
}

/// Any of the trained multiclass predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Msvm(WeightMatrix),
    Tree(TreeModel),
    Ecoc(EcocModel),
}

impl Model {
    pub fn num_classes(&self) -> usize {
        match self {
            Model::Msvm(w) => w.num_classes(),
            Model::Tree(t) => t.num_classes(),
            Model::Ecoc(e) => e.num_classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Msvm(w) => w.dim(),
            Model::Tree(t) => t.dim(),
            Model::Ecoc(e) => e.dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        check_dim(x, self.dim())?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Label {
        match self {
            Model::Msvm(w) => w.predict_unchecked(x),
            Model::Tree(t) => t.predict_counted_unchecked(x).0,
            Model::Ecoc(e) => e.predict_unchecked(x),
        }
    }
}

impl From<WeightMatrix> for Model {
    fn from(w: WeightMatrix) -> Self {
        Model::Msvm(w)
    }
}

impl From<TreeModel> for Model {
    fn from(t: TreeModel) -> Self {
        Model::Tree(t)
    }
}

impl From<EcocModel> for Model {
    fn from(e: EcocModel) -> Self {
        Model::Ecoc(e)
    }
}

/// Fraction of `sample` on which `model` predicts a wrong label.
pub fn multiclass_error(model: &Model, sample: &MulticlassSample) -> Result<f64> {
    if sample.is_empty() {
        return invalid("multiclass error of an empty sample");
    }
    check_dim(&sample.points()[0], model.dim())?;
    let wrong = crate::par::map_indexed(sample.len(), |i| {
        model.predict_unchecked(&sample.points()[i]) != sample.labels()[i]
    })
    .into_iter()
    .filter(|&w| w)
    .count();
    Ok(wrong as f64 / sample.len() as f64)
}

fn check_dim(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return invalid(format!("point has dimension {}, model expects {d}", x.len()));
    }
    Ok(())
}

pub(crate) fn check_bijection(map: &[Label], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if map.len() != k {
        return invalid(format!("label map has {} entries, expected {k}", map.len()));
    }
    for &y in map {
        if y >= k || seen[y] {
            return invalid("label map is not a bijection onto 0..k");
        }
        seen[y] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::ova_code;

    fn h(w: &[f64]) -> Halfspace {
        Halfspace::new(w.to_vec()).unwrap()
    }

    #[test]
    fn msvm_ties_and_two_rows() {
        let zero = WeightMatrix::zeros(4, 2).unwrap();
        assert_eq!(msvm_predict(&zero, &[1.0, -3.0]).unwrap(), 0);
        let w = WeightMatrix::new(vec![vec![1.0, 0.5], vec![-1.0, 0.0]]).unwrap();
        for x in [-2.0, -0.25, 0.0, 0.7] {
            let diff = 2.0 * x + 0.5;
            assert_eq!(w.predict(&[x]).unwrap() == 0, diff >= 0.0);
        }
        assert!(w.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn msvm_sector_rows() {
        let angles = [0.0f64, 2.0, 4.0].map(|a| a * std::f64::consts::PI / 3.0);
        let w = WeightMatrix::new(angles.iter().map(|a| vec![a.cos(), a.sin(), 0.0]).collect())
            .unwrap();
        for (i, a) in angles.iter().enumerate() {
            for off in [-0.9, 0.0, 0.9] {
                let t = a + off;
                assert_eq!(w.predict(&[2.0 * t.cos(), 2.0 * t.sin()]).unwrap(), i);
            }
        }
    }

    #[test]
    fn tree_traversal() {
        let shape = TreeShape::balanced(2).unwrap();
        let t = TreeModel::new(shape, vec![1, 0], vec![h(&[1.0, 0.0])]).unwrap();
        assert_eq!(t.predict(&[0.5]).unwrap(), 0);
        assert_eq!(t.predict(&[-0.5]).unwrap(), 1);

        let shape = TreeShape::random(7, 2).unwrap();
        let labels: Vec<usize> = (0..7).rev().collect();
        let t = TreeModel::new(shape, labels, vec![Halfspace::constant(3, 1); 6]).unwrap();
        let (y, evals) = t.predict_counted(&[0.0, 4.0, -1.0]).unwrap();
        assert_eq!(y, 0);
        assert_eq!(evals, t.shape().depth_of_leaf(6));
        assert!(TreeModel::new(TreeShape::chain(3).unwrap(), vec![0, 0, 1], vec![Halfspace::constant(1, 1); 2]).is_err());
    }

    #[test]
    fn ecoc_constant_columns_tie() {
        let e = EcocModel::new(ova_code(5).unwrap(), vec![Halfspace::constant(2, 1); 5]).unwrap();
        assert_eq!(e.predict(&[3.0, 3.0]).unwrap(), 0);
        let single = CodeMatrix::from_rows(vec![vec![1.0], vec![-1.0]]).unwrap();
        let e = EcocModel::new(single, vec![h(&[1.0, 0.0])]).unwrap();
        assert_eq!(e.predict(&[1.0]).unwrap(), 0);
        assert_eq!(e.predict(&[-1.0]).unwrap(), 1);
    }

    #[test]
    fn errors_of_simple_models() {
        let s = MulticlassSample::new(
            (0..12).map(|i| vec![i as f64]).collect(),
            (0..12).map(|i| i % 3).collect(),
            3,
        )
        .unwrap();
        let constant = Model::Msvm(WeightMatrix::zeros(3, 1).unwrap());
        assert!((multiclass_error(&constant, &s).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let empty = MulticlassSample::new(vec![], vec![], 3).unwrap();
        assert!(multiclass_error(&constant, &empty).is_err());
        assert!(MulticlassSample::new(vec![vec![0.0]], vec![3], 3).is_err());
    }

    #[test]
    fn xor_tree_error_by_hand() {
        // root splits on x, both children on y
        let shape = TreeShape::balanced(4).unwrap();
        let t = TreeModel::new(
            shape,
            vec![0, 1, 2, 3],
            vec![h(&[1.0, 0.0, 0.0]), h(&[0.0, 1.0, 0.0]), h(&[0.0, -1.0, 0.0])],
        )
        .unwrap();
        let pts = vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
        // predictions: (-1,-1)->0, (-1,1)->1, (1,-1)->3, (1,1)->2
        let s = MulticlassSample::new(pts, vec![0, 1, 2, 3], 4).unwrap();
        assert_eq!(multiclass_error(&Model::Tree(t), &s).unwrap(), 0.5);
    }
}
