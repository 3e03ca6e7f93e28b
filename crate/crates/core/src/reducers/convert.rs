use super::{EcocModel, TreeModel, WeightMatrix};
use crate::codes::{ap_code, ap_pairs};
use crate::error::{invalid, Error, Result};
use crate::halfspace::Halfspace;

/// Settings for [`tree_to_msvm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConversionConfig {
    /// Allowed disagreement mass on the reference points.
    pub epsilon: f64,
    /// Relative slack between `max_v ‖w̃(v)‖` and `r`.
    pub margin: f64,
    pub max_iterations: usize,
}

impl TreeConversionConfig {
    pub fn new(epsilon: f64) -> Self {
        TreeConversionConfig {
            epsilon,
            margin: 1e-3,
            max_iterations: 50,
        }
    }
}

/// Output of the tree → linear predictor conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConversion {
    pub weights: WeightMatrix,
    pub gamma: f64,
    pub r: f64,
    pub a: f64,
    /// Fraction of reference points where the two predictors disagree.
    pub reference_disagreement: f64,
    /// Maximal number of node classifiers on a root-to-leaf path.
    pub depth: usize,
}

pub fn tree_to_msvm(tree: &TreeModel, reference: &[Vec<f64>], epsilon: f64) -> Result<TreeConversion> {
    tree_to_msvm_with(tree, reference, &TreeConversionConfig::new(epsilon))
}

/// Linear predictor that agrees with `tree` on all but an `ε` fraction of
/// `reference`.
///
/// Node weights are scaled to unit norm and shifted by `γ` in the bias,
/// `w̃(v) = w(v) + γ e_{d+1}`. With `r` bounding `‖x̄‖` and `‖w̃(v)‖` and
/// `a = 2r²/γ + 1`, row `i` is `Σ_j a^{-j} b_ij w̃(v_ij)` along the path to
/// the leaf of label `i`, with `b_ij = +1` for a right turn. Points with
/// `‖x̄‖ ≤ r` whose margin `|⟨w̃(v), x̄⟩|` is at least `γ` at every node on
/// their own root-to-leaf path are classified identically by both predictors.
pub fn tree_to_msvm_with(
    tree: &TreeModel,
    reference: &[Vec<f64>],
    cfg: &TreeConversionConfig,
) -> Result<TreeConversion> {
    let eps = cfg.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    if reference.is_empty() {
        return invalid("tree conversion needs reference points");
    }
    let d = tree.dim();
    if reference.iter().any(|x| x.len() != d) {
        return invalid(format!("reference points must have dimension {d}"));
    }
    let n = reference.len();
    let allowed = ((eps / 2.0) * n as f64).floor() as usize;

    let unit: Vec<Vec<f64>> = tree
        .classifiers()
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm > 0.0 {
                h.weights().iter().map(|w| w / norm).collect()
            } else {
                h.weights().to_vec()
            }
        })
        .collect();
    // raw[x] = ⟨u(v), x̄⟩ for the nodes v on the path of x
    let shape = tree.shape();
    let raw: Vec<Vec<f64>> = reference
        .iter()
        .map(|x| {
            let label = tree.predict_counted_unchecked(x).0;
            let slot = tree.slot_of_label(label).expect("predicted labels have leaves");
            shape
                .path_to_leaf(slot)
                .iter()
                .map(|&(id, _)| {
                    let u = &unit[id];
                    u[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + u[d]
                })
                .collect()
        })
        .collect();
    let min_margins = |gamma: f64| -> Vec<f64> {
        let mut m: Vec<f64> = raw
            .iter()
            .map(|s| s.iter().map(|v| (v + gamma).abs()).fold(f64::INFINITY, f64::min))
            .collect();
        m.sort_by(f64::total_cmp);
        m
    };

    let mut gamma = min_margins(0.0)[allowed] / 2.0;
    let mut settled = false;
    for _ in 0..cfg.max_iterations {
        if !(gamma > 0.0 && gamma.is_finite()) {
            break;
        }
        let m = min_margins(gamma);
        let bad = m.partition_point(|&v| v < gamma);
        if bad <= allowed {
            settled = true;
            break;
        }
        gamma = m[allowed] / 2.0;
    }
    if !settled {
        return Err(Error::ToleranceUnachievable(format!(
            "more than an ε/2 = {} fraction of reference points lie on node boundaries",
            eps / 2.0
        )));
    }

    let shifted: Vec<Vec<f64>> = unit
        .iter()
        .map(|u| {
            let mut w = u.clone();
            w[d] += gamma;
            w
        })
        .collect();
    let mut norms: Vec<f64> = reference
        .iter()
        .map(|x| (x.iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt())
        .collect();
    norms.sort_by(f64::total_cmp);
    let max_w = shifted
        .iter()
        .map(|w| w.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let r = norms[n - 1 - allowed].max(max_w * (1.0 + cfg.margin));
    let a = 2.0 * r * r / gamma + 1.0;

    let depth = shape.max_depth();
    let smallest = a.powi(-(depth as i32));
    if !a.is_finite() || !(smallest.is_normal()) {
        return Err(Error::ToleranceUnachievable(format!(
            "tree depth {depth} exceeds double precision for a = {a:e}"
        )));
    }

    let k = tree.num_classes();
    let mut rows = vec![vec![0.0; d + 1]; k];
    for (slot, &label) in tree.leaf_labels().iter().enumerate() {
        for (step, &(id, right)) in shape.path_to_leaf(slot).iter().enumerate() {
            let coef = a.powi(-(step as i32 + 1)) * if right { 1.0 } else { -1.0 };
            for (w, v) in rows[label].iter_mut().zip(&shifted[id]) {
                *w += coef * v;
            }
        }
    }
    let weights = WeightMatrix::new(rows)?;

    let disagree = crate::par::map_indexed(n, |i| {
        let x = &reference[i];
        weights.predict_unchecked(x) != tree.predict_counted_unchecked(x).0
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    let reference_disagreement = disagree as f64 / n as f64;
    if reference_disagreement > eps {
        return Err(Error::ToleranceUnachievable(format!(
            "rounding leaves {reference_disagreement} disagreement on the reference points"
        )));
    }
    Ok(TreeConversion {
        weights,
        gamma,
        r,
        a,
        reference_disagreement,
        depth,
    })
}

/// All-pairs model whose column `(i, j)` is `sign(⟨W[j] - W[i], x̄⟩)`.
pub fn msvm_to_ap(w: &WeightMatrix) -> Result<EcocModel> {
    let k = w.num_classes();
    let classifiers = ap_pairs(k)
        .into_iter()
        .map(|(i, j)| Halfspace::new(w.row(j).iter().zip(w.row(i)).map(|(a, b)| a - b).collect()))
        .collect::<Result<Vec<_>>>()?;
    EcocModel::new(ap_code(k)?, classifiers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducers::TreeShape;
    use rand::Rng as _;

    fn h(w: &[f64]) -> Halfspace {
        Halfspace::new(w.to_vec()).unwrap()
    }

    #[test]
    fn single_node_tree() {
        let t = TreeModel::new(TreeShape::balanced(2).unwrap(), vec![0, 1], vec![h(&[3.0, -1.0])])
            .unwrap();
        let reference: Vec<Vec<f64>> = (0..200).map(|i| vec![-2.0 + 0.02 * i as f64 + 0.001]).collect();
        let conv = tree_to_msvm(&t, &reference, 0.05).unwrap();
        let norm = 10f64.sqrt();
        for x in &reference {
            if ((3.0 * x[0] - 1.0) / norm).abs() >= 2.0 * conv.gamma {
                assert_eq!(conv.weights.predict(x).unwrap(), t.predict(x).unwrap());
            }
        }
        assert!(conv.reference_disagreement <= 0.05);
    }

    #[test]
    fn finite_support_agrees_exactly() {
        let mut rng = crate::rng(9);
        for seed in 0..20u64 {
            let shape = TreeShape::random(6, seed).unwrap();
            let nodes = (0..5)
                .map(|_| h(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)]))
                .collect();
            let t = TreeModel::new(shape, vec![3, 1, 0, 5, 2, 4], nodes).unwrap();
            let support: Vec<Vec<f64>> = (0..30)
                .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            let conv = tree_to_msvm(&t, &support, 0.01).unwrap();
            for x in &support {
                assert_eq!(conv.weights.predict(x).unwrap(), t.predict(x).unwrap());
            }
        }
    }

    #[test]
    fn off_path_boundaries_are_ignored() {
        // the second node's line passes through (0, -1), which never reaches it
        let shape = TreeShape::chain(3).unwrap();
        let nodes = vec![h(&[0.0, 1.0, 0.5]), h(&[1.0, 0.0, 0.0])];
        let t = TreeModel::new(shape, vec![0, 1, 2], nodes).unwrap();
        let reference: Vec<Vec<f64>> = [[0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]]
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.to_vec(), 50))
            .collect();
        let conv = tree_to_msvm(&t, &reference, 0.01).unwrap();
        assert!(conv.gamma > 0.1);
        assert_eq!(conv.reference_disagreement, 0.0);
    }

    #[test]
    fn boundary_mass_is_rejected() {
        let t = TreeModel::new(TreeShape::balanced(2).unwrap(), vec![0, 1], vec![h(&[1.0, 0.0])])
            .unwrap();
        let reference = vec![vec![0.0]; 10];
        assert!(matches!(
            tree_to_msvm(&t, &reference, 0.1),
            Err(Error::ToleranceUnachievable(_))
        ));
        assert!(tree_to_msvm(&t, &[], 0.1).is_err());
        assert!(tree_to_msvm(&t, &[vec![1.0]], 0.0).is_err());
    }

    #[test]
    fn ap_agrees_with_rows() {
        let mut rng = crate::rng(2);
        for _ in 0..20 {
            let rows = (0..5)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let w = WeightMatrix::new(rows).unwrap();
            let ap = msvm_to_ap(&w).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert_eq!(ap.predict(&x).unwrap(), w.predict(&x).unwrap());
            }
        }
    }

    #[test]
    fn ap_two_classes() {
        let w = WeightMatrix::new(vec![vec![1.0, 0.0], vec![-1.0, 0.5]]).unwrap();
        let ap = msvm_to_ap(&w).unwrap();
        assert_eq!(ap.classifiers()[0].weights(), &[-2.0, 0.5]);
        assert_eq!(ap.predict(&[0.0]).unwrap(), 1);
        assert_eq!(ap.predict(&[1.0]).unwrap(), 0);
    }
}
