use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{EcocModel, MulticlassSample, TreeModel, TreeShape, WeightMatrix};
use crate::codes::{ap_code, ova_code, CodeMatrix};
use crate::error::{invalid, Error, Result};
use crate::halfspace::{
    exact_best_error, train_erm_approx_with, train_realizable, BinarySample, ErmConfig, Halfspace,
    DEFAULT_REALIZABLE_BUDGET,
};
use crate::Label;

/// How each binary subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinaryLearner {
    /// Exact oracle for `d ≤ 2`; otherwise the perceptron, falling back to
    /// the approximate search when it runs out of budget.
    #[default]
    Auto,
    Perceptron,
    Approximate,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub learner: BinaryLearner,
    pub realizable_budget: usize,
    pub erm: ErmConfig,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            learner: BinaryLearner::Auto,
            realizable_budget: DEFAULT_REALIZABLE_BUDGET,
            erm: ErmConfig::default(),
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn with_seed(seed: u64) -> Self {
        LearnerConfig {
            seed,
            ..Self::default()
        }
    }
}

/// Trains one halfspace; one-sided or empty samples get the majority constant.
pub fn train_binary(sample: &BinarySample, dim: usize, cfg: &LearnerConfig, seed: u64) -> Result<Halfspace> {
    if sample.is_empty() {
        return Ok(Halfspace::constant(dim, 1));
    }
    if !sample.is_two_sided() {
        return Ok(Halfspace::constant(dim, sample.majority()));
    }
    match cfg.learner {
        BinaryLearner::Perceptron => train_realizable(sample, cfg.realizable_budget),
        BinaryLearner::Approximate => train_erm_approx_with(sample, &cfg.erm, seed),
        BinaryLearner::Exact => Ok(exact_best_error(sample)?.halfspace),
        BinaryLearner::Auto => {
            if dim <= 2 {
                match exact_best_error(sample) {
                    Ok(fit) => return Ok(fit.halfspace),
                    Err(Error::BudgetExceeded(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            match train_realizable(sample, cfg.realizable_budget) {
                Ok(h) => Ok(h),
                Err(Error::NotRealizable { .. }) => train_erm_approx_with(sample, &cfg.erm, seed),
                Err(e) => Err(e),
            }
        }
    }
}

fn check_sample(sample: &MulticlassSample, k: usize) -> Result<()> {
    if sample.is_empty() {
        return invalid("cannot train on an empty sample");
    }
    if sample.num_classes() != k {
        return invalid(format!(
            "sample has {} classes, model expects {k}",
            sample.num_classes()
        ));
    }
    Ok(())
}

/// One halfspace per column of `code`, trained on the points whose code
/// entry is nonzero, labelled by the sign of that entry.
pub fn train_ecoc(code: &CodeMatrix, sample: &MulticlassSample, cfg: &LearnerConfig) -> Result<EcocModel> {
    check_sample(sample, code.num_classes())?;
    let rows: Vec<usize> = (0..code.num_classes())
        .map(|y| code.row_of_label(y).expect("label map is a bijection"))
        .collect();
    let classifiers = crate::par::map_indexed(code.code_length(), |j| {
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        for (x, y) in sample.iter() {
            let m = code.entry(rows[y], j);
            if m != 0.0 {
                pts.push(x.to_vec());
                ys.push(if m > 0.0 { 1 } else { -1 });
            }
        }
        let bin = BinarySample::new(pts, ys)?;
        train_binary(&bin, sample.dim(), cfg, cfg.seed.wrapping_add(j as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    EcocModel::new(code.clone(), classifiers)
}

pub fn train_ova(sample: &MulticlassSample, cfg: &LearnerConfig) -> Result<EcocModel> {
    train_ecoc(&ova_code(sample.num_classes())?, sample, cfg)
}

pub fn train_ap(sample: &MulticlassSample, cfg: &LearnerConfig) -> Result<EcocModel> {
    train_ecoc(&ap_code(sample.num_classes())?, sample, cfg)
}

/// Node `v` sees the points whose label's leaf lies below `v`, labelled
/// `-1` for the left subtree and `+1` for the right one.
pub fn train_tree(
    shape: &TreeShape,
    leaf_labels: &[Label],
    sample: &MulticlassSample,
    cfg: &LearnerConfig,
) -> Result<TreeModel> {
    check_sample(sample, shape.num_leaves())?;
    super::check_bijection(leaf_labels, shape.num_leaves())?;
    let mut slot_of = vec![0; leaf_labels.len()];
    for (slot, &y) in leaf_labels.iter().enumerate() {
        slot_of[y] = slot;
    }
    let paths: Vec<Vec<(usize, bool)>> = slot_of.iter().map(|&s| shape.path_to_leaf(s)).collect();
    let mut node_pts: Vec<Vec<(usize, i8)>> = vec![Vec::new(); shape.num_internal()];
    for (i, &y) in sample.labels().iter().enumerate() {
        for &(id, right) in &paths[y] {
            node_pts[id].push((i, if right { 1 } else { -1 }));
        }
    }
    let classifiers = crate::par::map_indexed(shape.num_internal(), |id| {
        let (pts, ys) = node_pts[id]
            .iter()
            .map(|&(i, y)| (sample.points()[i].clone(), y))
            .unzip();
        let bin = BinarySample::new(pts, ys)?;
        train_binary(&bin, sample.dim(), cfg, cfg.seed.wrapping_add(id as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    TreeModel::new(shape.clone(), leaf_labels.to_vec(), classifiers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsvmMode {
    /// Multiclass perceptron until consistent.
    Realizable,
    /// Subgradient search on the multiclass hinge loss.
    Approximate,
}

pub fn train_msvm(sample: &MulticlassSample, mode: MsvmMode, cfg: &LearnerConfig) -> Result<WeightMatrix> {
    check_sample(sample, sample.num_classes())?;
    match mode {
        MsvmMode::Realizable => multiclass_perceptron(sample, cfg.realizable_budget),
        MsvmMode::Approximate => multiclass_hinge(sample, &cfg.erm, cfg.seed),
    }
}

fn augmented(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.push(1.0);
    v
}

fn argmax_row(w: &[Vec<f64>], xb: &[f64]) -> (usize, Vec<f64>) {
    let scores: Vec<f64> = w
        .iter()
        .map(|r| r.iter().zip(xb).map(|(a, b)| a * b).sum())
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    (best, scores)
}

fn multiclass_perceptron(sample: &MulticlassSample, budget: usize) -> Result<WeightMatrix> {
    let k = sample.num_classes();
    let xs: Vec<Vec<f64>> = sample.points().iter().map(|x| augmented(x)).collect();
    let mut w = vec![vec![0.0; sample.dim() + 1]; k];
    let mut updates = 0usize;
    loop {
        let mut clean = true;
        for (xb, &y) in xs.iter().zip(sample.labels()) {
            let (yhat, _) = argmax_row(&w, xb);
            if yhat != y {
                if updates == budget {
                    return Err(Error::NotRealizable { budget });
                }
                for (j, v) in xb.iter().enumerate() {
                    w[y][j] += v;
                    w[yhat][j] -= v;
                }
                updates += 1;
                clean = false;
            }
        }
        if clean {
            return WeightMatrix::new(w);
        }
    }
}

fn zero_one(w: &[Vec<f64>], xs: &[Vec<f64>], ys: &[Label]) -> usize {
    xs.iter().zip(ys).filter(|(xb, &y)| argmax_row(w, xb).0 != y).count()
}

fn multiclass_hinge(sample: &MulticlassSample, cfg: &ErmConfig, seed: u64) -> Result<WeightMatrix> {
    let k = sample.num_classes();
    let width = sample.dim() + 1;
    let n = sample.len() as f64;
    let xs: Vec<Vec<f64>> = sample.points().iter().map(|x| augmented(x)).collect();
    let ys = sample.labels();

    let mut counts = vec![0usize; k];
    for &y in ys {
        counts[y] += 1;
    }
    let majority = (0..k).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
    let mut best = vec![vec![0.0; width]; k];
    best[majority][width - 1] = 1.0;
    let mut best_err = zero_one(&best, &xs, ys);

    let mut rng = crate::rng(seed);
    let mut grad = vec![vec![0.0; width]; k];
    'restarts: for _ in 0..cfg.restarts {
        if best_err == 0 {
            break;
        }
        let mut w: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..width).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        for t in 1..=cfg.iterations {
            let err = zero_one(&w, &xs, ys);
            if err < best_err {
                best_err = err;
                best = w.clone();
                if err == 0 {
                    break 'restarts;
                }
            }
            for (g, r) in grad.iter_mut().zip(&w) {
                for (gj, wj) in g.iter_mut().zip(r) {
                    *gj = cfg.regularization * wj;
                }
            }
            for (xb, &y) in xs.iter().zip(ys) {
                let (_, scores) = argmax_row(&w, xb);
                let mut rival = usize::MAX;
                for i in 0..k {
                    if i != y && (rival == usize::MAX || scores[i] > scores[rival]) {
                        rival = i;
                    }
                }
                if 1.0 + scores[rival] - scores[y] > 0.0 {
                    for (j, v) in xb.iter().enumerate() {
                        grad[rival][j] += v / n;
                        grad[y][j] -= v / n;
                    }
                }
            }
            let norm = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let eta = cfg.step / (t as f64).sqrt() / norm;
            for (r, g) in w.iter_mut().zip(&grad) {
                for (wj, gj) in r.iter_mut().zip(g) {
                    *wj -= eta * gj;
                }
            }
        }
    }
    WeightMatrix::new(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducers::{multiclass_error, Model};

    fn blobs(centers: &[[f64; 2]], per: usize) -> MulticlassSample {
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for i in 0..per {
                let t = i as f64 * 2.399;
                pts.push(vec![center[0] + 0.05 * t.cos(), center[1] + 0.05 * t.sin()]);
                ys.push(c);
            }
        }
        MulticlassSample::new(pts, ys, centers.len()).unwrap()
    }

    fn circle(k: usize) -> Vec<[f64; 2]> {
        (0..k)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                [a.cos(), a.sin()]
            })
            .collect()
    }

    #[test]
    fn ecoc_with_ova_code_is_ova() {
        let s = blobs(&circle(5), 6);
        let cfg = LearnerConfig::with_seed(4);
        let a = train_ova(&s, &cfg).unwrap();
        let b = train_ecoc(&ova_code(5).unwrap(), &s, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ova_on_circle_is_perfect() {
        let s = blobs(&circle(9), 5);
        let m = train_ova(&s, &LearnerConfig::default()).unwrap();
        assert_eq!(multiclass_error(&Model::Ecoc(m), &s).unwrap(), 0.0);
    }

    #[test]
    fn ova_fails_with_a_center_class() {
        let mut centers = circle(8);
        centers.push([0.0, 0.0]);
        let s = blobs(&centers, 4);
        let m = train_ova(&s, &LearnerConfig::default()).unwrap();
        assert!(multiclass_error(&Model::Ecoc(m), &s).unwrap() > 0.0);
        // the center-vs-rest problem has no perfect halfspace
        let ys = s.labels().iter().map(|&y| if y == 8 { 1 } else { -1 }).collect();
        let bin = BinarySample::new(s.points().to_vec(), ys).unwrap();
        assert!(exact_best_error(&bin).unwrap().error > 0.0);
    }

    #[test]
    fn ap_columns_see_two_classes() {
        let s = blobs(&circle(4), 3);
        let m = train_ap(&s, &LearnerConfig::default()).unwrap();
        assert_eq!(m.classifiers().len(), 6);
        assert_eq!(multiclass_error(&Model::Ecoc(m), &s).unwrap(), 0.0);
    }

    #[test]
    fn tree_k2_is_one_binary_problem() {
        let s = blobs(&[[-1.0, 0.0], [1.0, 0.5]], 5);
        let shape = TreeShape::balanced(2).unwrap();
        let t = train_tree(&shape, &[0, 1], &s, &LearnerConfig::default()).unwrap();
        let ys = s.labels().iter().map(|&y| if y == 1 { 1 } else { -1 }).collect();
        let bin = BinarySample::new(s.points().to_vec(), ys).unwrap();
        let h = train_binary(&bin, 2, &LearnerConfig::default(), 0).unwrap();
        assert_eq!(t.classifiers()[0], h);
    }

    #[test]
    fn tree_degenerate_nodes_get_constants() {
        // class 3 absent: its parent node sees one side only
        let s = MulticlassSample::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            vec![0, 1, 2],
            4,
        )
        .unwrap();
        let shape = TreeShape::balanced(4).unwrap();
        let t = train_tree(&shape, &[0, 1, 2, 3], &s, &LearnerConfig::default()).unwrap();
        assert_eq!(t.classifiers()[2], Halfspace::constant(2, -1));
    }

    #[test]
    fn msvm_realizable_and_random_points() {
        let s = blobs(&circle(3), 10);
        let w = train_msvm(&s, MsvmMode::Realizable, &LearnerConfig::default()).unwrap();
        assert_eq!(multiclass_error(&Model::Msvm(w), &s).unwrap(), 0.0);

        let pts: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 2.3).cos()])
            .collect();
        let s = MulticlassSample::new(pts, (0..10).collect(), 10).unwrap();
        let w = train_msvm(&s, MsvmMode::Realizable, &LearnerConfig::default()).unwrap();
        assert_eq!(multiclass_error(&Model::Msvm(w), &s).unwrap(), 0.0);
    }

    #[test]
    fn msvm_approximate_beats_constant() {
        let s = blobs(&circle(4), 8);
        let cfg = LearnerConfig::with_seed(1);
        let w = train_msvm(&s, MsvmMode::Approximate, &cfg).unwrap();
        assert!(multiclass_error(&Model::Msvm(w.clone()), &s).unwrap() < 0.75);
        assert_eq!(w, train_msvm(&s, MsvmMode::Approximate, &cfg).unwrap());
    }

    #[test]
    fn msvm_realizable_budget() {
        // one point carrying two labels
        let s = MulticlassSample::new(
            vec![vec![0.0], vec![0.0]],
            vec![0, 1],
            2,
        )
        .unwrap();
        let cfg = LearnerConfig {
            realizable_budget: 50,
            ..LearnerConfig::default()
        };
        assert!(matches!(
            train_msvm(&s, MsvmMode::Realizable, &cfg),
            Err(Error::NotRealizable { budget: 50 })
        ));
    }
}
