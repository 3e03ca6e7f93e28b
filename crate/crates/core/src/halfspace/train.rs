use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{BinarySample, Halfspace};
use crate::error::{invalid, Error, Result};

/// Default update cap for the perceptron.
pub const DEFAULT_REALIZABLE_BUDGET: usize = 1_000_000;

/// Perceptron run until a full pass makes no mistake.
///
/// Fails with [`Error::NotRealizable`] once `budget` updates have been
/// spent, which does not prove that no consistent halfspace exists.
pub fn train_realizable(sample: &BinarySample, budget: usize) -> Result<Halfspace> {
    if sample.is_empty() {
        return invalid("cannot train on an empty sample");
    }
    let d = sample.dim();
    let mut w = vec![0.0; d + 1];
    let mut updates = 0usize;
    loop {
        let mut clean = true;
        for (x, y) in sample.iter() {
            let score: f64 = w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d];
            if super::sign(score) != y {
                if updates == budget {
                    return Err(Error::NotRealizable { budget });
                }
                let yf = y as f64;
                for (wi, xi) in w[..d].iter_mut().zip(x) {
                    *wi += yf * xi;
                }
                w[d] += yf;
                updates += 1;
                clean = false;
            }
        }
        if clean {
            return Halfspace::new(w);
        }
    }
}

/// Settings of the hinge-surrogate subgradient search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmConfig {
    pub restarts: usize,
    pub iterations: usize,
    /// Initial step length; step `t` has length `step / sqrt(t)`.
    pub step: f64,
    pub regularization: f64,
}

impl Default for ErmConfig {
    fn default() -> Self {
        ErmConfig {
            restarts: 8,
            iterations: 300,
            step: 1.0,
            regularization: 1e-3,
        }
    }
}

/// Best-of-restarts subgradient descent on the averaged hinge loss.
///
/// Every iterate is scored by its 0-1 training error and the best one wins,
/// so the returned halfspace is never worse than the majority constant.
pub fn train_erm_approx(sample: &BinarySample, restarts: usize, seed: u64) -> Result<Halfspace> {
    train_erm_approx_with(
        sample,
        &ErmConfig {
            restarts,
            ..ErmConfig::default()
        },
        seed,
    )
}

pub fn train_erm_approx_with(
    sample: &BinarySample,
    cfg: &ErmConfig,
    seed: u64,
) -> Result<Halfspace> {
    if sample.is_empty() {
        return invalid("cannot train on an empty sample");
    }
    let d = sample.dim();
    let n = sample.len() as f64;
    let mut best = Halfspace::constant(d, sample.majority());
    let mut best_err = sample.mistakes(&best);
    if best_err == 0 {
        return Ok(best);
    }
    let mut rng = crate::rng(seed);
    let mut grad = vec![0.0; d + 1];

    for _ in 0..cfg.restarts {
        let mut w: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        for t in 1..=cfg.iterations {
            let h = Halfspace { weights: w.clone() };
            let err = sample.mistakes(&h);
            if err < best_err {
                best_err = err;
                best = h;
                if err == 0 {
                    return Ok(best);
                }
            }
            for (g, wi) in grad.iter_mut().zip(&w) {
                *g = cfg.regularization * wi;
            }
            for (x, y) in sample.iter() {
                let yf = y as f64;
                let margin = yf * (w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]);
                if margin < 1.0 {
                    for (g, xi) in grad[..d].iter_mut().zip(x) {
                        *g -= yf * xi / n;
                    }
                    grad[d] -= yf / n;
                }
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let eta = cfg.step / (t as f64).sqrt() / norm;
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= eta * g;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfspace::empirical_error;

    fn xor() -> BinarySample {
        BinarySample::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1, 1, -1, -1],
        )
        .unwrap()
    }

    #[test]
    fn perceptron_separable() {
        let s = BinarySample::new(vec![vec![-1.0], vec![1.0]], vec![-1, 1]).unwrap();
        let h = train_realizable(&s, 1000).unwrap();
        assert_eq!(empirical_error(&h, &s).unwrap(), 0.0);
        assert!(h.weights()[0] > 0.0);

        let single = BinarySample::new(vec![vec![3.0, -1.0]], vec![-1]).unwrap();
        let h = train_realizable(&single, 1000).unwrap();
        assert_eq!(h.predict(&[3.0, -1.0]).unwrap(), -1);
    }

    #[test]
    fn perceptron_rejects_xor() {
        assert!(matches!(
            train_realizable(&xor(), 10_000),
            Err(Error::NotRealizable { budget: 10_000 })
        ));
    }

    #[test]
    fn erm_on_xor_finds_a_quarter() {
        let h = train_erm_approx(&xor(), 8, 3).unwrap();
        assert_eq!(empirical_error(&h, &xor()).unwrap(), 0.25);
    }

    #[test]
    fn erm_all_positive() {
        let s = BinarySample::new(vec![vec![1.0, 2.0], vec![-4.0, 0.0]], vec![1, 1]).unwrap();
        let h = train_erm_approx(&s, 1, 0).unwrap();
        assert_eq!(empirical_error(&h, &s).unwrap(), 0.0);
    }

    #[test]
    fn erm_is_deterministic() {
        let s = BinarySample::new(
            (0..40)
                .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()])
                .collect(),
            (0..40).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect(),
        )
        .unwrap();
        let a = train_erm_approx(&s, 4, 11).unwrap();
        let b = train_erm_approx(&s, 4, 11).unwrap();
        assert_eq!(a, b);
    }
}
