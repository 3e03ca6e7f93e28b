//! Seeded synthetic distributions over `R^d × [k]` and random sign maps
//! `φ: [k] → {±1}`.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::halfspace::BinarySample;
use crate::reducers::MulticlassSample;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Class `i` sits at `centers[i]`, optionally jittered.
    PointClasses,
    /// Classes at angles `2πi/k` on the unit circle.
    CirclePoints,
    /// Uniform on the unit disc, labelled by 120° sector.
    Sector3,
    /// Centers drawn uniformly from the unit ball.
    RandomPoints,
    /// Origin and the standard basis of `R^d`.
    Simplex,
}

/// A distribution over labelled points; all variants except `Sector3`
/// place class `i` at a center, jittered by `N(0, σ² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDistribution {
    kind: Kind,
    dim: usize,
    centers: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    jitter: f64,
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

impl SyntheticDistribution {
    pub fn point_classes(centers: Vec<Vec<f64>>) -> Result<Self> {
        let k = centers.len();
        if k < 2 {
            return invalid(format!("need k >= 2 classes, got {k}"));
        }
        let dim = centers[0].len();
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return invalid("class centers must share a positive dimension");
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("class centers must be finite");
        }
        Ok(SyntheticDistribution {
            kind: Kind::PointClasses,
            dim,
            centers,
            probabilities: uniform(k),
            jitter: 0.0,
        })
    }

    /// Two classes at `(0, 0.7)` and `(0.7, 0)`.
    pub fn two_points() -> Self {
        Self::point_classes(vec![vec![0.0, 0.7], vec![0.7, 0.0]]).expect("valid centers")
    }

    pub fn circle_points(k: usize) -> Result<Self> {
        let centers = (0..k)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / k as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        Ok(SyntheticDistribution {
            kind: Kind::CirclePoints,
            ..Self::point_classes(centers)?
        })
    }

    pub fn sector3() -> Self {
        SyntheticDistribution {
            kind: Kind::Sector3,
            dim: 2,
            centers: Vec::new(),
            probabilities: uniform(3),
            jitter: 0.0,
        }
    }

    /// `k` centers uniform in the unit ball of `R^d`. With `with_center`,
    /// the last class sits at the centroid of the other `k - 1`.
    pub fn random_points(k: usize, d: usize, seed: u64, with_center: bool) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        if k < 2 || (with_center && k < 3) {
            return invalid(format!("random points need k >= 2 (3 with a center), got {k}"));
        }
        let mut rng = crate::rng(seed);
        let drawn = if with_center { k - 1 } else { k };
        let mut centers: Vec<Vec<f64>> = (0..drawn)
            .map(|_| {
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let radius = rng.random::<f64>().powf(1.0 / d as f64);
                g.iter().map(|v| v / norm * radius).collect()
            })
            .collect();
        if with_center {
            let centroid = (0..d)
                .map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / drawn as f64)
                .collect();
            centers.push(centroid);
        }
        Ok(SyntheticDistribution {
            kind: Kind::RandomPoints,
            ..Self::point_classes(centers)?
        })
    }

    /// `d + 1` classes at the origin and `e_1, ..., e_d`.
    pub fn simplex(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        let centers = (0..=d)
            .map(|i| (0..d).map(|j| if i == j + 1 { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(SyntheticDistribution {
            kind: Kind::Simplex,
            ..Self::point_classes(centers)?
        })
    }

    pub fn with_jitter(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid(format!("jitter must be a finite σ >= 0, got {sigma}"));
        }
        if self.kind == Kind::Sector3 && sigma > 0.0 {
            return invalid("the sector distribution has no class centers to jitter");
        }
        self.jitter = sigma;
        Ok(self)
    }

    pub fn with_probabilities(mut self, p: Vec<f64>) -> Result<Self> {
        if self.kind == Kind::Sector3 {
            return invalid("sector class masses are fixed by the sector angles");
        }
        if p.len() != self.num_classes() {
            return invalid(format!("need {} class probabilities, got {}", self.num_classes(), p.len()));
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return invalid("class probabilities must be nonnegative");
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("class probabilities sum to {total}, not 1"));
        }
        self.probabilities = p;
        Ok(self)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.probabilities.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn max_class_mass(&self) -> f64 {
        self.probabilities.iter().cloned().fold(0.0, f64::max)
    }

    /// Fails unless every class has mass at most `factor / k`.
    pub fn check_mass_bound(&self, factor: f64) -> Result<()> {
        let bound = factor / self.num_classes() as f64;
        let max = self.max_class_mass();
        if max > bound + 1e-12 {
            return invalid(format!("class mass {max} exceeds {factor}/k = {bound}"));
        }
        Ok(())
    }

    /// Atoms `(point, label, mass)` when the distribution is finitely supported.
    pub fn support(&self) -> Option<Vec<(Vec<f64>, Label, f64)>> {
        if self.kind == Kind::Sector3 || self.jitter > 0.0 {
            return None;
        }
        Some(
            self.centers
                .iter()
                .zip(&self.probabilities)
                .enumerate()
                .map(|(i, (c, &p))| (c.clone(), i, p))
                .collect(),
        )
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<MulticlassSample> {
        if n == 0 {
            return invalid("sample size must be at least 1");
        }
        let mut rng = crate::rng(seed);
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        if self.kind == Kind::Sector3 {
            for _ in 0..n {
                let radius = rng.random::<f64>().sqrt();
                let angle = 2.0 * PI * rng.random::<f64>();
                points.push(vec![radius * angle.cos(), radius * angle.sin()]);
                labels.push(sector_of(angle));
            }
        } else {
            let classes = WeightedIndex::new(&self.probabilities)
                .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
            for _ in 0..n {
                let y = classes.sample(&mut rng);
                let mut x = self.centers[y].clone();
                if self.jitter > 0.0 {
                    for v in &mut x {
                        *v += self.jitter * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                points.push(x);
                labels.push(y);
            }
        }
        MulticlassSample::new(points, labels, self.num_classes())
    }
}

/// Sector index of the angle `θ ∈ [0, 2π)`: `[0°, 120°)` is class 0.
pub fn sector_of(angle: f64) -> Label {
    let a = angle.rem_euclid(2.0 * PI);
    ((a / (2.0 * PI / 3.0)).floor() as usize).min(2)
}

/// JSON description of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DistributionConfig {
    pub kind: Kind,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub with_center: bool,
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub class_probabilities: Option<Vec<f64>>,
}

impl DistributionConfig {
    pub fn build(&self) -> Result<SyntheticDistribution> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| crate::Error::InvalidArgument(format!("`{name}` is required for this kind")))
        };
        let dist = match self.kind {
            Kind::PointClasses => match &self.centers {
                Some(c) => SyntheticDistribution::point_classes(c.clone())?,
                None => SyntheticDistribution::two_points(),
            },
            Kind::CirclePoints => SyntheticDistribution::circle_points(need(self.k, "k")?)?,
            Kind::Sector3 => SyntheticDistribution::sector3(),
            Kind::RandomPoints => SyntheticDistribution::random_points(
                need(self.k, "k")?,
                self.d.unwrap_or(2),
                self.seed.unwrap_or(0),
                self.with_center,
            )?,
            Kind::Simplex => SyntheticDistribution::simplex(need(self.d, "d")?)?,
        };
        if let Some(d) = self.d {
            if d != dist.dim() {
                return invalid(format!("config asks for d = {d} but the distribution lives in R^{}", dist.dim()));
            }
        }
        if let Some(k) = self.k {
            if k != dist.num_classes() {
                return invalid(format!("config asks for k = {k} but the distribution has {} classes", dist.num_classes()));
            }
        }
        let dist = match self.jitter {
            Some(s) => dist.with_jitter(s)?,
            None => dist,
        };
        match &self.class_probabilities {
            Some(p) => dist.with_probabilities(p.clone()),
            None => Ok(dist),
        }
    }
}

/// How the signs of a [`LabelMap`] were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// Each `φ(i) = -1` independently with probability `μ`.
    Iid { mu: f64 },
    /// Uniform among maps with exactly `round(μk)` negatives.
    Exact { mu: f64 },
}

/// `φ: [k] → {±1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    signs: Vec<i8>,
    rule: Option<LabelRule>,
}

impl LabelMap {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return invalid("label map values must be ±1");
        }
        Ok(LabelMap { signs, rule: None })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn rule(&self) -> Option<LabelRule> {
        self.rule
    }

    pub fn num_classes(&self) -> usize {
        self.signs.len()
    }

    pub fn negatives(&self) -> usize {
        self.signs.iter().filter(|&&s| s < 0).count()
    }

    pub fn negated(&self) -> LabelMap {
        LabelMap {
            signs: self.signs.iter().map(|s| -s).collect(),
            rule: None,
        }
    }
}

pub fn random_label_map(k: usize, rule: LabelRule, seed: u64) -> Result<LabelMap> {
    let (LabelRule::Iid { mu } | LabelRule::Exact { mu }) = rule;
    if !(mu > 0.0 && mu <= 0.5) {
        return invalid(format!("μ must lie in (0, 1/2], got {mu}"));
    }
    if k == 0 {
        return invalid("label map over an empty label set");
    }
    let mut rng = crate::rng(seed);
    let signs = match rule {
        LabelRule::Iid { .. } => (0..k)
            .map(|_| if rng.random::<f64>() < mu { -1 } else { 1 })
            .collect(),
        LabelRule::Exact { .. } => {
            let m = (mu * k as f64).round() as usize;
            if m == 0 {
                return invalid(format!("round(μk) = 0 for μ = {mu}, k = {k}"));
            }
            let mut idx: Vec<usize> = (0..k).collect();
            idx.shuffle(&mut rng);
            let mut signs = vec![1; k];
            for &i in &idx[..m] {
                signs[i] = -1;
            }
            signs
        }
    };
    Ok(LabelMap {
        signs,
        rule: Some(rule),
    })
}

/// Replaces each `(x, y)` by `(x, φ(y))`.
pub fn apply_label_map(sample: &MulticlassSample, phi: &LabelMap) -> Result<BinarySample> {
    if sample.num_classes() > phi.num_classes() {
        return invalid(format!(
            "sample has {} classes, label map covers {}",
            sample.num_classes(),
            phi.num_classes()
        ));
    }
    BinarySample::new(
        sample.points().to_vec(),
        sample.labels().iter().map(|&y| phi.signs[y]).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_centers() {
        let d = SyntheticDistribution::circle_points(9).unwrap();
        let c = &d.centers()[3];
        let a = 2.0 * PI * 3.0 / 9.0;
        assert!((c[0] - a.cos()).abs() < 1e-15 && (c[1] - a.sin()).abs() < 1e-15);
        assert!(d.check_mass_bound(1.0).is_ok());
    }

    #[test]
    fn simplex_layout() {
        let d = SyntheticDistribution::simplex(3).unwrap();
        assert_eq!(d.num_classes(), 4);
        assert_eq!(d.centers()[0], vec![0.0; 3]);
        assert_eq!(d.centers()[2], vec![0.0, 1.0, 0.0]);
        let support = d.support().unwrap();
        assert!(support.iter().all(|s| s.2 == 0.25));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = SyntheticDistribution::circle_points(5).unwrap().with_jitter(0.1).unwrap();
        assert_eq!(d.sample(50, 7).unwrap(), d.sample(50, 7).unwrap());
        assert_ne!(d.sample(50, 7).unwrap(), d.sample(50, 8).unwrap());
        assert!(d.sample(0, 1).is_err());
    }

    #[test]
    fn sector_masses_and_boundaries() {
        let s = SyntheticDistribution::sector3().sample(30_000, 3).unwrap();
        for c in 0..3 {
            let frac = s.labels().iter().filter(|&&y| y == c).count() as f64 / 30_000.0;
            assert!((frac - 1.0 / 3.0).abs() < 0.015);
        }
        assert!(s.points().iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0));
        let step = 2.0 * PI / 3.0;
        assert_eq!(sector_of(step - 1e-9), 0);
        assert_eq!(sector_of(step + 1e-9), 1);
        assert_eq!(sector_of(2.0 * step + 1e-9), 2);
        assert_eq!(sector_of(-1e-9), 2);
    }

    #[test]
    fn random_points_with_center() {
        let d = SyntheticDistribution::random_points(9, 2, 4, true).unwrap();
        let c = d.centers();
        assert!(c.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0));
        let mx: f64 = c[..8].iter().map(|p| p[0]).sum::<f64>() / 8.0;
        assert!((c[8][0] - mx).abs() < 1e-12);
        let other = SyntheticDistribution::random_points(9, 2, 5, true).unwrap();
        assert_ne!(other.centers(), c);
    }

    #[test]
    fn exact_rule_counts() {
        for seed in 0..20 {
            let phi = random_label_map(4, LabelRule::Exact { mu: 0.5 }, seed).unwrap();
            assert_eq!(phi.negatives(), 2);
        }
        let phi = random_label_map(7, LabelRule::Exact { mu: 0.3 }, 1).unwrap();
        assert_eq!(phi.negatives(), 2);
        assert!(random_label_map(3, LabelRule::Exact { mu: 0.1 }, 0).is_err());
        assert!(random_label_map(3, LabelRule::Iid { mu: 0.6 }, 0).is_err());
    }

    #[test]
    fn iid_rule_frequency() {
        let phi = random_label_map(10_000, LabelRule::Iid { mu: 0.3 }, 2).unwrap();
        let frac = phi.negatives() as f64 / 10_000.0;
        assert!((frac - 0.3).abs() < 0.02);
    }

    #[test]
    fn apply_and_negate() {
        let s = SyntheticDistribution::circle_points(4).unwrap().sample(20, 0).unwrap();
        let plus = LabelMap::new(vec![1; 4]).unwrap();
        let b = apply_label_map(&s, &plus).unwrap();
        assert!(b.labels().iter().all(|&y| y == 1));
        let phi = random_label_map(4, LabelRule::Exact { mu: 0.5 }, 3).unwrap();
        let b1 = apply_label_map(&s, &phi).unwrap();
        let b2 = apply_label_map(&s, &phi.negated()).unwrap();
        assert_eq!(b1.with_flipped_labels(), b2);
        assert!(apply_label_map(&s, &LabelMap::new(vec![1; 3]).unwrap()).is_err());
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"kind": "random-points", "k": 9, "d": 2, "seed": 3, "with-center": true}"#;
        let cfg: DistributionConfig = serde_json::from_str(json).unwrap();
        let d = cfg.build().unwrap();
        assert_eq!(d, SyntheticDistribution::random_points(9, 2, 3, true).unwrap());
        let bad: DistributionConfig = serde_json::from_str(r#"{"kind": "simplex"}"#).unwrap();
        assert!(bad.build().is_err());
        assert!(serde_json::from_str::<DistributionConfig>(r#"{"kind": "nope"}"#).is_err());
    }
}
