//! Point sets in `R^d` on which halfspaces realize every member of `F^l`
//! or `G^l`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::witness::{build_f, build_g, grid_index, GVariant};
use crate::error::{invalid, Error, Result};
use crate::halfspace::{train_realizable, BinarySample, Halfspace};

/// Distance of the `F` points from their anchor directions.
pub const DEFAULT_RADIUS: f64 = 1e-2;
/// Height slope of the `G` construction.
pub const DEFAULT_SLOPE: f64 = 10.0;
const MAX_ATTEMPTS: usize = 20;
const TRAINING_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    pub attempts: usize,
    pub radius: Option<f64>,
    pub slope: Option<f64>,
    /// Members of the class, duplicates included.
    pub functions: usize,
    /// Members realized by the explicit halfspace.
    pub constructed: usize,
    /// Members realized by perceptron training on the embedded points.
    pub trained: usize,
    /// Members realized by either certificate.
    pub realized: usize,
    /// Smallest `|⟨w, x̄⟩| / ‖w‖` over constructed halfspaces and points.
    pub min_margin: f64,
}

/// Points indexed by [`grid_index`] and one certificate per class member.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub d: usize,
    pub l: usize,
    pub points: Vec<Vec<f64>>,
    pub halfspaces: Vec<Option<Halfspace>>,
    pub report: EmbeddingReport,
}

fn certify(
    points: &[Vec<f64>],
    targets: &[Vec<i32>],
    constructed: Vec<Option<Halfspace>>,
) -> (Vec<Option<Halfspace>>, usize, usize, usize, f64) {
    let mut min_margin = f64::INFINITY;
    let mut built = 0;
    let mut trained = 0;
    let mut realized = 0;
    let mut out = Vec::with_capacity(targets.len());
    for (f, h) in targets.iter().zip(constructed) {
        let h = h.filter(|h| {
            let norm = h.weights()[..h.dim()].iter().map(|w| w * w).sum::<f64>().sqrt().max(1e-300);
            let ok = points.iter().zip(f).all(|(x, &y)| h.predict_unchecked(x) as i32 == y);
            if ok {
                for x in points {
                    min_margin = min_margin.min(h.score(x).abs() / norm);
                }
            }
            ok
        });
        let sample = BinarySample::new(points.to_vec(), f.iter().map(|&y| y as i8).collect())
            .expect("embedded points are finite");
        let by_training = train_realizable(&sample, TRAINING_BUDGET).ok();
        built += h.is_some() as usize;
        trained += by_training.is_some() as usize;
        let h = h.or(by_training);
        realized += h.is_some() as usize;
        out.push(h);
    }
    (out, built, trained, realized, min_margin)
}

/// `l` random unit directions `e_i ∈ R^d`; the points `x_{m,i}`, `m ∈ [d]`,
/// lie on the tangent hyperplane `⟨x, e_i⟩ = 1` within `radius` of `e_i`.
///
/// The member `f^{i,j}` is realized by `x ↦ ⟨a + α e_i, x⟩ + b - α` where
/// `⟨a, e_i⟩ = 0` and `⟨a, x_{m,i}⟩ + b = f(m)`; off the tangent plane of
/// `e_i` the term `α(⟨e_i, x⟩ - 1)` has sign `-sign(α)`, so `α = -j|α|`
/// with `|α|` large enough gives `j` there.
pub fn embed_f_halfspaces(d: usize, l: usize, seed: u64) -> Result<Embedding> {
    embed_f_with_radius(d, l, seed, DEFAULT_RADIUS)
}

pub fn embed_f_with_radius(d: usize, l: usize, seed: u64, radius: f64) -> Result<Embedding> {
    if d < 2 {
        return invalid("the F embedding needs d >= 2");
    }
    if !(radius > 0.0 && radius < 1.0) {
        return invalid("radius must lie in (0, 1)");
    }
    let class = build_f(d, l)?;
    let targets = class.functions();
    let mut rng = crate::rng(seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let dirs: Vec<DVector<f64>> = (0..l).map(|_| random_unit(&mut rng, d)).collect();
        let mut points = vec![Vec::new(); d * l];
        for (i, e) in dirs.iter().enumerate() {
            for m in 0..d {
                let g = random_unit(&mut rng, d);
                let t = &g - e * e.dot(&g);
                let t = if t.norm() > 0.0 { t.normalize() } else { t };
                points[grid_index(m, i, d)] = (e + t * radius).iter().copied().collect();
            }
        }
        let mut constructed = Vec::with_capacity(targets.len());
        for bits in 0..1usize << d {
            for i in 0..l {
                for j in [-1.0, 1.0] {
                    constructed.push(f_member(&points, &dirs, d, bits, i, j));
                }
            }
        }
        let (halfspaces, built, trained, realized, min_margin) = certify(&points, targets, constructed);
        if realized == targets.len() {
            return Ok(Embedding {
                d,
                l,
                points,
                halfspaces,
                report: EmbeddingReport {
                    attempts: attempt,
                    radius: Some(radius),
                    slope: None,
                    functions: targets.len(),
                    constructed: built,
                    trained,
                    realized,
                    min_margin,
                },
            });
        }
    }
    Err(Error::EmbeddingInvalid {
        attempts: MAX_ATTEMPTS,
    })
}

fn random_unit(rng: &mut crate::Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        if v.norm() > 1e-9 {
            return v.normalize();
        }
    }
}

fn f_member(points: &[Vec<f64>], dirs: &[DVector<f64>], d: usize, bits: usize, i: usize, j: f64) -> Option<Halfspace> {
    let e = &dirs[i];
    let mut a = DMatrix::zeros(d + 1, d + 1);
    let mut rhs = DVector::zeros(d + 1);
    for m in 0..d {
        let x = &points[grid_index(m, i, d)];
        for c in 0..d {
            a[(m, c)] = x[c];
        }
        a[(m, d)] = 1.0;
        rhs[m] = if bits >> m & 1 == 1 { 1.0 } else { -1.0 };
    }
    for c in 0..d {
        a[(d, c)] = e[c];
    }
    let z = a.lu().solve(&rhs)?;
    let mut alpha = 1.0;
    for _ in 0..80 {
        let s = -j * alpha;
        let mut w: Vec<f64> = (0..d).map(|c| z[c] + s * e[c]).collect();
        w.push(z[d] - s);
        let h = Halfspace::new(w).ok()?;
        let ok = (0..dirs.len()).all(|v| {
            (0..d).all(|m| {
                let want = if v == i {
                    if bits >> m & 1 == 1 { 1 } else { -1 }
                } else {
                    j as i8
                };
                h.predict_unchecked(&points[grid_index(m, v, d)]) == want
            })
        });
        if ok {
            return Some(h);
        }
        alpha *= 2.0;
    }
    None
}

/// `ι(m, i) = (e_m, i) ∈ R^{d-1} × R` with `e_0 = 0` and `e_m` the standard
/// basis; `g^{i,j}` is realized by `(z, y) ↦ A(z) + j · slope · (y - i)`
/// where the affine map `A` takes the value `h(m)` at `e_m`.
pub fn embed_g_halfspaces(d: usize, l: usize, slope: f64) -> Result<Embedding> {
    if d < 2 {
        return invalid("the G embedding needs d >= 2");
    }
    if !(slope > 0.0 && slope.is_finite()) {
        return invalid("slope must be positive");
    }
    let class = build_g(d, l, GVariant::Full)?;
    let targets = class.functions();
    let mut points = vec![Vec::new(); d * l];
    for i in 0..l {
        for m in 0..d {
            let mut p: Vec<f64> = (0..d - 1).map(|c| if m == c + 1 { 1.0 } else { 0.0 }).collect();
            p.push(i as f64);
            points[grid_index(m, i, d)] = p;
        }
    }
    let mut constructed = Vec::with_capacity(targets.len());
    for bits in 0..1usize << d {
        for i in 0..l {
            for j in [-1.0, 1.0] {
                let h = |m: usize| if bits >> m & 1 == 1 { 1.0 } else { -1.0 };
                let b = h(0);
                let mut w: Vec<f64> = (1..d).map(|m| h(m) - b).collect();
                w.push(j * slope);
                w.push(b - j * slope * i as f64);
                constructed.push(Halfspace::new(w).ok());
            }
        }
    }
    let (halfspaces, built, trained, realized, min_margin) = certify(&points, targets, constructed);
    if realized < targets.len() {
        return Err(Error::EmbeddingInvalid { attempts: 1 });
    }
    Ok(Embedding {
        d,
        l,
        points,
        halfspaces,
        report: EmbeddingReport {
            attempts: 1,
            radius: None,
            slope: Some(slope),
            functions: targets.len(),
            constructed: built,
            trained,
            realized,
            min_margin,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_embedding_small() {
        for l in [2, 3] {
            let e = embed_f_halfspaces(2, l, 1).unwrap();
            assert_eq!(e.report.realized, e.report.functions);
            assert_eq!(e.report.constructed, e.report.functions);
            assert_eq!(e.report.radius, Some(DEFAULT_RADIUS));
            assert!(e.report.min_margin > 0.0);
        }
    }

    #[test]
    fn g_embedding_small() {
        let e = embed_g_halfspaces(2, 3, DEFAULT_SLOPE).unwrap();
        assert_eq!(e.report.constructed, e.report.functions);
        assert_eq!(e.report.trained, e.report.functions);
        assert_eq!(e.points[grid_index(1, 2, 2)], vec![1.0, 2.0]);
    }

    #[test]
    fn g_construction_needs_a_steep_slope() {
        // with a flat slope the explicit halfspaces fail, training still succeeds
        let e = embed_g_halfspaces(3, 3, 0.1).unwrap();
        assert!(e.report.constructed < e.report.functions);
        assert_eq!(e.report.realized, e.report.functions);
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(embed_f_halfspaces(1, 2, 0).is_err());
        assert!(embed_g_halfspaces(1, 2, 10.0).is_err());
    }
}
