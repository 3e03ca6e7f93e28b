//! Independent brute-force re-implementations checked against the library.

use std::collections::BTreeSet;

use multireduce::codes::{ova_code, random_code, BinaryVector, CodeMatrix};
use multireduce::halfspace::{exact_best_error, BinarySample};
use multireduce::shatter::{build_f, compose_with_code, FiniteFunctionClass};
use proptest::prelude::*;

/// Minimum error over all `2(n+1)` threshold rules on the line.
fn thresholds_1d(xs: &[f64], ys: &[i8]) -> usize {
    let mut cuts: Vec<f64> = xs.to_vec();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut candidates = vec![cuts[0] - 1.0];
    candidates.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(cuts[cuts.len() - 1] + 1.0);
    let mut best = usize::MAX;
    for &t in &candidates {
        for s in [1i8, -1] {
            let err = xs
                .iter()
                .zip(ys)
                .filter(|(&x, &y)| (if x > t { s } else { -s }) != y)
                .count();
            best = best.min(err);
        }
    }
    best
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Minimum error over halfspaces for integer points with no three collinear:
/// an optimal line can be moved to pass through two points, which are then
/// free to fall on either side.
fn pairs_2d(pts: &[(i64, i64)], ys: &[i8]) -> usize {
    let n = pts.len();
    let pos = ys.iter().filter(|&&y| y > 0).count();
    let mut best = pos.min(n - pos);
    for i in 0..n {
        for j in i + 1..n {
            for s in [1i64, -1] {
                let mut base = 0;
                for t in 0..n {
                    if t == i || t == j {
                        continue;
                    }
                    let side = if s * cross(pts[i], pts[j], pts[t]) > 0 { 1 } else { -1 };
                    base += (side != ys[t]) as usize;
                }
                for si in [1i8, -1] {
                    for sj in [1i8, -1] {
                        let err = base + (si != ys[i]) as usize + (sj != ys[j]) as usize;
                        best = best.min(err);
                    }
                }
            }
        }
    }
    best
}

fn general_position(pts: &[(i64, i64)]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            if pts[i] == pts[j] {
                return false;
            }
            for t in j + 1..n {
                if cross(pts[i], pts[j], pts[t]) == 0 {
                    return false;
                }
            }
        }
    }
    true
}

fn labels(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1 } else { -1 }), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_dimension_matches_thresholds(
        (xs, ys) in (1usize..25).prop_flat_map(|n| (prop::collection::vec(-5i32..5, n), labels(n)))
    ) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let sample = BinarySample::new(xs.iter().map(|&x| vec![x]).collect(), ys.clone()).unwrap();
        let fit = exact_best_error(&sample).unwrap();
        prop_assert_eq!(fit.mistakes as usize, thresholds_1d(&xs, &ys));
        let witness = fit.halfspace;
        let realized = sample.iter().filter(|(x, y)| witness.predict(x).unwrap() != *y).count();
        prop_assert_eq!(realized as u64, fit.mistakes);
    }

    #[test]
    fn two_dimensions_match_pair_enumeration(
        (pts, ys) in (3usize..14).prop_flat_map(|n| (prop::collection::vec((-40i64..40, -40i64..40), n), labels(n)))
    ) {
        prop_assume!(general_position(&pts));
        let sample = BinarySample::new(
            pts.iter().map(|&(a, b)| vec![a as f64, b as f64]).collect(),
            ys.clone(),
        ).unwrap();
        let fit = exact_best_error(&sample).unwrap();
        prop_assert_eq!(fit.mistakes as usize, pairs_2d(&pts, &ys));
        let realized = sample.iter().filter(|(x, y)| fit.halfspace.predict(x).unwrap() != *y).count();
        prop_assert_eq!(realized as u64, fit.mistakes);
    }
}

/// Score argmax with ties to the smallest row.
fn decode_by_hand(m: &CodeMatrix, u: &[i8]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..m.num_classes() {
        let s: f64 = (0..m.code_length()).map(|j| m.entry(i, j) * u[j] as f64).sum();
        if s > best.0 {
            best = (s, i);
        }
    }
    m.label_map()[best.1]
}

#[test]
fn decode_and_sensitivity_by_hand() {
    for seed in 0..40 {
        let k = 3 + seed as usize % 5;
        let l = 3 + seed as usize % 6;
        let m = random_code(k, l, seed).unwrap();
        for bits in 0..1usize << l {
            let u: Vec<i8> = (0..l).map(|j| if bits >> j & 1 == 1 { 1 } else { -1 }).collect();
            let v = BinaryVector::new(u.clone()).unwrap();
            let base = decode_by_hand(&m, &u);
            assert_eq!(m.decode(&v).unwrap(), base);
            let coords: Vec<usize> = (0..l)
                .filter(|&j| {
                    let mut w = u.clone();
                    w[j] = -w[j];
                    decode_by_hand(&m, &w) != base
                })
                .collect();
            assert_eq!(m.sensitivity(&v).unwrap().coords, coords);
        }
    }
}

/// `H_OvA` built directly: the label at `x` is the first `i` with
/// `h_i(x) = +1`, and `0` when there is none.
fn ova_by_hand(h: &FiniteFunctionClass, k: usize) -> BTreeSet<Vec<i32>> {
    let n = h.domain_size();
    let fs = h.deduped();
    let fs = fs.functions();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; k];
    loop {
        let g: Vec<i32> = (0..n)
            .map(|x| (0..k).find(|&i| fs[idx[i]][x] > 0).unwrap_or(0) as i32)
            .collect();
        out.insert(g);
        let mut c = 0;
        loop {
            if c == k {
                return out;
            }
            idx[c] += 1;
            if idx[c] < fs.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

#[test]
fn ova_composition_matches_direct_construction() {
    for (d, k) in [(1, 2), (1, 3), (2, 2), (2, 3)] {
        let h = build_f(d, k).unwrap();
        let composed: BTreeSet<Vec<i32>> = compose_with_code(&h, &ova_code(k).unwrap())
            .unwrap()
            .functions()
            .iter()
            .cloned()
            .collect();
        assert_eq!(composed, ova_by_hand(&h, k), "d={d} k={k}");
    }
}
