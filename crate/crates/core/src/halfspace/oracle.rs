//! Exact minimum 0-1 error over all halfspaces for `d ∈ {1, 2}`.
//!
//! Identical points are merged into sites carrying positive and negative
//! counts, so all arithmetic on errors is exact integer counting.
//!
//! In one dimension every labeling realizable by a halfspace is a threshold
//! between two consecutive sites (or outside all of them) with one of two
//! orientations. In two dimensions every strict linear dichotomy can be
//! moved, without changing any side, to a line through one site (the pivot)
//! that touches no other site. Rotating a line around each pivot visits all
//! of them: sides change only when the line passes another site, so sorting
//! the other sites by direction angle modulo `π` and flipping them group by
//! group enumerates every dichotomy in `O(n² log n)`. The pivot itself can be
//! pushed to either side, and both orientations are scored.

use std::cmp::Ordering;
use std::f64::consts::PI;

use super::{BinarySample, Halfspace};
use crate::error::{invalid, Error, Result};

/// Largest number of distinct points accepted in two dimensions.
pub const MAX_ORACLE_POINTS_2D: usize = 5000;

/// The optimum found by [`exact_best_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFit {
    /// `mistakes / total`.
    pub error: f64,
    pub mistakes: u64,
    pub total: u64,
    /// A halfspace attaining the optimum.
    pub halfspace: Halfspace,
}

#[derive(Debug, Clone)]
struct Site {
    x: Vec<f64>,
    pos: u64,
    neg: u64,
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn aggregate(sample: &BinarySample) -> Vec<Site> {
    let mut pts: Vec<(Vec<f64>, i8)> = sample
        .iter()
        // -0.0 and 0.0 are the same point
        .map(|(x, y)| (x.iter().map(|v| v + 0.0).collect(), y))
        .collect();
    pts.sort_by(|a, b| cmp_points(&a.0, &b.0));
    let mut sites: Vec<Site> = Vec::new();
    for (x, y) in pts {
        match sites.last_mut() {
            Some(s) if s.x == x => {
                if y > 0 {
                    s.pos += 1
                } else {
                    s.neg += 1
                }
            }
            _ => sites.push(Site {
                x,
                pos: (y > 0) as u64,
                neg: (y < 0) as u64,
            }),
        }
    }
    sites
}

/// Minimum 0-1 error over all halfspaces, with a witness.
pub fn exact_best_error(sample: &BinarySample) -> Result<ExactFit> {
    if sample.is_empty() {
        return invalid("exact oracle needs a nonempty sample");
    }
    let sites = aggregate(sample);
    let (mistakes, halfspace) = match sample.dim() {
        1 => best_1d(&sites),
        2 => {
            if sites.len() > MAX_ORACLE_POINTS_2D {
                return Err(Error::BudgetExceeded(format!(
                    "{} distinct points exceed the 2-d oracle limit of {MAX_ORACLE_POINTS_2D}",
                    sites.len()
                )));
            }
            best_2d(&sites)
        }
        d => return invalid(format!("exact oracle supports d in {{1, 2}}, got d = {d}")),
    };
    let total = sample.len() as u64;
    Ok(ExactFit {
        error: mistakes as f64 / total as f64,
        mistakes,
        total,
        halfspace,
    })
}

fn best_1d(sites: &[Site]) -> (u64, Halfspace) {
    let m = sites.len();
    let total_pos: u64 = sites.iter().map(|s| s.pos).sum();
    let total_neg: u64 = sites.iter().map(|s| s.neg).sum();
    // threshold position t: sites[..t] on the left, sites[t..] on the right
    let (mut left_pos, mut left_neg) = (0u64, 0u64);
    let mut best = (u64::MAX, 0usize, 1i8);
    for t in 0..=m {
        let right_pos = total_pos - left_pos;
        let right_neg = total_neg - left_neg;
        // orientation +1: right side positive
        for (orient, err) in [(1i8, left_pos + right_neg), (-1, left_neg + right_pos)] {
            if err < best.0 {
                best = (err, t, orient);
            }
        }
        if t < m {
            left_pos += sites[t].pos;
            left_neg += sites[t].neg;
        }
    }
    let (err, t, orient) = best;
    let tau = if t == 0 {
        sites[0].x[0] - 1.0
    } else if t == m {
        sites[m - 1].x[0] + 1.0
    } else {
        0.5 * (sites[t - 1].x[0] + sites[t].x[0])
    };
    let o = orient as f64;
    (err, Halfspace { weights: vec![o, -o * tau] })
}

struct Other {
    v: [f64; 2],
    angle: f64,
    pos: u64,
    neg: u64,
}

/// Other sites seen from `pivot`, sorted by direction angle in `[0, π)`.
fn around(sites: &[Site], pivot: usize) -> Vec<Other> {
    let p = &sites[pivot].x;
    let mut others: Vec<Other> = sites
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, s)| {
            let v = [s.x[0] - p[0], s.x[1] - p[1]];
            let c = if v[1] > 0.0 || (v[1] == 0.0 && v[0] > 0.0) {
                v
            } else {
                [-v[0], -v[1]]
            };
            Other {
                v,
                angle: c[1].atan2(c[0]),
                pos: s.pos,
                neg: s.neg,
            }
        })
        .collect();
    others.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    others
}

/// Side of `v` for a line direction just below angle 0.
fn initial_side(v: &[f64; 2]) -> bool {
    if v[1] != 0.0 {
        v[1] > 0.0
    } else {
        v[0] > 0.0
    }
}

fn collinear(a: &Other, b: &Other) -> bool {
    a.v[0] * b.v[1] - a.v[1] * b.v[0] == 0.0
}

/// Group boundaries: `others[starts[g]..starts[g + 1]]` flip together.
fn group_starts(others: &[Other]) -> Vec<usize> {
    let mut starts = Vec::new();
    for i in 0..others.len() {
        if i == 0 || !collinear(&others[i - 1], &others[i]) {
            starts.push(i);
        }
    }
    starts.push(others.len());
    starts
}

#[derive(Clone, Copy)]
struct PivotBest {
    mistakes: u64,
    state: usize,
    orient: i8,
}

fn sweep_pivot(sites: &[Site], pivot: usize) -> PivotBest {
    let others = around(sites, pivot);
    let starts = group_starts(&others);
    let mut side: Vec<bool> = others.iter().map(|o| initial_side(&o.v)).collect();
    // counts on the positive (+) and negative (-) side of the line
    let (mut a_pos, mut a_neg, mut b_pos, mut b_neg) = (0u64, 0u64, 0u64, 0u64);
    for (o, &s) in others.iter().zip(&side) {
        if s {
            a_pos += o.pos;
            a_neg += o.neg;
        } else {
            b_pos += o.pos;
            b_neg += o.neg;
        }
    }
    let pivot_err = sites[pivot].pos.min(sites[pivot].neg);
    let mut best = PivotBest {
        mistakes: u64::MAX,
        state: 0,
        orient: 1,
    };
    let mut consider = |state: usize, a_pos: u64, a_neg: u64, b_pos: u64, b_neg: u64| {
        for (orient, err) in [(1i8, a_neg + b_pos), (-1, a_pos + b_neg)] {
            let err = err + pivot_err;
            if err < best.mistakes {
                best = PivotBest {
                    mistakes: err,
                    state,
                    orient,
                };
            }
        }
    };
    consider(0, a_pos, a_neg, b_pos, b_neg);
    for g in 0..starts.len() - 1 {
        for i in starts[g]..starts[g + 1] {
            let o = &others[i];
            if side[i] {
                a_pos -= o.pos;
                a_neg -= o.neg;
                b_pos += o.pos;
                b_neg += o.neg;
            } else {
                b_pos -= o.pos;
                b_neg -= o.neg;
                a_pos += o.pos;
                a_neg += o.neg;
            }
            side[i] = !side[i];
        }
        consider(g + 1, a_pos, a_neg, b_pos, b_neg);
    }
    best
}

fn best_2d(sites: &[Site]) -> (u64, Halfspace) {
    let total_pos: u64 = sites.iter().map(|s| s.pos).sum();
    let total_neg: u64 = sites.iter().map(|s| s.neg).sum();
    let constant = if total_neg <= total_pos {
        (total_neg, 1i8)
    } else {
        (total_pos, -1i8)
    };

    let per_pivot = crate::par::map_indexed(sites.len(), |p| sweep_pivot(sites, p));
    let best = per_pivot
        .iter()
        .enumerate()
        .min_by_key(|(i, b)| (b.mistakes, *i))
        .map(|(i, b)| (i, *b));

    match best {
        Some((pivot, b)) if b.mistakes < constant.0 => {
            (b.mistakes, pivot_halfspace(sites, pivot, b.state, b.orient))
        }
        _ => (constant.0, Halfspace::constant(2, constant.1)),
    }
}

/// Concrete halfspace for sweep state `state` around `pivot`.
fn pivot_halfspace(sites: &[Site], pivot: usize, state: usize, orient: i8) -> Halfspace {
    let others = around(sites, pivot);
    let starts = group_starts(&others);
    let groups = starts.len() - 1;
    let theta = |g: usize| {
        if g == groups {
            others[starts[0]].angle + PI
        } else {
            others[starts[g]].angle
        }
    };
    let mid = if groups == 0 {
        0.0
    } else if state == 0 {
        0.5 * (theta(groups - 1) - PI + theta(0))
    } else {
        0.5 * (theta(state - 1) + theta(state))
    };
    let normal = [-mid.sin(), mid.cos()];
    let p = &sites[pivot].x;
    let gap = others
        .iter()
        .map(|o| (normal[0] * o.v[0] + normal[1] * o.v[1]).abs())
        .fold(f64::INFINITY, f64::min);
    let shift = if gap.is_finite() && gap > 0.0 { 0.5 * gap } else { 1.0 };
    let pivot_label = if sites[pivot].pos >= sites[pivot].neg { 1.0 } else { -1.0 };
    let o = orient as f64;
    let bias = -o * (normal[0] * p[0] + normal[1] * p[1]) + pivot_label * shift;
    Halfspace {
        weights: vec![o * normal[0], o * normal[1], bias],
    }
}
