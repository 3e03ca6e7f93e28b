//! The classes `F^l`, `G^l`, their compositions with codes and trees, and
//! exhaustive checks that the composed classes N-shatter large sets.

use std::collections::HashSet;

use super::{FiniteFunctionClass, MAX_SHATTER_SET};
use crate::codes::{BinaryVector, CodeMatrix};
use crate::error::{invalid, Error, Result};
use crate::reducers::{Node, TreeShape};

/// Cap on the number of tuples a materialized composition enumerates.
pub const COMPOSE_BUDGET: u64 = 2_000_000;
const SEARCH_BUDGET: u64 = 200_000_000;
const MAX_GRID: usize = 24;

/// Index of the grid point `(u, v) ∈ [d] × [l]`.
pub fn grid_index(u: usize, v: usize, d: usize) -> usize {
    v * d + u
}

fn check_grid(d: usize, l: usize) -> Result<()> {
    if d == 0 || l == 0 {
        return invalid("grid needs d >= 1 and l >= 1");
    }
    if d > 16 || d * l > MAX_GRID * 4 || (1u64 << d) * l as u64 * 2 > 1 << 22 {
        return Err(Error::BudgetExceeded(format!("grid [{d}] x [{l}] too large to enumerate")));
    }
    Ok(())
}

fn pattern(bits: usize, u: usize) -> i32 {
    if bits >> u & 1 == 1 {
        1
    } else {
        -1
    }
}

/// `f^{i,j}(u, v) = f(u)` if `v = i`, else `j`; over all `f ∈ {±1}^[d]`,
/// `i ∈ [l]`, `j = ±1`.
pub fn build_f(d: usize, l: usize) -> Result<FiniteFunctionClass> {
    check_grid(d, l)?;
    let mut functions = Vec::new();
    for bits in 0..1usize << d {
        for i in 0..l {
            for j in [-1, 1] {
                let mut g = vec![0; d * l];
                for v in 0..l {
                    for u in 0..d {
                        g[grid_index(u, v, d)] = if v == i { pattern(bits, u) } else { j };
                    }
                }
                functions.push(g);
            }
        }
    }
    FiniteFunctionClass::new(d * l, functions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GVariant {
    /// `j ∈ {-1, +1}`.
    Full,
    /// `j = +1` only.
    Tilde,
}

/// `g^{i,j}(u, v) = h(u)` if `v = i`, `j` if `v > i`, `-j` if `v < i`.
pub fn build_g(d: usize, l: usize, variant: GVariant) -> Result<FiniteFunctionClass> {
    check_grid(d, l)?;
    let js: &[i32] = match variant {
        GVariant::Full => &[-1, 1],
        GVariant::Tilde => &[1],
    };
    let mut functions = Vec::new();
    for bits in 0..1usize << d {
        for i in 0..l {
            for &j in js {
                let mut g = vec![0; d * l];
                for v in 0..l {
                    for u in 0..d {
                        g[grid_index(u, v, d)] = match v.cmp(&i) {
                            std::cmp::Ordering::Equal => pattern(bits, u),
                            std::cmp::Ordering::Greater => j,
                            std::cmp::Ordering::Less => -j,
                        };
                    }
                }
                functions.push(g);
            }
        }
    }
    FiniteFunctionClass::new(d * l, functions)
}

fn binary_base(h: &FiniteFunctionClass) -> Result<FiniteFunctionClass> {
    if !h.is_binary() {
        return invalid("composition needs a class with labels ±1");
    }
    if h.is_empty() {
        return invalid("composition of an empty class");
    }
    Ok(h.deduped())
}

fn tuple_count(base: usize, len: usize) -> Result<u64> {
    let count = (base as f64).powi(len as i32);
    if count > COMPOSE_BUDGET as f64 {
        return Err(Error::BudgetExceeded(format!(
            "{base}^{len} tuples exceed the composition budget of {COMPOSE_BUDGET}"
        )));
    }
    Ok(count as u64)
}

/// Visits every tuple in `0..base` of length `len` in odometer order.
fn for_each_tuple(base: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    let mut t = vec![0usize; len];
    loop {
        visit(&t);
        let mut i = 0;
        while i < len {
            t[i] += 1;
            if t[i] < base {
                break;
            }
            t[i] = 0;
            i += 1;
        }
        if i == len {
            return;
        }
    }
}

/// `H_M = { x ↦ M̃(h_1(x), ..., h_l(x)) : h_j ∈ H }`, deduplicated.
pub fn compose_with_code(h: &FiniteFunctionClass, code: &CodeMatrix) -> Result<FiniteFunctionClass> {
    let base = binary_base(h)?;
    let l = code.code_length();
    tuple_count(base.len(), l)?;
    let n = base.domain_size();
    let fs = base.functions();
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    let mut u = vec![0i8; l];
    for_each_tuple(fs.len(), l, |t| {
        let g = (0..n)
            .map(|x| {
                for (c, &idx) in t.iter().enumerate() {
                    u[c] = fs[idx][x] as i8;
                }
                code.decode_unchecked(&u) as i32
            })
            .collect();
        seen.insert(g);
    });
    let mut functions: Vec<Vec<i32>> = seen.into_iter().collect();
    functions.sort_unstable();
    FiniteFunctionClass::new(n, functions)
}

/// `H_T = { h_C : C: N(T) → H }`, deduplicated; `leaf_labels[slot]` is the
/// label of leaf `slot`.
pub fn compose_with_tree(
    h: &FiniteFunctionClass,
    shape: &TreeShape,
    leaf_labels: &[usize],
) -> Result<FiniteFunctionClass> {
    let base = binary_base(h)?;
    crate::reducers::check_bijection(leaf_labels, shape.num_leaves())?;
    tuple_count(base.len(), shape.num_internal())?;
    let n = base.domain_size();
    let fs = base.functions();
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    for_each_tuple(fs.len(), shape.num_internal(), |assign| {
        let g = (0..n)
            .map(|x| {
                let mut idx = shape.root();
                loop {
                    match shape.node(idx) {
                        Node::Leaf { slot } => return leaf_labels[slot] as i32,
                        Node::Internal { id, left, right } => {
                            idx = if fs[assign[id]][x] > 0 { right } else { left };
                        }
                    }
                }
            })
            .collect();
        seen.insert(g);
    });
    let mut functions: Vec<Vec<i32>> = seen.into_iter().collect();
    functions.sort_unstable();
    FiniteFunctionClass::new(n, functions)
}

/// Set `[d] × J` over the sensitive coordinates `J` of `u` with the maps
/// `g1 ≡ M̃(u)` and `g2(x, y) = M̃(u ⊕ e_y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveWitness {
    pub coords: Vec<usize>,
    pub set: Vec<usize>,
    pub g1: Vec<i32>,
    pub g2: Vec<i32>,
}

pub fn sensitive_witness(code: &CodeMatrix, u: &BinaryVector, d: usize) -> Result<SensitiveWitness> {
    if d == 0 {
        return invalid("d must be positive");
    }
    let sens = code.sensitivity(u)?;
    let base = code.decode(u)? as i32;
    let mut set = Vec::new();
    let mut g1 = Vec::new();
    let mut g2 = Vec::new();
    for &y in &sens.coords {
        let flipped = code.decode(&u.flipped(y))? as i32;
        for x in 0..d {
            set.push(grid_index(x, y, d));
            g1.push(base);
            g2.push(flipped);
        }
    }
    Ok(SensitiveWitness {
        coords: sens.coords,
        set,
        g1,
        g2,
    })
}

fn integer_code(code: &CodeMatrix) -> Result<Vec<Vec<i32>>> {
    code.rows()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if v == 1.0 || v == -1.0 || v == 0.0 {
                        Ok(v as i32)
                    } else {
                        invalid("the shattering search needs a code with entries in {-1, 0, +1}")
                    }
                })
                .collect()
        })
        .collect()
}

/// Checks that the composition of `F^l` with `code` N-shatters the set of
/// [`sensitive_witness`] under `g1`, `g2`.
///
/// For every `T ⊆ S` a complete backtracking search over column choices
/// from `F^l|_S` looks for a composed function equal to `g1` on `T` and
/// `g2` off `T`. Branches are cut only when some point can no longer reach
/// its target label under any completion, and dead partial score states
/// are remembered, so the answer is exact.
pub fn sensitive_witness_check(code: &CodeMatrix, u: &BinaryVector, d: usize) -> Result<bool> {
    let l = code.code_length();
    if u.len() != l {
        return invalid("vector length does not match the code length");
    }
    let w = sensitive_witness(code, u, d)?;
    if w.set.is_empty() {
        return Ok(true);
    }
    if w.set.len() > MAX_SHATTER_SET {
        return Err(Error::BudgetExceeded(format!("shattered set of size {}", w.set.len())));
    }
    n_shatters_composed(code, d, &w.set, &w.g1, &w.g2)
}

/// Whether `F^l` composed with `code` N-shatters `set` under `g1`, `g2`.
pub(crate) fn n_shatters_composed(
    code: &CodeMatrix,
    d: usize,
    set: &[usize],
    g1: &[i32],
    g2: &[i32],
) -> Result<bool> {
    let m = integer_code(code)?;
    let patterns: Vec<Vec<i32>> = build_f(d, code.code_length())?.restrict(set);
    let row_of = |label: i32| code.row_of_label(label as usize).expect("bijective label map");
    let t1: Vec<usize> = g1.iter().map(|&y| row_of(y)).collect();
    let t2: Vec<usize> = g2.iter().map(|&y| row_of(y)).collect();
    let s = set.len();
    let mut budget = SEARCH_BUDGET;
    for mask in 0..1usize << s {
        let targets: Vec<usize> = (0..s)
            .map(|p| if mask >> p & 1 == 1 { t1[p] } else { t2[p] })
            .collect();
        if !TargetSearch::new(&m, &patterns, &targets).run(&mut budget)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches for a column tuple whose decoded labels hit `targets` (as row
/// indices) at every point.
struct TargetSearch<'a> {
    m: &'a [Vec<i32>],
    patterns: &'a [Vec<i32>],
    targets: &'a [usize],
    k: usize,
    // slack[c][p*k + r]: largest gain of score_t - score_r over columns c..
    slack: Vec<Vec<i32>>,
    dead: HashSet<(usize, Vec<i32>)>,
}

impl<'a> TargetSearch<'a> {
    fn new(m: &'a [Vec<i32>], patterns: &'a [Vec<i32>], targets: &'a [usize]) -> Self {
        let k = m.len();
        let l = m[0].len();
        let s = targets.len();
        let mut slack = vec![vec![0; s * k]; l + 1];
        for c in (0..l).rev() {
            for p in 0..s {
                let t = targets[p];
                for r in 0..k {
                    slack[c][p * k + r] = slack[c + 1][p * k + r] + (m[t][c] - m[r][c]).abs();
                }
            }
        }
        TargetSearch {
            m,
            patterns,
            targets,
            k,
            slack,
            dead: HashSet::new(),
        }
    }

    fn run(mut self, budget: &mut u64) -> Result<bool> {
        let state = vec![0; self.targets.len() * self.k];
        if !self.alive(0, &state) {
            return Ok(false);
        }
        self.dfs(0, state, budget)
    }

    // row t beats r < t strictly and r > t weakly
    fn alive(&self, c: usize, state: &[i32]) -> bool {
        let k = self.k;
        (0..self.targets.len()).all(|p| {
            let t = self.targets[p];
            (0..k).all(|r| {
                let need = if r < t { 1 } else { 0 };
                r == t || state[p * k + r] + self.slack[c][p * k + r] >= need
            })
        })
    }

    fn dfs(&mut self, c: usize, state: Vec<i32>, budget: &mut u64) -> Result<bool> {
        let l = self.m[0].len();
        if c == l {
            return Ok(true);
        }
        for pi in 0..self.patterns.len() {
            if *budget == 0 {
                return Err(Error::BudgetExceeded("sensitive-set search exceeded its budget".into()));
            }
            *budget -= 1;
            let mut next = state.clone();
            for (p, &t) in self.targets.iter().enumerate() {
                let b = self.patterns[pi][p];
                for r in 0..self.k {
                    next[p * self.k + r] += (self.m[t][c] - self.m[r][c]) * b;
                }
            }
            if !self.alive(c + 1, &next) {
                continue;
            }
            let key = (c + 1, next);
            if self.dead.contains(&key) {
                continue;
            }
            if self.dfs(c + 1, key.1.clone(), budget)? {
                return Ok(true);
            }
            self.dead.insert(key);
        }
        Ok(false)
    }
}

/// Maps on `[d] × [k-1]` for a tree: at `(m, i)`, with `v` the internal
/// node of in-order rank `i`, `g1` is the label of the leaf reached by one
/// right step from `v` followed by left steps, `g2` by one left step
/// followed by right steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeWitness {
    pub g1: Vec<i32>,
    pub g2: Vec<i32>,
}

pub fn tree_witness(shape: &TreeShape, leaf_labels: &[usize], d: usize) -> Result<TreeWitness> {
    crate::reducers::check_bijection(leaf_labels, shape.num_leaves())?;
    let l = shape.num_internal();
    let ranks = shape.inorder_ranks();
    let mut node_of_rank = vec![0; l];
    for (id, &r) in ranks.iter().enumerate() {
        node_of_rank[r] = id;
    }
    let mut g1 = vec![0; d * l];
    let mut g2 = vec![0; d * l];
    for i in 0..l {
        let v = node_of_rank[i];
        let a = leaf_labels[shape.zigzag_leaf(v, true)] as i32;
        let b = leaf_labels[shape.zigzag_leaf(v, false)] as i32;
        for m in 0..d {
            g1[grid_index(m, i, d)] = a;
            g2[grid_index(m, i, d)] = b;
        }
    }
    Ok(TreeWitness { g1, g2 })
}

type Behaviours = HashSet<(u32, u32)>;

/// Checks that the tree composition of `G^{k-1}` N-shatters all of
/// `[d] × [k-1]` under the maps of [`tree_witness`], node `v` reading the
/// grid row of its in-order rank.
///
/// Every subtree is summarized by the set of pairs `(A, B)` of points where
/// the leaf it reaches is `g1` resp. `g2`; this determines the composed
/// function's membership pattern exactly, and a node with classifier `P`
/// (its `+1` points) combines children by `A = (P ∩ A_R) ∪ (P^c ∩ A_L)`.
pub fn tree_witness_check(shape: &TreeShape, d: usize) -> Result<bool> {
    let k = shape.num_leaves();
    let l = k - 1;
    let n = d * l;
    if n > MAX_SHATTER_SET {
        return Err(Error::BudgetExceeded(format!("shattered set of size {n}")));
    }
    let labels: Vec<usize> = (0..k).collect();
    let w = tree_witness(shape, &labels, d)?;
    let g = build_g(d, l, GVariant::Full)?;
    let positives: Vec<u32> = g
        .deduped()
        .functions()
        .iter()
        .map(|f| f.iter().enumerate().fold(0u32, |m, (x, &y)| if y > 0 { m | 1 << x } else { m }))
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut budget = SEARCH_BUDGET;
    let root = behaviours(shape, shape.root(), &positives, &w, full, &mut budget)?;
    let covered: HashSet<u32> = root
        .into_iter()
        .filter(|&(a, b)| a | b == full)
        .map(|(a, _)| a)
        .collect();
    Ok(covered.len() == 1usize << n)
}

fn behaviours(
    shape: &TreeShape,
    idx: usize,
    positives: &[u32],
    w: &TreeWitness,
    full: u32,
    budget: &mut u64,
) -> Result<Behaviours> {
    match shape.node(idx) {
        Node::Leaf { slot } => {
            let y = slot as i32;
            let mask = |g: &[i32]| g.iter().enumerate().fold(0u32, |m, (x, &v)| if v == y { m | 1 << x } else { m });
            Ok(HashSet::from([(mask(&w.g1), mask(&w.g2))]))
        }
        Node::Internal { left, right, .. } => {
            let lb = behaviours(shape, left, positives, w, full, budget)?;
            let rb = behaviours(shape, right, positives, w, full, budget)?;
            let mut out = Behaviours::new();
            for &p in positives {
                let np = full & !p;
                let rp: HashSet<(u32, u32)> = rb.iter().map(|&(a, b)| (a & p, b & p)).collect();
                let lp: HashSet<(u32, u32)> = lb.iter().map(|&(a, b)| (a & np, b & np)).collect();
                let work = (rp.len() * lp.len()) as u64;
                if work > *budget {
                    return Err(Error::BudgetExceeded("tree behaviour sets exceeded the budget".into()));
                }
                *budget -= work;
                for &(ra, rb2) in &rp {
                    for &(la, lb2) in &lp {
                        out.insert((ra | la, rb2 | lb2));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Materialized check used to validate the fast paths on small instances.
#[cfg(test)]
pub(crate) fn n_shattered_by_class(h: &FiniteFunctionClass, set: &[usize], f1: &[i32], f2: &[i32]) -> bool {
    super::n_covers(&h.restrict(set), f1, f2)
}
