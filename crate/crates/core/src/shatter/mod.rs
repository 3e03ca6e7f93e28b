//! Finite hypothesis classes, Natarajan and Graph shattering, and the
//! witness classes used to lower-bound the dimension of code and tree
//! classes.
//!
//! A class is an explicit list of total functions on a domain `0..n` with
//! integer labels. Binary classes use the labels `-1` and `+1`; classes
//! composed with a code or a tree take labels `0..k`.

mod embed;
mod witness;

use std::collections::HashSet;

pub use embed::{embed_f_halfspaces, embed_g_halfspaces, Embedding, EmbeddingReport, DEFAULT_RADIUS, DEFAULT_SLOPE};
pub use witness::{
    build_f, build_g, compose_with_code, compose_with_tree, grid_index, sensitive_witness_check, sensitive_witness,
    tree_witness_check, tree_witness, GVariant, SensitiveWitness, TreeWitness, COMPOSE_BUDGET,
};

use crate::error::{invalid, Error, Result};

/// Largest set whose `2^|S|` subsets are enumerated.
pub const MAX_SHATTER_SET: usize = 20;
/// Largest domain searched by the dimension routines.
pub const MAX_DIMENSION_DOMAIN: usize = 16;
const DIMENSION_WORK_BUDGET: u64 = 2_000_000_000;

/// Explicit list of functions `0..n → Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFunctionClass {
    domain_size: usize,
    functions: Vec<Vec<i32>>,
}

impl FiniteFunctionClass {
    pub fn new(domain_size: usize, functions: Vec<Vec<i32>>) -> Result<Self> {
        if functions.iter().any(|f| f.len() != domain_size) {
            return invalid(format!("every function must be defined on all {domain_size} points"));
        }
        Ok(FiniteFunctionClass {
            domain_size,
            functions,
        })
    }

    /// All maps `0..n → labels`.
    pub fn full(domain_size: usize, labels: &[i32]) -> Result<Self> {
        let count = (labels.len() as f64).powi(domain_size as i32);
        if count > 1e6 {
            return Err(Error::BudgetExceeded(format!("{count} functions in the full class")));
        }
        let mut functions = vec![Vec::new()];
        for _ in 0..domain_size {
            functions = functions
                .into_iter()
                .flat_map(|f| {
                    labels.iter().map(move |&y| {
                        let mut g = f.clone();
                        g.push(y);
                        g
                    })
                })
                .collect();
        }
        Self::new(domain_size, functions)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn functions(&self) -> &[Vec<i32>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Sorted distinct labels used by some function.
    pub fn label_set(&self) -> Vec<i32> {
        let mut labels: Vec<i32> = self.functions.iter().flatten().copied().collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    pub fn is_binary(&self) -> bool {
        self.functions.iter().flatten().all(|&y| y == 1 || y == -1)
    }

    /// Same class with duplicates removed, in sorted order.
    pub fn deduped(&self) -> FiniteFunctionClass {
        let mut functions = self.functions.clone();
        functions.sort_unstable();
        functions.dedup();
        FiniteFunctionClass {
            domain_size: self.domain_size,
            functions,
        }
    }

    /// Distinct restrictions `H|_S`, sorted.
    pub fn restrict(&self, set: &[usize]) -> Vec<Vec<i32>> {
        let mut seen: HashSet<Vec<i32>> = HashSet::new();
        for f in &self.functions {
            seen.insert(set.iter().map(|&x| f[x]).collect());
        }
        let mut out: Vec<Vec<i32>> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    fn check_set(&self, set: &[usize]) -> Result<()> {
        if set.len() > MAX_SHATTER_SET {
            return invalid(format!(
                "set of size {} exceeds the enumeration budget of {MAX_SHATTER_SET}",
                set.len()
            ));
        }
        let mut seen = HashSet::new();
        for &x in set {
            if x >= self.domain_size || !seen.insert(x) {
                return invalid(format!("set must hold distinct points of 0..{}", self.domain_size));
            }
        }
        Ok(())
    }
}

/// A shattered set with its witness maps; `f2` is absent for G-shattering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShatterWitness {
    pub set: Vec<usize>,
    pub f1: Vec<i32>,
    pub f2: Option<Vec<i32>>,
}

/// Largest shattered set size with one shattered set of that size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionReport {
    pub dimension: usize,
    pub witness: Option<ShatterWitness>,
}

fn g_covers(patterns: &[Vec<i32>], f: &[i32]) -> bool {
    let s = f.len();
    let mut seen = vec![false; 1 << s];
    let mut count = 0;
    for g in patterns {
        let mask = g
            .iter()
            .zip(f)
            .enumerate()
            .fold(0usize, |m, (t, (a, b))| if a == b { m | 1 << t } else { m });
        if !seen[mask] {
            seen[mask] = true;
            count += 1;
        }
    }
    count == 1 << s
}

fn n_covers(patterns: &[Vec<i32>], f1: &[i32], f2: &[i32]) -> bool {
    let s = f1.len();
    let mut seen = vec![false; 1 << s];
    let mut count = 0;
    'g: for g in patterns {
        let mut mask = 0usize;
        for t in 0..s {
            if g[t] == f1[t] {
                mask |= 1 << t;
            } else if g[t] != f2[t] {
                continue 'g;
            }
        }
        if !seen[mask] {
            seen[mask] = true;
            count += 1;
        }
    }
    count == 1 << s
}

/// For every `T ⊆ S` some `g ∈ H` equals `f` on `T` and differs from `f`
/// at every point of `S ∖ T`.
pub fn check_g_shatter(h: &FiniteFunctionClass, set: &[usize], f: &[i32]) -> Result<bool> {
    h.check_set(set)?;
    if f.len() != set.len() {
        return invalid("witness must assign a label to every point of the set");
    }
    Ok(g_covers(&h.restrict(set), f))
}

/// For every `T ⊆ S` some `g ∈ H` equals `f1` on `T` and `f2` on `S ∖ T`.
pub fn check_n_shatter(h: &FiniteFunctionClass, set: &[usize], f1: &[i32], f2: &[i32]) -> Result<bool> {
    h.check_set(set)?;
    if f1.len() != set.len() || f2.len() != set.len() {
        return invalid("witnesses must assign a label to every point of the set");
    }
    if f1.iter().zip(f2).any(|(a, b)| a == b) {
        return invalid("the two witnesses must differ at every point");
    }
    Ok(n_covers(&h.restrict(set), f1, f2))
}

/// Lexicographic `s`-subsets of `0..n`.
fn for_each_subset(n: usize, s: usize, mut visit: impl FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        if visit(&idx)? {
            return Ok(true);
        }
        let mut i = s;
        loop {
            if i == 0 {
                return Ok(false);
            }
            i -= 1;
            if idx[i] < n - s + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone, Copy)]
enum Shattering {
    Natarajan,
    Graph,
}

struct Work(u64);

impl Work {
    fn spend(&mut self, amount: usize) -> Result<()> {
        self.0 += amount as u64;
        if self.0 > DIMENSION_WORK_BUDGET {
            return Err(Error::BudgetExceeded("dimension search exceeded its work budget".into()));
        }
        Ok(())
    }
}

/// `f1`, and `f2` for N-shattering.
type Witness = (Vec<i32>, Option<Vec<i32>>);

fn shattered_by(patterns: &[Vec<i32>], kind: Shattering, work: &mut Work) -> Result<Option<Witness>> {
    let s = patterns.first().map_or(0, Vec::len);
    if patterns.len() < 1 << s {
        return Ok(None);
    }
    match kind {
        // T = S forces f ∈ H|_S, so the candidates are exactly H|_S
        Shattering::Graph => {
            for f in patterns {
                work.spend(patterns.len() * s.max(1))?;
                if g_covers(patterns, f) {
                    return Ok(Some((f.clone(), None)));
                }
            }
        }
        // T = S and T = ∅ force f1, f2 ∈ H|_S
        Shattering::Natarajan => {
            for (a, f1) in patterns.iter().enumerate() {
                for f2 in &patterns[a + 1..] {
                    if f1.iter().zip(f2).any(|(x, y)| x == y) {
                        continue;
                    }
                    work.spend(patterns.len() * s.max(1))?;
                    if n_covers(patterns, f1, f2) {
                        return Ok(Some((f1.clone(), Some(f2.clone()))));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn dimension(h: &FiniteFunctionClass, kind: Shattering) -> Result<DimensionReport> {
    let n = h.domain_size();
    if n > MAX_DIMENSION_DOMAIN {
        return invalid(format!("domain of size {n} exceeds the search limit of {MAX_DIMENSION_DOMAIN}"));
    }
    let mut report = DimensionReport {
        dimension: 0,
        witness: None,
    };
    if h.is_empty() {
        return Ok(report);
    }
    let mut work = Work(0);
    // subsets of shattered sets are shattered, so sizes can stop at the first failure
    for s in 1..=n {
        let mut found = None;
        for_each_subset(n, s, |set| {
            let patterns = h.restrict(set);
            work.spend(patterns.len())?;
            if let Some((f1, f2)) = shattered_by(&patterns, kind, &mut work)? {
                found = Some(ShatterWitness {
                    set: set.to_vec(),
                    f1,
                    f2,
                });
                return Ok(true);
            }
            Ok(false)
        })?;
        match found {
            Some(w) => {
                report.dimension = s;
                report.witness = Some(w);
            }
            None => break,
        }
    }
    Ok(report)
}

pub fn natarajan_dimension(h: &FiniteFunctionClass) -> Result<DimensionReport> {
    dimension(h, Shattering::Natarajan)
}

pub fn graph_dimension(h: &FiniteFunctionClass) -> Result<DimensionReport> {
    dimension(h, Shattering::Graph)
}

/// VC dimension of a class with at most two labels.
pub fn vc_dimension(h: &FiniteFunctionClass) -> Result<DimensionReport> {
    let labels = h.label_set();
    if labels.len() > 2 {
        return invalid(format!("VC dimension needs at most two labels, class uses {}", labels.len()));
    }
    let n = h.domain_size();
    if n > MAX_DIMENSION_DOMAIN {
        return invalid(format!("domain of size {n} exceeds the search limit of {MAX_DIMENSION_DOMAIN}"));
    }
    let mut report = DimensionReport {
        dimension: 0,
        witness: None,
    };
    if labels.len() < 2 {
        return Ok(report);
    }
    for s in 1..=n {
        let mut found = None;
        for_each_subset(n, s, |set| {
            if h.restrict(set).len() == 1 << s {
                found = Some(set.to_vec());
                return Ok(true);
            }
            Ok(false)
        })?;
        match found {
            Some(set) => {
                report.dimension = s;
                report.witness = Some(ShatterWitness {
                    f1: vec![labels[1]; set.len()],
                    f2: Some(vec![labels[0]; set.len()]),
                    set,
                });
            }
            None => break,
        }
    }
    Ok(report)
}
