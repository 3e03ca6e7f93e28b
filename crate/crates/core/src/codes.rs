//! Error-correcting output code matrices.
//!
//! A [`CodeMatrix`] is a `k × l` real matrix together with a bijection from
//! row indices to class labels. Decoding a vector of `l` binary predictions
//! picks the row with the largest correlation and reports its label.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::Label;

/// A vector in `{-1, +1}^l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector(Vec<i8>);

impl BinaryVector {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return invalid(format!("binary vector entry {b} is not ±1"));
        }
        Ok(BinaryVector(bits))
    }

    pub fn filled(len: usize, value: i8) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// `u ⊕ e_j`: the same vector with coordinate `j` negated.
    pub fn flipped(&self, j: usize) -> BinaryVector {
        let mut bits = self.0.clone();
        bits[j] = -bits[j];
        BinaryVector(bits)
    }

    pub fn negated(&self) -> BinaryVector {
        BinaryVector(self.0.iter().map(|b| -b).collect())
    }
}

impl std::ops::Index<usize> for BinaryVector {
    type Output = i8;
    fn index(&self, j: usize) -> &i8 {
        &self.0[j]
    }
}

/// Number of coordinates in which `u` and `v` disagree.
pub fn hamming_distance(u: &BinaryVector, v: &BinaryVector) -> Result<usize> {
    if u.len() != v.len() {
        return invalid(format!("length mismatch: {} vs {}", u.len(), v.len()));
    }
    Ok(hamming(u.as_slice(), v.as_slice()))
}

fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// A `k × l` code matrix and its row → label bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    k: usize,
    l: usize,
    entries: Vec<f64>,
    label_map: Vec<Label>,
    // all entries in {-1, 0, +1}: scores are computed with integers
    ternary: bool,
}

impl CodeMatrix {
    /// Builds a code from its rows with the identity label map.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        Self::with_label_map(rows, (0..k).collect())
    }

    pub fn with_label_map(rows: Vec<Vec<f64>>, label_map: Vec<Label>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return invalid(format!("a code needs k >= 2 rows, got {k}"));
        }
        let l = rows[0].len();
        if l == 0 {
            return invalid("a code needs at least one column");
        }
        if rows.iter().any(|r| r.len() != l) {
            return invalid("code rows have different lengths");
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("code entries must be finite");
        }
        check_bijection(&label_map, k)?;
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        let ternary = entries.iter().all(|&v| v == 0.0 || v == 1.0 || v == -1.0);
        Ok(CodeMatrix {
            k,
            l,
            entries,
            label_map,
            ternary,
        })
    }

    /// Same matrix, different row → label bijection.
    pub fn relabeled(&self, label_map: Vec<Label>) -> Result<Self> {
        check_bijection(&label_map, self.k)?;
        Ok(CodeMatrix {
            label_map,
            ..self.clone()
        })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn code_length(&self) -> usize {
        self.l
    }

    pub fn label_map(&self) -> &[Label] {
        &self.label_map
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.l + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.l..(i + 1) * self.l]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.l)
    }

    /// Row index `i` with `λ(i) = label`.
    pub fn row_of_label(&self, label: Label) -> Option<usize> {
        self.label_map.iter().position(|&y| y == label)
    }

    /// True when every entry is `±1`.
    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Row index of the maximal score `Σ_j M_ij u_j`, smallest index on ties.
    pub fn decode_row(&self, u: &[i8]) -> Result<usize> {
        if u.len() != self.l {
            return invalid(format!(
                "decode: vector length {} does not match code length {}",
                u.len(),
                self.l
            ));
        }
        Ok(self.decode_row_unchecked(u))
    }

    pub(crate) fn decode_row_unchecked(&self, u: &[i8]) -> usize {
        if self.ternary {
            let mut best = (0usize, i64::MIN);
            for (i, row) in self.rows().enumerate() {
                let s: i64 = row.iter().zip(u).map(|(&m, &b)| m as i64 * b as i64).sum();
                if s > best.1 {
                    best = (i, s);
                }
            }
            best.0
        } else {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (i, row) in self.rows().enumerate() {
                let s: f64 = row.iter().zip(u).map(|(&m, &b)| m * b as f64).sum();
                if s > best.1 {
                    best = (i, s);
                }
            }
            best.0
        }
    }

    /// `M̃(u) = λ(argmax_i Σ_j M_ij u_j)`.
    pub fn decode(&self, u: &BinaryVector) -> Result<Label> {
        Ok(self.label_map[self.decode_row(u.as_slice())?])
    }

    pub(crate) fn decode_unchecked(&self, u: &[i8]) -> Label {
        self.label_map[self.decode_row_unchecked(u)]
    }

    fn binary_rows(&self) -> Result<Vec<&[f64]>> {
        if !self.is_binary() {
            return invalid("distance operations require a ±1 code");
        }
        Ok(self.rows().collect())
    }

    /// `min_{j≠i} Δ_h(M[i], M[j])` for every row `i`.
    pub fn nearest_row_distances(&self) -> Result<Vec<usize>> {
        let rows = self.binary_rows()?;
        Ok((0..self.k)
            .map(|i| {
                (0..self.k)
                    .filter(|&j| j != i)
                    .map(|j| hamming(rows[i], rows[j]))
                    .min()
                    .expect("k >= 2")
            })
            .collect())
    }

    /// `δ(M)`: the minimal Hamming distance between two rows.
    pub fn code_distance(&self) -> Result<usize> {
        Ok(self
            .nearest_row_distances()?
            .into_iter()
            .min()
            .expect("k >= 2"))
    }

    /// `Δ(M) = max_i min_{j≠i} Δ_h(M[i], M[j])`.
    pub fn max_min_distance(&self) -> Result<usize> {
        Ok(self
            .nearest_row_distances()?
            .into_iter()
            .max()
            .expect("k >= 2"))
    }

    /// Coordinates `j` whose flip changes the decoded label.
    pub fn sensitivity(&self, u: &BinaryVector) -> Result<Sensitivity> {
        let base = self.decode(u)?;
        let mut bits = u.as_slice().to_vec();
        let mut coords = Vec::new();
        for j in 0..self.l {
            bits[j] = -bits[j];
            if self.decode_unchecked(&bits) != base {
                coords.push(j);
            }
            bits[j] = -bits[j];
        }
        Ok(Sensitivity {
            q: coords.len(),
            coords,
        })
    }

    /// Builds a vector that is at least `⌈Δ(M)/2⌉`-sensitive.
    ///
    /// Takes the first row `i1` whose nearest neighbour is at distance
    /// `Δ(M)`, the first such neighbour `i2`, and splits the coordinates
    /// where they differ: the first `⌈Δ/2⌉` of them follow the row with the
    /// smaller index, the rest follow the other row. Coordinates where the
    /// rows agree keep the common value.
    pub fn sensitive_vector(&self) -> Result<BinaryVector> {
        let nearest = self.nearest_row_distances()?;
        let delta = *nearest.iter().max().expect("k >= 2");
        if delta == 0 {
            return Err(Error::NoSensitiveGuarantee);
        }
        let i1 = nearest.iter().position(|&d| d == delta).expect("max exists");
        let r1 = self.row(i1);
        let i2 = (0..self.k)
            .find(|&j| j != i1 && hamming(r1, self.row(j)) == delta)
            .expect("nearest row exists");
        let (first, second) = if i1 < i2 { (i1, i2) } else { (i2, i1) };
        let half = delta.div_ceil(2);

        let mut bits: Vec<i8> = r1.iter().map(|&v| v as i8).collect();
        let differing = (0..self.l).filter(|&j| self.entry(i1, j) != self.entry(i2, j));
        for (t, j) in differing.enumerate() {
            let src = if t < half { first } else { second };
            bits[j] = self.entry(src, j) as i8;
        }
        Ok(BinaryVector(bits))
    }

    /// Plain-text form: `k l`, then `k` rows of entries, then the label map.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|s| !s.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty code file".into()))?;
        let dims = parse_numbers::<usize>(header)?;
        let [k, l] = dims[..] else {
            return Err(Error::Parse(format!("code header must be `k l`, got `{header}`")));
        };
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing code row {i}")))?;
            let row = parse_numbers::<f64>(line)?;
            if row.len() != l {
                return Err(Error::Parse(format!(
                    "code row {i} has {} entries, expected {l}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        let labels = match lines.next() {
            Some(line) => parse_numbers::<usize>(line)?,
            None => return Err(Error::Parse("missing label map line".into())),
        };
        Self::with_label_map(rows, labels)
    }
}

impl fmt::Display for CodeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.k, self.l)?;
        for row in self.rows() {
            writeln!(f, "{}", join(row))?;
        }
        writeln!(f, "{}", join(&self.label_map))
    }
}

pub(crate) fn join<T: fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn parse_numbers<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::Parse(format!("bad number `{tok}`")))
        })
        .collect()
}

fn check_bijection(label_map: &[Label], k: usize) -> Result<()> {
    if label_map.len() != k {
        return invalid(format!(
            "label map has {} entries, expected {k}",
            label_map.len()
        ));
    }
    let mut seen = vec![false; k];
    for &y in label_map {
        if y >= k || seen[y] {
            return invalid(format!("label map is not a bijection on 0..{k}"));
        }
        seen[y] = true;
    }
    Ok(())
}

/// Result of [`CodeMatrix::sensitivity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sensitivity {
    pub q: usize,
    pub coords: Vec<usize>,
}

/// One-vs-all: `+1` on the diagonal, `-1` elsewhere.
pub fn ova_code(k: usize) -> Result<CodeMatrix> {
    if k < 2 {
        return invalid(format!("one-vs-all needs k >= 2, got {k}"));
    }
    let rows = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { -1.0 }).collect())
        .collect();
    CodeMatrix::from_rows(rows)
}

/// Column order of [`ap_code`]: pairs `(i, j)`, `i < j`, lexicographic.
pub fn ap_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect()
}

/// All-pairs: column `(i, j)` holds `-1` in row `i`, `+1` in row `j`.
pub fn ap_code(k: usize) -> Result<CodeMatrix> {
    if k < 2 {
        return invalid(format!("all-pairs needs k >= 2, got {k}"));
    }
    let pairs = ap_pairs(k);
    let rows = (0..k)
        .map(|n| {
            pairs
                .iter()
                .map(|&(i, j)| {
                    if n == i {
                        -1.0
                    } else if n == j {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    CodeMatrix::from_rows(rows)
}

/// Flags for [`random_code_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomCodeOptions {
    /// Resample until no two rows coincide.
    pub distinct_rows: bool,
    /// Draw a uniformly random row → label bijection.
    pub random_labels: bool,
}

const MAX_RESAMPLES: usize = 10_000;

/// Uniform `±1` code, deterministic in `seed`, identity label map.
pub fn random_code(k: usize, l: usize, seed: u64) -> Result<CodeMatrix> {
    random_code_with(k, l, seed, RandomCodeOptions::default())
}

pub fn random_code_with(
    k: usize,
    l: usize,
    seed: u64,
    opts: RandomCodeOptions,
) -> Result<CodeMatrix> {
    if k < 2 || l < 1 {
        return invalid(format!("random code needs k >= 2 and l >= 1, got k={k} l={l}"));
    }
    if opts.distinct_rows && l < 64 && (1u64 << l) < k as u64 {
        return invalid(format!("{k} distinct rows do not exist in {{±1}}^{l}"));
    }
    let mut rng = crate::rng(seed);
    let mut attempt = 0;
    let rows = loop {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..l)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        if !opts.distinct_rows || all_distinct(&rows) {
            break rows;
        }
        attempt += 1;
        if attempt >= MAX_RESAMPLES {
            return Err(Error::BudgetExceeded(format!(
                "no code with distinct rows after {MAX_RESAMPLES} draws"
            )));
        }
    };
    let mut labels: Vec<Label> = (0..k).collect();
    if opts.random_labels {
        labels.shuffle(&mut rng);
    }
    CodeMatrix::with_label_map(rows, labels)
}

fn all_distinct(rows: &[Vec<f64>]) -> bool {
    (0..rows.len()).all(|i| (i + 1..rows.len()).all(|j| rows[i] != rows[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(bits: &[i8]) -> BinaryVector {
        BinaryVector::new(bits.to_vec()).unwrap()
    }

    fn code(rows: &[&[f64]]) -> CodeMatrix {
        CodeMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn ova_small() {
        let m = ova_code(2).unwrap();
        assert_eq!(m.row(0), &[1.0, -1.0]);
        assert_eq!(m.row(1), &[-1.0, 1.0]);
        let m = ova_code(3).unwrap();
        assert_eq!(m.row(2), &[-1.0, -1.0, 1.0]);
        for k in 2..9 {
            assert_eq!(ova_code(k).unwrap().code_distance().unwrap(), 2);
        }
        assert!(ova_code(1).is_err());
    }

    #[test]
    fn ap_small() {
        let m = ap_code(2).unwrap();
        assert_eq!(m.code_length(), 1);
        assert_eq!(m.row(0), &[-1.0]);
        assert_eq!(m.row(1), &[1.0]);
        let m = ap_code(3).unwrap();
        assert_eq!(m.row(0), &[-1.0, -1.0, 0.0]);
        assert_eq!(m.row(1), &[1.0, 0.0, -1.0]);
        assert_eq!(m.row(2), &[0.0, 1.0, 1.0]);
        for k in 2..8 {
            let m = ap_code(k).unwrap();
            assert_eq!(m.code_length(), k * (k - 1) / 2);
            for j in 0..m.code_length() {
                let col: Vec<f64> = (0..k).map(|i| m.entry(i, j)).collect();
                assert_eq!(col.iter().filter(|&&v| v == -1.0).count(), 1);
                assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
                assert_eq!(col.iter().sum::<f64>(), 0.0);
            }
        }
        assert!(m_err(ap_code(0)));
    }

    fn m_err(r: Result<CodeMatrix>) -> bool {
        matches!(r, Err(Error::InvalidArgument(_)))
    }

    #[test]
    fn decode_examples() {
        let m = ova_code(3).unwrap();
        assert_eq!(m.decode(&bv(&[1, -1, -1])).unwrap(), 0);
        // all scores equal k-2: smallest row wins
        assert_eq!(m.decode(&bv(&[-1, -1, -1])).unwrap(), 0);
        assert_eq!(m.decode(&bv(&[-1, -1, 1])).unwrap(), 2);
        assert!(m.decode(&bv(&[1, 1])).is_err());
    }

    #[test]
    fn decode_applies_label_map() {
        let m = ova_code(3).unwrap().relabeled(vec![2, 0, 1]).unwrap();
        assert_eq!(m.decode(&bv(&[1, -1, -1])).unwrap(), 2);
        assert_eq!(m.decode(&bv(&[-1, 1, -1])).unwrap(), 0);
        assert_eq!(m.row_of_label(1), Some(2));
        assert!(ova_code(3).unwrap().relabeled(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn decode_real_valued_ties() {
        let m = code(&[&[0.5, 0.5], &[1.0, 0.0]]);
        // scores 1.0 and 1.0
        assert_eq!(m.decode(&bv(&[1, 1])).unwrap(), 0);
        assert_eq!(m.decode(&bv(&[1, -1])).unwrap(), 1);
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&bv(&[1, 1, -1]), &bv(&[1, -1, 1])).unwrap(), 2);
        let u = bv(&[1, -1, 1, 1]);
        assert_eq!(hamming_distance(&u, &u).unwrap(), 0);
        assert_eq!(hamming_distance(&u, &u.negated()).unwrap(), 4);
        assert!(hamming_distance(&u, &bv(&[1])).is_err());
    }

    #[test]
    fn distances() {
        let m = code(&[&[1.0, 1.0, 1.0, 1.0], &[-1.0, -1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0, -1.0]]);
        assert_eq!(m.code_distance().unwrap(), 2);
        assert_eq!(m.max_min_distance().unwrap(), 2);
        assert_eq!(m.nearest_row_distances().unwrap(), vec![2, 2, 2]);

        let dup = code(&[&[1.0, -1.0], &[1.0, -1.0]]);
        assert_eq!(dup.code_distance().unwrap(), 0);
        assert_eq!(dup.max_min_distance().unwrap(), 0);
        assert!(matches!(dup.sensitive_vector(), Err(Error::NoSensitiveGuarantee)));

        assert!(ap_code(3).unwrap().code_distance().is_err());
    }

    #[test]
    fn sensitivity_examples() {
        for k in 3..10 {
            let m = ova_code(k).unwrap();
            let s = m.sensitivity(&BinaryVector::filled(k, -1).unwrap()).unwrap();
            assert_eq!(s.q, k - 1);
            assert_eq!(s.coords, (1..k).collect::<Vec<_>>());
        }
        let m = code(&[&[1.0], &[-1.0]]);
        assert_eq!(m.sensitivity(&bv(&[1])).unwrap().q, 1);
    }

    #[test]
    fn sensitive_vector_examples() {
        let m = code(&[&[1.0, 1.0, 1.0, 1.0], &[-1.0, -1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0, -1.0]]);
        let u = m.sensitive_vector().unwrap();
        // rows 0 and 1 differ in coordinates 0 and 1; the first follows row 0
        assert_eq!(u.as_slice(), &[1, -1, 1, 1]);
        assert!(m.sensitivity(&u).unwrap().q >= 1);

        let m = ova_code(3).unwrap();
        let u = m.sensitive_vector().unwrap();
        assert!(m.sensitivity(&u).unwrap().q >= 1);
    }

    #[test]
    fn random_code_is_deterministic() {
        let a = random_code(5, 12, 42).unwrap();
        let b = random_code(5, 12, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_code(5, 12, 43).unwrap());
        assert!(random_code(4, 64, 1).unwrap().code_distance().unwrap() > 0);
    }

    #[test]
    fn random_code_balance() {
        let m = random_code(100, 100, 7).unwrap();
        let plus = m.rows().flatten().filter(|&&v| v == 1.0).count() as f64 / 1e4;
        assert!((plus - 0.5).abs() < 0.02, "fraction of +1 entries {plus}");
    }

    #[test]
    fn random_code_options() {
        let opts = RandomCodeOptions {
            distinct_rows: true,
            random_labels: true,
        };
        for seed in 0..20 {
            let m = random_code_with(8, 3, seed, opts).unwrap();
            assert!(m.code_distance().unwrap() >= 1);
        }
        assert!(random_code_with(9, 3, 0, opts).is_err());
        let shuffled = (0..20).any(|s| {
            random_code_with(6, 4, s, opts).unwrap().label_map() != [0, 1, 2, 3, 4, 5]
        });
        assert!(shuffled);
    }

    #[test]
    fn text_round_trip() {
        let m = ap_code(4).unwrap().relabeled(vec![3, 1, 0, 2]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("4 6\n-1 -1 -1 0 0 0\n"));
        assert!(text.ends_with("3 1 0 2\n"));
        assert_eq!(CodeMatrix::parse(&text).unwrap(), m);
        assert!(CodeMatrix::parse("2 2\n1 1\n").is_err());
        assert!(CodeMatrix::parse("2 2\n1 1\n1 x\n0 1\n").is_err());
    }
}
