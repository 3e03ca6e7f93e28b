//! Seeded experiments that bracket approximation errors of the reductions.
//!
//! Certified values come from the exact halfspace oracle (or a consistent
//! halfspace, which certifies zero) and are lower bounds; trained values
//! are errors of concrete predictors and are upper-bound witnesses. Trial
//! `t` uses the seed `seed + t`, and trials are merged in index order so
//! the output does not depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom as _;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codes::{random_code_with, CodeMatrix, RandomCodeOptions};
use crate::error::{invalid, Error, Result};
use crate::halfspace::{exact_best_error, train_realizable, BinarySample, DEFAULT_REALIZABLE_BUDGET};
use crate::reducers::{
    msvm_to_ap, multiclass_error, train_ap, train_ecoc, train_msvm, train_ova, train_tree, tree_to_msvm,
    LearnerConfig, Model, MsvmMode, MulticlassSample, TreeShape, WeightMatrix,
};
use crate::synth::{
    apply_label_map, random_label_map, DistributionConfig, Kind, LabelMap, LabelRule, SyntheticDistribution,
};
use crate::Label;

/// Offset separating the seeds of test draws from training draws.
const TEST_SEED_OFFSET: u64 = 1 << 32;
const REFERENCE_SEED_OFFSET: u64 = 2 << 32;
/// Regime surrogate: `k ≥ REGIME_FACTOR · (d + 1)` (times `l` for codes).
pub const REGIME_FACTOR: usize = 4;
/// Class-mass bound `p_i ≤ MASS_FACTOR / k`.
pub const MASS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    SplitLabels,
    TreeRoot,
    CodeColumns,
    ShowcaseTable,
    ContainmentCheck,
    ErrorCurve,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::SplitLabels => "split-labels",
            ExperimentId::TreeRoot => "tree-root",
            ExperimentId::CodeColumns => "code-columns",
            ExperimentId::ShowcaseTable => "showcase-table",
            ExperimentId::ContainmentCheck => "containment-check",
            ExperimentId::ErrorCurve => "error-curve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Iid,
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    #[default]
    Balanced,
    Chain,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Msvm,
    Ova,
    Ap,
    Tree,
    Ecoc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Msvm, Method::Ova, Method::Ap, Method::Tree, Method::Ecoc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Msvm => "msvm",
            Method::Ova => "ova",
            Method::Ap => "ap",
            Method::Tree => "tree",
            Method::Ecoc => "ecoc",
        }
    }
}

fn default_trials() -> usize {
    20
}
fn default_mu() -> f64 {
    0.5
}
fn default_nu() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_train() -> usize {
    2000
}
fn default_test() -> usize {
    10_000
}

/// JSON experiment description. Unset fields take per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub distribution: Option<DistributionConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub rule: RuleKind,
    #[serde(default = "default_train")]
    pub train_size: usize,
    #[serde(default = "default_test")]
    pub test_size: usize,
    #[serde(default)]
    pub tree_shape: ShapeKind,
    #[serde(default)]
    pub code_length: Option<usize>,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId) -> Self {
        ExperimentConfig {
            experiment,
            distribution: None,
            trials: default_trials(),
            seed: 0,
            mu: default_mu(),
            nu: default_nu(),
            epsilon: default_epsilon(),
            rule: RuleKind::Exact,
            train_size: default_train(),
            test_size: default_test(),
            tree_shape: ShapeKind::Balanced,
            code_length: None,
            methods: None,
            sizes: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.train_size == 0 || self.test_size == 0 {
            return invalid("sample sizes must be at least 1");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return invalid("nu must be a non-negative number");
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.contains(&0) {
                return invalid("sizes must be a non-empty list of positive counts");
            }
        }
        Ok(())
    }

    fn distribution_or(&self, fallback: impl FnOnce() -> Result<SyntheticDistribution>) -> Result<SyntheticDistribution> {
        match &self.distribution {
            Some(d) => d.build(),
            None => fallback(),
        }
    }

    fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }

    fn label_rule(&self) -> LabelRule {
        match self.rule {
            RuleKind::Iid => LabelRule::Iid { mu: self.mu },
            RuleKind::Exact => LabelRule::Exact { mu: self.mu },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub metrics: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub statistic: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: ExperimentId,
    /// One record per trial, in trial order.
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl ExperimentResult {
    fn new(experiment: ExperimentId, records: Vec<TrialRecord>, warnings: Vec<String>, notes: Vec<String>) -> Self {
        let summary = summarize(&records);
        ExperimentResult {
            experiment,
            records,
            summary,
            warnings,
            notes,
        }
    }

    /// Values of `metric` in trial order.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.metrics.iter().find(|(m, _)| m == metric).map(|&(_, v)| v))
            .collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.stat(metric, "mean")
    }

    pub fn stat(&self, metric: &str, statistic: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.metric == metric && s.statistic == statistic)
            .map(|s| s.value)
    }

    pub fn records_csv(&self) -> String {
        let mut s = String::from("experiment,trial,metric,value\n");
        for r in &self.records {
            for (m, v) in &r.metrics {
                let _ = writeln!(s, "{},{},{},{}", self.experiment.name(), r.trial, m, v);
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("experiment,metric,statistic,value\n");
        for row in &self.summary {
            let _ = writeln!(s, "{},{},{},{}", self.experiment.name(), row.metric, row.statistic, row.value);
        }
        s
    }

    /// Mean test error against training-set size, one polyline per method.
    pub fn curve_svg(&self) -> Option<String> {
        if self.experiment != ExperimentId::ErrorCurve {
            return None;
        }
        let mut series: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
        for row in self.summary.iter().filter(|r| r.statistic == "mean") {
            let Some((method, m)) = row.metric.split_once("/m=") else { continue };
            let Ok(m) = m.parse::<usize>() else { continue };
            match series.iter_mut().find(|(name, _)| name == method) {
                Some((_, pts)) => pts.push((m, row.value)),
                None => series.push((method.to_string(), vec![(m, row.value)])),
            }
        }
        Some(render_svg(&series))
    }

    /// Writes `records.csv`, `summary.csv`, `notes.txt` and, for error
    /// curves, `curve.svg` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        put("records.csv", self.records_csv())?;
        put("summary.csv", self.summary_csv())?;
        let mut notes = String::new();
        for w in &self.warnings {
            let _ = writeln!(notes, "warning: {w}");
        }
        for n in &self.notes {
            let _ = writeln!(notes, "note: {n}");
        }
        put("notes.txt", notes)?;
        if let Some(svg) = self.curve_svg() {
            put("curve.svg", svg)?;
        }
        Ok(written)
    }
}

fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        for (m, _) in &r.metrics {
            if !names.contains(&m.as_str()) {
                names.push(m);
            }
        }
    }
    let mut rows = Vec::new();
    for name in names {
        let mut v: Vec<f64> = records
            .iter()
            .filter_map(|r| r.metrics.iter().find(|(m, _)| m == name).map(|&(_, v)| v))
            .collect();
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let stats = [
            ("mean", mean),
            ("min", v[0]),
            ("q10", quantile(&v, 0.1)),
            ("median", quantile(&v, 0.5)),
            ("q90", quantile(&v, 0.9)),
            ("max", v[v.len() - 1]),
        ];
        rows.extend(stats.into_iter().map(|(statistic, value)| SummaryRow {
            metric: name.to_string(),
            statistic,
            value,
        }));
    }
    rows
}

/// Nearest-rank quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn render_svg(series: &[(String, Vec<(usize, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let ms: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|&(m, _)| (m as f64).ln())).collect();
    let lo = ms.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |m: usize| PAD + ((m as f64).ln() - lo) / span * (W - 2.0 * PAD);
    let y = |e: f64| H - PAD - e.clamp(0.0, 1.0) * (H - 2.0 * PAD);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>",
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
    for e in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{e}</text>", PAD - 6.0, y(e) + 4.0);
    }
    if let Some((_, pts)) = series.first() {
        for &(m, _) in pts {
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{m}</text>", x(m), H - PAD + 16.0);
        }
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">training examples</text>", W / 2.0, H - 10.0);
    let _ = writeln!(s, "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">test error</text>", H / 2.0, H / 2.0);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(m, e)| format!("{:.2},{:.2}", x(m), y(e))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>", coords.join(" "));
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{ly}\" fill=\"{color}\">{name}</text>", W - PAD - 40.0);
    }
    s.push_str("</svg>\n");
    s
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::SplitLabels => split_labels_experiment(cfg),
        ExperimentId::TreeRoot => tree_root_experiment(cfg),
        ExperimentId::CodeColumns => code_columns_experiment(cfg),
        ExperimentId::ShowcaseTable => showcase_table(cfg),
        ExperimentId::ContainmentCheck => containment_check(cfg),
        ExperimentId::ErrorCurve => error_curve(cfg),
    }
}

fn run_trials<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, u64) -> Result<Vec<(String, f64)>> + Sync + Send,
{
    crate::par::map_indexed(cfg.trials, |t| {
        f(t, cfg.trial_seed(t)).map(|metrics| TrialRecord { trial: t, metrics })
    })
    .into_iter()
    .collect()
}

/// The distribution itself when it is uniform on finitely many atoms,
/// otherwise `n` draws.
pub fn population(dist: &SyntheticDistribution, n: usize, seed: u64) -> Result<(MulticlassSample, bool)> {
    if let Some(atoms) = dist.support() {
        let m = atoms[0].2;
        if atoms.iter().all(|a| (a.2 - m).abs() <= 1e-12) {
            let (points, labels): (Vec<_>, Vec<_>) = atoms.into_iter().map(|(x, y, _)| (x, y)).unzip();
            return Ok((MulticlassSample::new(points, labels, dist.num_classes())?, true));
        }
    }
    Ok((dist.sample(n, seed)?, false))
}

/// Lower bound on the best halfspace error: exact for `d ≤ 2`, and `0`
/// certified by a consistent halfspace otherwise.
pub fn certify_best_error(sample: &BinarySample) -> Result<f64> {
    if sample.dim() <= 2 {
        return Ok(exact_best_error(sample)?.error);
    }
    if !sample.is_two_sided() {
        return Ok(0.0);
    }
    match train_realizable(sample, DEFAULT_REALIZABLE_BUDGET) {
        Ok(_) => Ok(0.0),
        Err(_) => Err(Error::BudgetExceeded(format!(
            "no exact oracle in dimension {} and no consistent halfspace found",
            sample.dim()
        ))),
    }
}

fn regime_warnings(dist: &SyntheticDistribution, threshold: usize, what: &str) -> Vec<String> {
    let k = dist.num_classes();
    let mut w = Vec::new();
    if k < threshold {
        w.push(format!("regime violated: k = {k} < {threshold} ({what}); no lower bound is claimed"));
    }
    if dist.max_class_mass() > MASS_FACTOR / k as f64 + 1e-12 {
        w.push(format!(
            "regime violated: a class has mass {} > {MASS_FACTOR}/k",
            dist.max_class_mass()
        ));
    }
    w
}

fn surrogate_note(cfg: &ExperimentConfig) -> String {
    format!(
        "thresholds are desk-scale surrogates: a trial meets the bound when its certified error is at least mu - nu = {}",
        cfg.mu - cfg.nu
    )
}

fn meets(value: f64, bound: f64) -> f64 {
    (value >= bound - 1e-12) as u8 as f64
}

pub fn split_labels_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dist = cfg.distribution_or(|| SyntheticDistribution::circle_points(512))?;
    let d = dist.dim();
    if d > 2 && dist.kind() != Kind::Simplex {
        return invalid("split-labels certifies with the exact oracle and needs d <= 2");
    }
    let k = dist.num_classes();
    let rule = cfg.label_rule();
    let bound = cfg.mu - cfg.nu;
    let warnings = regime_warnings(&dist, REGIME_FACTOR * (d + 1), "4(d+1)");
    let records = run_trials(cfg, |_, seed| {
        let phi = random_label_map(k, rule, seed)?;
        let (pop, _) = population(&dist, cfg.train_size, seed.wrapping_add(TEST_SEED_OFFSET))?;
        let bin = apply_label_map(&pop, &phi)?;
        let certified = certify_best_error(&bin)?;
        let negative_mass = bin.labels().iter().filter(|&&y| y < 0).count() as f64 / bin.len() as f64;
        Ok(vec![
            ("certified_error".into(), certified),
            ("negative_mass".into(), negative_mass),
            ("meets_bound".into(), meets(certified, bound)),
        ])
    })?;
    Ok(ExperimentResult::new(cfg.experiment, records, warnings, vec![surrogate_note(cfg)]))
}

/// Number of label maps on `simplex(d)` and how many of them are
/// certified to have zero best-halfspace error. All `2^(d+1)` maps are tried.
pub fn simplex_tightness(d: usize) -> Result<(usize, usize)> {
    let dist = SyntheticDistribution::simplex(d)?;
    let (pop, _) = population(&dist, 1, 0)?;
    let k = d + 1;
    let mut zero = 0;
    for bits in 0..1usize << k {
        let phi = LabelMap::new((0..k).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())?;
        let bin = apply_label_map(&pop, &phi)?;
        if certify_best_error(&bin)? == 0.0 {
            zero += 1;
        }
    }
    Ok((1 << k, zero))
}

fn shape_for(cfg: &ExperimentConfig, k: usize) -> Result<TreeShape> {
    match cfg.tree_shape {
        ShapeKind::Balanced => TreeShape::balanced(k),
        ShapeKind::Chain => TreeShape::chain(k),
        ShapeKind::Random => TreeShape::random(k, cfg.seed),
    }
}

fn random_permutation(k: usize, seed: u64) -> Vec<Label> {
    let mut p: Vec<Label> = (0..k).collect();
    p.shuffle(&mut crate::rng(seed));
    p
}

/// Label map sending the labels of the root's left subtree to `-1`.
pub fn root_label_map(shape: &TreeShape, leaf_labels: &[Label]) -> Result<LabelMap> {
    let (left, _) = shape.children(0);
    let mut signs = vec![1i8; leaf_labels.len()];
    for slot in shape.leaves_under(left) {
        signs[leaf_labels[slot]] = -1;
    }
    LabelMap::new(signs)
}

fn fit_msvm(sample: &MulticlassSample, learner: &LearnerConfig) -> Result<WeightMatrix> {
    match train_msvm(sample, MsvmMode::Realizable, learner) {
        Err(Error::NotRealizable { .. }) => train_msvm(sample, MsvmMode::Approximate, learner),
        other => other,
    }
}

pub fn tree_root_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dist = cfg.distribution_or(|| SyntheticDistribution::circle_points(128))?;
    let d = dist.dim();
    if d > 2 {
        return invalid("tree-root certifies with the exact oracle and needs d <= 2");
    }
    let k = dist.num_classes();
    let shape = shape_for(cfg, k)?;
    let (left, right) = shape.children(0);
    let (kl, kr) = (shape.leaves_under(left).len(), shape.leaves_under(right).len());
    let mu = kl.min(kr) as f64 / k as f64;
    let bound = mu - cfg.nu;
    let mut warnings = regime_warnings(&dist, REGIME_FACTOR * (d + 1), "4(d+1)");
    let mut notes = vec![format!(
        "root splits {kl} | {kr} leaves, mu = {mu}; thresholds are desk-scale surrogates: a trial meets the bound when its certified root error is at least mu - nu = {bound}"
    )];
    if bound <= 0.0 {
        notes.push("mu - nu <= 0: the bound is vacuous for this root split".into());
    }
    let records = run_trials(cfg, |_, seed| {
        let labels = random_permutation(k, seed);
        let phi = root_label_map(&shape, &labels)?;
        let (train, exact) = population(&dist, cfg.train_size, seed.wrapping_add(TEST_SEED_OFFSET))?;
        let certified = certify_best_error(&apply_label_map(&train, &phi)?)?;
        let tree = train_tree(&shape, &labels, &train, &LearnerConfig::with_seed(seed))?;
        let trained = multiclass_error(&Model::Tree(tree), &train)?;
        let mut m = vec![
            ("certified_root_error".to_string(), certified),
            ("meets_bound".to_string(), meets(certified, bound)),
            ("trained_tree_error".to_string(), trained),
        ];
        if exact {
            m.push(("bracket_ok".to_string(), (certified <= trained + 1e-12) as u8 as f64));
        }
        Ok(m)
    })?;
    for r in &records {
        if r.metrics.iter().any(|(m, v)| m == "bracket_ok" && *v == 0.0) {
            warnings.push(format!("trial {}: certified error exceeds the trained error", r.trial));
        }
    }
    Ok(ExperimentResult::new(cfg.experiment, records, warnings, notes))
}

fn default_code_length(k: usize) -> usize {
    (usize::BITS - (k - 1).leading_zeros()) as usize + 1
}

fn code_for(k: usize, l: usize, seed: u64, random_labels: bool) -> Result<CodeMatrix> {
    // resampling for distinct rows is cheap only well above the birthday bound
    let distinct_rows = l >= 63 || (1u64 << l) >= (k * k) as u64;
    random_code_with(
        k,
        l,
        seed,
        RandomCodeOptions {
            distinct_rows,
            random_labels,
        },
    )
}

/// `φ_j(y) = M[λ⁻¹(y), j]` for every column `j`.
pub fn column_label_maps(code: &CodeMatrix) -> Result<Vec<LabelMap>> {
    let k = code.num_classes();
    (0..code.code_length())
        .map(|j| {
            LabelMap::new(
                (0..k)
                    .map(|y| {
                        let row = code.row_of_label(y).expect("label map is a bijection");
                        if code.entry(row, j) < 0.0 { -1 } else { 1 }
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn code_columns_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dist = cfg.distribution_or(|| SyntheticDistribution::circle_points(128))?;
    let d = dist.dim();
    let k = dist.num_classes();
    let l = cfg.code_length.unwrap_or(7);
    let base = code_for(k, l, cfg.seed, false)?;
    let mut warnings = regime_warnings(&dist, REGIME_FACTOR * (d + 1) * l, "4(d+1)l");
    if d > 2 {
        warnings.push("d > 2: per-column errors are not certified".into());
    }
    let notes = vec!["thresholds are desk-scale surrogates for the 1/2 - nu bound; the code is fixed and only the row-to-label bijection is random".to_string()];
    let records = run_trials(cfg, |_, seed| {
        let code = base.relabeled(random_permutation(k, seed))?;
        let (train, exact) = population(&dist, cfg.train_size, seed.wrapping_add(TEST_SEED_OFFSET))?;
        let test = if exact {
            train.clone()
        } else {
            dist.sample(cfg.test_size, seed.wrapping_add(REFERENCE_SEED_OFFSET))?
        };
        let model = train_ecoc(&code, &train, &LearnerConfig::with_seed(seed))?;
        let trained = multiclass_error(&Model::Ecoc(model), &test)?;
        let mut m = vec![("trained_error".to_string(), trained)];
        if d <= 2 {
            let cols = column_label_maps(&code)?
                .iter()
                .map(|phi| certify_best_error(&apply_label_map(&train, phi)?))
                .collect::<Result<Vec<f64>>>()?;
            m.push(("mean_column_certified".into(), cols.iter().sum::<f64>() / l as f64));
            m.push(("min_column_certified".into(), cols.iter().cloned().fold(f64::INFINITY, f64::min)));
        }
        Ok(m)
    })?;
    Ok(ExperimentResult::new(cfg.experiment, records, warnings, notes))
}

/// `(name, distribution)` for the three two-dimensional fixtures.
pub fn showcase_fixtures(seed: u64) -> Result<Vec<(&'static str, SyntheticDistribution)>> {
    Ok(vec![
        ("two-points", SyntheticDistribution::two_points()),
        ("circle-9", SyntheticDistribution::circle_points(9)?),
        ("random-center", SyntheticDistribution::random_points(9, 2, seed, true)?),
    ])
}

fn train_method(
    method: Method,
    sample: &MulticlassSample,
    code_length: Option<usize>,
    seed: u64,
) -> Result<Model> {
    let k = sample.num_classes();
    let learner = LearnerConfig::with_seed(seed);
    Ok(match method {
        Method::Msvm => Model::Msvm(fit_msvm(sample, &learner)?),
        Method::Ova => Model::Ecoc(train_ova(sample, &learner)?),
        Method::Ap => Model::Ecoc(train_ap(sample, &learner)?),
        Method::Tree => {
            let shape = TreeShape::balanced(k)?;
            Model::Tree(train_tree(&shape, &random_permutation(k, seed), sample, &learner)?)
        }
        Method::Ecoc => {
            let l = code_length.unwrap_or_else(|| default_code_length(k));
            Model::Ecoc(train_ecoc(&code_for(k, l, seed, true)?, sample, &learner)?)
        }
    })
}

pub fn showcase_table(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.distribution.is_some() {
        return invalid("showcase-table uses its own fixtures; drop `distribution`");
    }
    let fixtures = showcase_fixtures(cfg.seed)?;
    let methods = [Method::Msvm, Method::Ova, Method::Tree, Method::Ecoc];
    let records = run_trials(cfg, |_, seed| {
        let mut m = Vec::new();
        for (name, dist) in &fixtures {
            let (pop, _) = population(dist, cfg.train_size, seed)?;
            for &method in &methods {
                let model = train_method(method, &pop, cfg.code_length, seed)?;
                let err = multiclass_error(&model, &pop)?;
                m.push((format!("{name}/{}", method.name()), err));
                m.push((format!("{name}/{}/zero", method.name()), (err == 0.0) as u8 as f64));
                m.push((format!("{name}/{}/above-0.2", method.name()), (err > 0.2) as u8 as f64));
            }
            if *name == "random-center" {
                let center = dist.num_classes() - 1;
                let mut signs = vec![-1i8; dist.num_classes()];
                signs[center] = 1;
                let certified = certify_best_error(&apply_label_map(&pop, &LabelMap::new(signs)?)?)?;
                m.push(("random-center/ova-center-certified".into(), certified));
            }
        }
        Ok(m)
    })?;
    let notes = vec![
        "errors are training errors on the full finite support; tree and ecoc draw a fresh label bijection per trial".into(),
    ];
    Ok(ExperimentResult::new(cfg.experiment, records, Vec::new(), notes))
}

/// `n` standard Gaussian points in `R^d`.
pub fn gaussian_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = crate::rng(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

pub fn containment_check(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dist = cfg.distribution_or(|| SyntheticDistribution::circle_points(9)?.with_jitter(0.05))?;
    let k = dist.num_classes();
    let d = dist.dim();
    let sector = SyntheticDistribution::sector3();
    let eps = cfg.epsilon;
    let records = run_trials(cfg, |_, seed| {
        let learner = LearnerConfig::with_seed(seed);
        let train = dist.sample(cfg.train_size, seed)?;
        let tree = train_tree(&shape_for(cfg, k)?, &random_permutation(k, seed), &train, &learner)?;
        let reference = dist.sample(cfg.test_size, seed.wrapping_add(REFERENCE_SEED_OFFSET))?;
        let conv = tree_to_msvm(&tree, reference.points(), eps)?;
        let fresh = dist.sample(cfg.test_size, seed.wrapping_add(TEST_SEED_OFFSET))?;
        let tree = Model::Tree(tree);
        let msvm = Model::Msvm(conv.weights.clone());
        let disagree = fresh
            .points()
            .iter()
            .filter(|x| tree.predict(x).ok() != msvm.predict(x).ok())
            .count() as f64
            / fresh.len() as f64;

        let w = fit_msvm(&train, &learner)?;
        let ap = Model::Ecoc(msvm_to_ap(&w)?);
        let w = Model::Msvm(w);
        let probes = gaussian_points(cfg.test_size, d, seed.wrapping_add(TEST_SEED_OFFSET));
        let agree = probes.iter().filter(|x| ap.predict(x).ok() == w.predict(x).ok()).count() as f64
            / probes.len() as f64;

        let s = sector.sample(cfg.train_size, seed)?;
        let sector_msvm = multiclass_error(&Model::Msvm(fit_msvm(&s, &learner)?), &s)?;
        let root = (0..3)
            .map(|i| {
                let signs = (0..3).map(|y| if y == i { 1 } else { -1 }).collect();
                certify_best_error(&apply_label_map(&s, &LabelMap::new(signs)?)?)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok(vec![
            ("tree_msvm_reference_disagreement".into(), conv.reference_disagreement),
            ("tree_msvm_fresh_disagreement".into(), disagree),
            ("tree_msvm_within_epsilon".into(), (disagree <= eps) as u8 as f64),
            ("msvm_ap_agreement".into(), agree),
            ("sector3_msvm_error".into(), sector_msvm),
            ("sector3_root_certified".into(), root),
        ])
    })?;
    let notes = vec![format!("tree conversion tolerance epsilon = {eps}; root certificate is the best single-halfspace error over the three one-vs-two splits")];
    Ok(ExperimentResult::new(cfg.experiment, records, Vec::new(), notes))
}

pub fn error_curve(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dist = cfg.distribution_or(|| Ok(SyntheticDistribution::sector3()))?;
    let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![20, 50, 100, 200, 500, 1000]);
    let methods = cfg.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let largest = *sizes.iter().max().expect("validated non-empty");
    let records = run_trials(cfg, |_, seed| {
        let all = dist.sample(largest, seed)?;
        let test = dist.sample(cfg.test_size, seed.wrapping_add(TEST_SEED_OFFSET))?;
        let mut m = Vec::new();
        for &n in &sizes {
            let train = MulticlassSample::new(all.points()[..n].to_vec(), all.labels()[..n].to_vec(), all.num_classes())?;
            for &method in &methods {
                let model = train_method(method, &train, cfg.code_length, seed)?;
                m.push((format!("{}/m={n}", method.name()), multiclass_error(&model, &test)?));
            }
        }
        Ok(m)
    })?;
    let notes = vec!["test error against training-set size; qualitative only".to_string()];
    Ok(ExperimentResult::new(cfg.experiment, records, Vec::new(), notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(id: ExperimentId) -> ExperimentConfig {
        ExperimentConfig {
            trials: 3,
            train_size: 300,
            test_size: 500,
            ..ExperimentConfig::new(id)
        }
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "split-labels", "distribution": {"kind": "circle-points", "k": 64}, "trials": 4, "rule": "iid"}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.rule, RuleKind::Iid);
        assert_eq!(cfg.mu, 0.5);
        assert!(ExperimentConfig::from_json(r#"{"experiment": "split-labels", "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "split-labels", "trials": 0}"#).is_err());
    }

    #[test]
    fn quantiles_and_summary() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.9), 4.0);
        let recs = vec![
            TrialRecord { trial: 0, metrics: vec![("a".into(), 1.0)] },
            TrialRecord { trial: 1, metrics: vec![("a".into(), 3.0)] },
        ];
        let r = ExperimentResult::new(ExperimentId::SplitLabels, recs, vec![], vec![]);
        assert_eq!(r.mean("a"), Some(2.0));
        assert_eq!(r.stat("a", "max"), Some(3.0));
        assert!(r.records_csv().starts_with("experiment,trial,metric,value\nsplit-labels,0,a,1\n"));
    }

    #[test]
    fn simplex_is_tight() {
        for d in 1..=3 {
            let (total, zero) = simplex_tightness(d).unwrap();
            assert_eq!(total, zero);
        }
    }

    #[test]
    fn split_labels_small_k_warns_and_is_deterministic() {
        let mut cfg = quick(ExperimentId::SplitLabels);
        cfg.distribution = Some(DistributionConfig {
            kind: Kind::CirclePoints,
            k: Some(6),
            d: None,
            seed: None,
            jitter: None,
            with_center: false,
            centers: None,
            class_probabilities: None,
        });
        let a = run_experiment(&cfg).unwrap();
        assert!(a.warnings.iter().any(|w| w.contains("regime violated")));
        assert_eq!(a.records.len(), 3);
        assert_eq!(a.records_csv(), run_experiment(&cfg).unwrap().records_csv());
    }

    #[test]
    fn root_map_of_chain_isolates_one_label() {
        let shape = TreeShape::chain(5).unwrap();
        let phi = root_label_map(&shape, &[3, 1, 4, 0, 2]).unwrap();
        assert_eq!(phi.negatives(), 1);
        assert_eq!(phi.signs()[3], -1);
    }

    #[test]
    fn tree_root_brackets() {
        let mut cfg = quick(ExperimentId::TreeRoot);
        cfg.distribution = Some(DistributionConfig {
            kind: Kind::CirclePoints,
            k: Some(16),
            d: None,
            seed: None,
            jitter: None,
            with_center: false,
            centers: None,
            class_probabilities: None,
        });
        let r = run_experiment(&cfg).unwrap();
        for (c, t) in r.values("certified_root_error").iter().zip(r.values("trained_tree_error")) {
            assert!(*c <= t + 1e-12);
        }
        assert!(r.values("bracket_ok").iter().all(|&v| v == 1.0));
    }

    #[test]
    fn chain_root_is_vacuous() {
        let mut cfg = quick(ExperimentId::TreeRoot);
        cfg.tree_shape = ShapeKind::Chain;
        cfg.trials = 1;
        let r = run_experiment(&cfg).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn code_columns_small_regime() {
        let mut cfg = quick(ExperimentId::CodeColumns);
        cfg.distribution = Some(DistributionConfig {
            kind: Kind::CirclePoints,
            k: Some(3),
            d: None,
            seed: None,
            jitter: None,
            with_center: false,
            centers: None,
            class_probabilities: None,
        });
        cfg.code_length = Some(2);
        let r = run_experiment(&cfg).unwrap();
        assert!(!r.warnings.is_empty());
        assert_eq!(r.values("trained_error").len(), 3);
    }

    #[test]
    fn column_maps_follow_rows() {
        let code = code_for(4, 3, 1, true).unwrap();
        let maps = column_label_maps(&code).unwrap();
        for (j, phi) in maps.iter().enumerate() {
            for y in 0..4 {
                assert_eq!(phi.signs()[y] as f64, code.entry(code.row_of_label(y).unwrap(), j));
            }
        }
    }

    #[test]
    fn error_curve_writes_svg() {
        let mut cfg = quick(ExperimentId::ErrorCurve);
        cfg.trials = 1;
        cfg.sizes = Some(vec![30, 90]);
        cfg.methods = Some(vec![Method::Msvm, Method::Ova]);
        let r = run_experiment(&cfg).unwrap();
        let svg = r.curve_svg().unwrap();
        assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 2);
        let dir = tempfile::tempdir().unwrap();
        let files = r.write_to(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
    }

    #[test]
    fn default_code_lengths() {
        assert_eq!(default_code_length(2), 2);
        assert_eq!(default_code_length(9), 5);
        assert_eq!(default_code_length(128), 8);
    }
}
