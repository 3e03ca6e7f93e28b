//! Command-line front end. Exit status 0 on success, 1 on a domain error,
//! 2 on a usage error. Diagnostics go to stderr, data to stdout or `--out`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codes::{ap_code, ova_code, random_code_with, BinaryVector, CodeMatrix, RandomCodeOptions};
use crate::error::Error;
use crate::io::{model_to_text, parse_model, read_sample_csv, write_sample_csv};
use crate::lab::{run_experiment, ExperimentConfig};
use crate::reducers::{
    msvm_to_ap, multiclass_error, train_ecoc, train_msvm, train_tree, tree_to_msvm, BinaryLearner, LearnerConfig,
    Model, MsvmMode, MulticlassSample, TreeShape,
};
use crate::shatter::{
    build_f, build_g, embed_f_halfspaces, embed_g_halfspaces, graph_dimension, natarajan_dimension,
    sensitive_witness, sensitive_witness_check, tree_witness_check, vc_dimension, DimensionReport,
    FiniteFunctionClass, GVariant, DEFAULT_SLOPE,
};
use crate::synth::{DistributionConfig, SyntheticDistribution};

#[derive(Parser, Debug)]
#[command(name = "multireduce", version, about = "Multiclass-to-binary reductions and their limits")]
struct Cli {
    /// Seed for every random choice; overrides the seed of a lab config.
    #[arg(long, global = true, env = "MULTIREDUCE_SEED")]
    seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print or analyze a code matrix.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Draw a synthetic sample as CSV.
    Gen(GenArgs),
    /// Train a multiclass model on a CSV sample.
    Train(TrainArgs),
    /// Error of a model on a CSV sample.
    Eval(EvalArgs),
    /// Convert between model families.
    #[command(subcommand)]
    Convert(ConvertCmd),
    /// Shattering checks and embeddings.
    #[command(subcommand)]
    Shatter(ShatterCmd),
    /// Experiment harness.
    #[command(subcommand)]
    Lab(LabCmd),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum CodeCmd {
    Ova {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    Ap {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    Random {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// Resample until all rows differ.
        #[arg(long)]
        distinct: bool,
        /// Random row-to-label bijection.
        #[arg(long)]
        random_labels: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Distances, a sensitive vector and its sensitivity.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    TwoPoints,
    Circle,
    Sector3,
    Random,
    Simplex,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum, required_unless_present = "config")]
    kind: Option<GenKind>,
    /// JSON distribution description instead of `kind`.
    #[arg(long, conflicts_with = "kind")]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    jitter: Option<f64>,
    /// Put the last class at the centroid of the others.
    #[arg(long)]
    with_center: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Msvm,
    Ova,
    Ap,
    Tree,
    Ecoc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Balanced,
    Chain,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LearnerArg {
    Auto,
    Perceptron,
    Approximate,
    Exact,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MsvmModeArg {
    Auto,
    Realizable,
    Approximate,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    /// Number of classes; defaults to one more than the largest label.
    #[arg(long)]
    k: Option<usize>,
    /// Code file for `ecoc`; a random code is drawn otherwise.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    code_length: Option<usize>,
    #[arg(long, value_enum, default_value = "balanced")]
    shape: ShapeArg,
    /// Comma-separated leaf labels for `tree`, left to right.
    #[arg(long, value_delimiter = ',')]
    leaf_labels: Option<Vec<usize>>,
    /// Random leaf labels for `tree`.
    #[arg(long, conflicts_with = "leaf_labels")]
    random_labels: bool,
    #[arg(long, value_enum, default_value = "auto")]
    learner: LearnerArg,
    #[arg(long, value_enum, default_value = "auto")]
    msvm_mode: MsvmModeArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also print one predicted label per point.
    #[arg(long)]
    predictions: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand, Debug)]
enum ConvertCmd {
    /// Linear predictor agreeing with a tree up to `epsilon` on reference points.
    TreeToMsvm {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// All-pairs model equal to a linear predictor.
    MsvmToAp {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    F,
    G,
    GTilde,
}

#[derive(Subcommand, Debug)]
enum ShatterCmd {
    /// Tree composition of `G^{k-1}` shatters the full grid.
    Tree {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value = "balanced")]
        shape: ShapeArg,
    },
    /// Code composition of `F^l` shatters the sensitive grid.
    Code {
        #[arg(long, required_unless_present_any = ["ova", "ap"])]
        code: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["code", "ap"])]
        ova: Option<usize>,
        #[arg(long, conflicts_with_all = ["code", "ova"])]
        ap: Option<usize>,
        /// Comma-separated ±1 vector; the generic sensitive vector otherwise.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        vector: Option<Vec<i8>>,
        #[arg(long)]
        d: usize,
    },
    /// Natarajan, Graph and VC dimensions.
    Dims {
        #[arg(long, value_enum, required_unless_present = "class")]
        family: Option<Family>,
        #[arg(long, requires = "family")]
        d: Option<usize>,
        #[arg(long, requires = "family")]
        l: Option<usize>,
        /// Class file: domain size, then one function per line.
        #[arg(long, conflicts_with = "family")]
        class: Option<PathBuf>,
    },
    /// Points on which halfspaces realize every member of `F^l` or `G^l`.
    Embed {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = DEFAULT_SLOPE)]
        slope: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand, Debug)]
enum LabCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        #[cfg(feature = "parallel")]
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let seed = cli.seed;
    match dispatch(cli.command, seed) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, seed: Option<u64>) -> Outcome {
    let s = seed.unwrap_or(0);
    match cmd {
        Command::Code(c) => code(c, s),
        Command::Gen(g) => gen(g, s),
        Command::Train(t) => train(t, s),
        Command::Eval(e) => eval(e),
        Command::Convert(c) => convert(c),
        Command::Shatter(c) => shatter(c, s),
        Command::Lab(LabCmd::Run { config, out }) => lab(&config, out, seed),
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &OutArg, text: &str) -> Outcome {
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Domain(e.into())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| Failure::Domain(e.into()))
        }
    }
}

fn load_sample(path: &Path, k: Option<usize>) -> std::result::Result<MulticlassSample, Failure> {
    Ok(read_sample_csv(read_input(path)?.as_bytes(), k)?)
}

fn load_model(path: &Path) -> std::result::Result<Model, Failure> {
    Ok(parse_model(&read_input(path)?)?)
}

fn code(c: CodeCmd, seed: u64) -> Outcome {
    match c {
        CodeCmd::Ova { k, out } => emit(&out, &ova_code(k)?.to_text()),
        CodeCmd::Ap { k, out } => emit(&out, &ap_code(k)?.to_text()),
        CodeCmd::Random {
            k,
            l,
            distinct,
            random_labels,
            out,
        } => {
            let opts = RandomCodeOptions {
                distinct_rows: distinct,
                random_labels,
            };
            emit(&out, &random_code_with(k, l, seed, opts)?.to_text())
        }
        CodeCmd::Info { input } => {
            let m = CodeMatrix::parse(&read_input(&input)?)?;
            let mut s = String::new();
            let _ = writeln!(s, "k {}", m.num_classes());
            let _ = writeln!(s, "l {}", m.code_length());
            if m.is_binary() {
                let _ = writeln!(s, "distance {}", m.code_distance()?);
                let _ = writeln!(s, "max-min-distance {}", m.max_min_distance()?);
                match m.sensitive_vector() {
                    Ok(u) => {
                        let sens = m.sensitivity(&u)?;
                        let _ = writeln!(s, "sensitive-vector {}", join(u.as_slice()));
                        let _ = writeln!(s, "sensitivity {}", sens.q);
                        let _ = writeln!(s, "coordinates {}", join(&sens.coords));
                    }
                    Err(Error::NoSensitiveGuarantee) => {
                        let _ = writeln!(s, "sensitive-vector none");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            emit(&OutArg { out: None }, &s)
        }
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn gen(g: GenArgs, seed: u64) -> Outcome {
    let dist = match (g.kind, &g.config) {
        (_, Some(path)) => {
            let cfg: DistributionConfig = serde_json::from_str(&read_input(path)?).map_err(Error::from)?;
            cfg.build()?
        }
        (Some(kind), None) => {
            let need = |v: Option<usize>, name: &str| v.ok_or_else(|| Failure::Usage(format!("--{name} is required for this kind")));
            let dist = match kind {
                GenKind::TwoPoints => SyntheticDistribution::two_points(),
                GenKind::Circle => SyntheticDistribution::circle_points(need(g.k, "k")?)?,
                GenKind::Sector3 => SyntheticDistribution::sector3(),
                GenKind::Random => {
                    SyntheticDistribution::random_points(need(g.k, "k")?, g.d.unwrap_or(2), seed, g.with_center)?
                }
                GenKind::Simplex => SyntheticDistribution::simplex(need(g.d, "d")?)?,
            };
            match g.jitter {
                Some(s) => dist.with_jitter(s)?,
                None => dist,
            }
        }
        (None, None) => return Err(Failure::Usage("give a kind or --config".into())),
    };
    let sample = dist.sample(g.n, seed)?;
    let mut buf = Vec::new();
    write_sample_csv(&sample, &mut buf)?;
    emit(&g.out, &String::from_utf8(buf).expect("csv output is utf-8"))
}

fn train(t: TrainArgs, seed: u64) -> Outcome {
    let sample = load_sample(&t.data, t.k)?;
    let k = sample.num_classes();
    let cfg = LearnerConfig {
        learner: match t.learner {
            LearnerArg::Auto => BinaryLearner::Auto,
            LearnerArg::Perceptron => BinaryLearner::Perceptron,
            LearnerArg::Approximate => BinaryLearner::Approximate,
            LearnerArg::Exact => BinaryLearner::Exact,
        },
        ..LearnerConfig::with_seed(seed)
    };
    let model = match t.method {
        MethodArg::Msvm => Model::Msvm(match t.msvm_mode {
            MsvmModeArg::Realizable => train_msvm(&sample, MsvmMode::Realizable, &cfg)?,
            MsvmModeArg::Approximate => train_msvm(&sample, MsvmMode::Approximate, &cfg)?,
            MsvmModeArg::Auto => match train_msvm(&sample, MsvmMode::Realizable, &cfg) {
                Err(Error::NotRealizable { .. }) => train_msvm(&sample, MsvmMode::Approximate, &cfg)?,
                other => other?,
            },
        }),
        MethodArg::Ova => Model::Ecoc(train_ecoc(&ova_code(k)?, &sample, &cfg)?),
        MethodArg::Ap => Model::Ecoc(train_ecoc(&ap_code(k)?, &sample, &cfg)?),
        MethodArg::Ecoc => {
            let code = match &t.code {
                Some(p) => CodeMatrix::parse(&read_input(p)?)?,
                None => {
                    let l = t
                        .code_length
                        .ok_or_else(|| Failure::Usage("ecoc needs --code or --code-length".into()))?;
                    random_code_with(k, l, seed, RandomCodeOptions::default())?
                }
            };
            Model::Ecoc(train_ecoc(&code, &sample, &cfg)?)
        }
        MethodArg::Tree => {
            let shape = tree_shape(t.shape, k, seed)?;
            let labels = match (&t.leaf_labels, t.random_labels) {
                (Some(l), _) => l.clone(),
                (None, true) => {
                    use rand::seq::SliceRandom as _;
                    let mut l: Vec<usize> = (0..k).collect();
                    l.shuffle(&mut crate::rng(seed));
                    l
                }
                (None, false) => (0..k).collect(),
            };
            Model::Tree(train_tree(&shape, &labels, &sample, &cfg)?)
        }
    };
    let err = multiclass_error(&model, &sample)?;
    eprintln!("training error {err}");
    emit(&t.out, &model_to_text(&model))
}

fn tree_shape(s: ShapeArg, k: usize, seed: u64) -> crate::Result<TreeShape> {
    match s {
        ShapeArg::Balanced => TreeShape::balanced(k),
        ShapeArg::Chain => TreeShape::chain(k),
        ShapeArg::Random => TreeShape::random(k, seed),
    }
}

fn eval(e: EvalArgs) -> Outcome {
    let model = load_model(&e.model)?;
    let sample = load_sample(&e.data, Some(model.num_classes()))?;
    let mut s = String::new();
    let _ = writeln!(s, "n {}", sample.len());
    let _ = writeln!(s, "error {}", multiclass_error(&model, &sample)?);
    if e.predictions {
        for x in sample.points() {
            let _ = writeln!(s, "{}", model.predict(x)?);
        }
    }
    emit(&e.out, &s)
}

fn convert(c: ConvertCmd) -> Outcome {
    match c {
        ConvertCmd::TreeToMsvm {
            model,
            reference,
            epsilon,
            out,
        } => {
            let Model::Tree(tree) = load_model(&model)? else {
                return Err(Failure::Usage(format!("{} is not a tree model", model.display())));
            };
            let reference = load_sample(&reference, None)?;
            let conv = tree_to_msvm(&tree, reference.points(), epsilon)?;
            eprintln!(
                "gamma {} r {} a {} depth {} reference disagreement {}",
                conv.gamma, conv.r, conv.a, conv.depth, conv.reference_disagreement
            );
            emit(&out, &model_to_text(&Model::Msvm(conv.weights)))
        }
        ConvertCmd::MsvmToAp { model, out } => {
            let Model::Msvm(w) = load_model(&model)? else {
                return Err(Failure::Usage(format!("{} is not a linear model", model.display())));
            };
            emit(&out, &model_to_text(&Model::Ecoc(msvm_to_ap(&w)?)))
        }
    }
}

fn report(name: &str, r: &DimensionReport, s: &mut String) {
    let _ = write!(s, "{name} {}", r.dimension);
    if let Some(w) = &r.witness {
        let _ = write!(s, " set {}", join(&w.set));
    }
    s.push('\n');
}

fn parse_class(text: &str) -> crate::Result<FiniteFunctionClass> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| Error::Parse("class file must start with the domain size".into()))?;
    let functions = lines
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<i32>().map_err(|_| Error::Parse(format!("bad label `{t}`"))))
                .collect()
        })
        .collect::<crate::Result<Vec<Vec<i32>>>>()?;
    FiniteFunctionClass::new(n, functions)
}

fn shatter(c: ShatterCmd, seed: u64) -> Outcome {
    let mut s = String::new();
    match c {
        ShatterCmd::Tree { k, d, shape } => {
            let shape = tree_shape(shape, k, seed)?;
            let ok = tree_witness_check(&shape, d)?;
            let _ = writeln!(s, "shape {}", shape.to_tokens());
            let _ = writeln!(s, "shattered-size {}", d * (k - 1));
            let _ = writeln!(s, "shattered {ok}");
        }
        ShatterCmd::Code { code, ova, ap, vector, d } => {
            let m = match (code, ova, ap) {
                (Some(p), _, _) => CodeMatrix::parse(&read_input(&p)?)?,
                (_, Some(k), _) => ova_code(k)?,
                (_, _, Some(k)) => ap_code(k)?,
                _ => return Err(Failure::Usage("give --code, --ova or --ap".into())),
            };
            let u = match vector {
                Some(v) => BinaryVector::new(v)?,
                None => m.sensitive_vector()?,
            };
            let w = sensitive_witness(&m, &u, d)?;
            let ok = sensitive_witness_check(&m, &u, d)?;
            let _ = writeln!(s, "sensitive-vector {}", join(u.as_slice()));
            let _ = writeln!(s, "coordinates {}", join(&w.coords));
            let _ = writeln!(s, "shattered-size {}", w.set.len());
            let _ = writeln!(s, "shattered {ok}");
        }
        ShatterCmd::Dims { family, d, l, class } => {
            let h = match (family, class) {
                (_, Some(p)) => parse_class(&read_input(&p)?)?,
                (Some(f), None) => {
                    let (Some(d), Some(l)) = (d, l) else {
                        return Err(Failure::Usage("--family needs --d and --l".into()));
                    };
                    match f {
                        Family::F => build_f(d, l)?,
                        Family::G => build_g(d, l, GVariant::Full)?,
                        Family::GTilde => build_g(d, l, GVariant::Tilde)?,
                    }
                }
                (None, None) => return Err(Failure::Usage("give --family or --class".into())),
            };
            report("natarajan", &natarajan_dimension(&h)?, &mut s);
            report("graph", &graph_dimension(&h)?, &mut s);
            if h.is_binary() {
                report("vc", &vc_dimension(&h)?, &mut s);
            }
        }
        ShatterCmd::Embed {
            family,
            d,
            l,
            slope,
            out,
        } => {
            let e = match family {
                Family::F => embed_f_halfspaces(d, l, seed)?,
                Family::G => embed_g_halfspaces(d, l, slope)?,
                Family::GTilde => return Err(Failure::Usage("embed supports the f and g families".into())),
            };
            let r = &e.report;
            eprintln!(
                "attempts {} functions {} constructed {} trained {} realized {} min-margin {}",
                r.attempts, r.functions, r.constructed, r.trained, r.realized, r.min_margin
            );
            let mut csv = (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
            csv.push_str(",m,i\n");
            for i in 0..l {
                for m in 0..d {
                    let p = &e.points[crate::shatter::grid_index(m, i, d)];
                    let _ = writeln!(csv, "{},{m},{i}", p.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
                }
            }
            return emit(&out, &csv);
        }
    }
    emit(&OutArg { out: None }, &s)
}

fn lab(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Outcome {
    if !config.exists() {
        return Err(Failure::Usage(format!("config file {} does not exist", config.display())));
    }
    let text = read_input(config)?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = run_experiment(&cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    match out.or(cfg.output.clone()) {
        Some(dir) => {
            for p in result.write_to(&dir)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        None => emit(&OutArg { out: None }, &result.summary_csv()),
    }
}
