//! Sample CSV files and the plain-text model container.
//!
//! Samples use the header `x1,...,xd,y` with zero-based labels. Models are
//! stored as text:
//!
//! ```text
//! multireduce-model msvm
//! k d
//! <k rows of d+1 weights>
//!
//! multireduce-model tree
//! k d
//! shape N N L L L
//! labels 2 0 1
//! <k-1 rows of d+1 node weights, preorder>
//!
//! multireduce-model ecoc
//! <code matrix in the codes text format>
//! <l rows of d+1 column weights>
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::codes::{join, parse_numbers, CodeMatrix};
use crate::error::{Error, Result};
use crate::halfspace::{BinarySample, Halfspace};
use crate::reducers::{EcocModel, Model, MulticlassSample, TreeModel, TreeShape, WeightMatrix};

const MAGIC: &str = "multireduce-model";

/// Writes `sample` as CSV with header `x1,...,xd,y`.
pub fn write_sample_csv<W: Write>(sample: &MulticlassSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=sample.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for (x, y) in sample.iter() {
        let mut rec: Vec<String> = x.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a `±1`-labelled sample in the same layout.
pub fn write_binary_sample_csv<W: Write>(sample: &BinarySample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=sample.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for (x, y) in sample.iter() {
        let mut rec: Vec<String> = x.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sample written by [`write_sample_csv`]. The class count is
/// `num_classes` when given, otherwise one more than the largest label.
pub fn read_sample_csv<R: Read>(input: R, num_classes: Option<usize>) -> Result<MulticlassSample> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 2 || header.get(cols - 1).map(str::trim) != Some("y") {
        return Err(Error::Parse("sample header must be x1,...,xd,y".into()));
    }
    for (i, h) in header.iter().take(cols - 1).enumerate() {
        if h.trim() != format!("x{}", i + 1) {
            return Err(Error::Parse(format!("unexpected column `{h}` in sample header")));
        }
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |tok: &str| Error::Parse(format!("row {}: bad value `{tok}`", line + 1));
        let x = rec
            .iter()
            .take(cols - 1)
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
            .collect::<Result<Vec<_>>>()?;
        let t = rec.get(cols - 1).unwrap_or("");
        labels.push(t.trim().parse::<usize>().map_err(|_| bad(t))?);
        points.push(x);
    }
    let k = num_classes.unwrap_or_else(|| labels.iter().max().map_or(2, |m| (m + 1).max(2)));
    MulticlassSample::new(points, labels, k)
}

pub fn read_sample_file(path: &Path, num_classes: Option<usize>) -> Result<MulticlassSample> {
    read_sample_csv(fs::File::open(path)?, num_classes)
}

pub fn write_sample_file(sample: &MulticlassSample, path: &Path) -> Result<()> {
    write_sample_csv(sample, fs::File::create(path)?)
}

pub fn model_to_text(model: &Model) -> String {
    let mut s = String::new();
    let mut line = |l: String| {
        s.push_str(&l);
        s.push('\n');
    };
    match model {
        Model::Msvm(w) => {
            line(format!("{MAGIC} msvm"));
            line(format!("{} {}", w.num_classes(), w.dim()));
            for r in w.rows() {
                line(join(r));
            }
        }
        Model::Tree(t) => {
            line(format!("{MAGIC} tree"));
            line(format!("{} {}", t.num_classes(), t.dim()));
            line(format!("shape {}", t.shape().to_tokens()));
            line(format!("labels {}", join(t.leaf_labels())));
            for h in t.classifiers() {
                line(join(h.weights()));
            }
        }
        Model::Ecoc(e) => {
            line(format!("{MAGIC} ecoc"));
            for l in e.code().to_text().lines() {
                line(l.to_string());
            }
            for h in e.classifiers() {
                line(join(h.weights()));
            }
        }
    }
    s
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("model file ends before {what}")))
    };
    let head = next("the header")?;
    let kind = head
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| Error::Parse(format!("not a model file: `{head}`")))?;
    match kind {
        "msvm" => {
            let (k, d) = dims(next("dimensions")?)?;
            let rows = (0..k)
                .map(|i| weights(next(&format!("row {i}"))?, d))
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Msvm(WeightMatrix::new(rows)?))
        }
        "tree" => {
            let (k, d) = dims(next("dimensions")?)?;
            let shape = tagged(next("the shape")?, "shape")?;
            let shape = TreeShape::from_tokens(shape)?;
            let labels = parse_numbers::<usize>(tagged(next("the labels")?, "labels")?)?;
            if labels.len() != k {
                return Err(Error::Parse(format!("expected {k} leaf labels, got {}", labels.len())));
            }
            let nodes = (0..shape.num_internal())
                .map(|i| Halfspace::new(weights(next(&format!("node {i}"))?, d)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Tree(TreeModel::new(shape, labels, nodes)?))
        }
        "ecoc" => {
            let header = next("the code header")?;
            let (k, l) = dims(header)?;
            let mut code_text = format!("{header}\n");
            for i in 0..=k {
                code_text.push_str(next(&format!("code line {i}"))?);
                code_text.push('\n');
            }
            let code = CodeMatrix::parse(&code_text)?;
            let mut cols = Vec::with_capacity(l);
            let mut d = None;
            for j in 0..l {
                let w = parse_numbers::<f64>(next(&format!("column {j}"))?)?;
                if *d.get_or_insert(w.len()) != w.len() {
                    return Err(Error::Parse(format!("column {j} has a different dimension")));
                }
                cols.push(Halfspace::new(w)?);
            }
            Ok(Model::Ecoc(EcocModel::new(code, cols)?))
        }
        other => Err(Error::Parse(format!("unknown model kind `{other}`"))),
    }
}

pub fn read_model_file(path: &Path) -> Result<Model> {
    parse_model(&fs::read_to_string(path)?)
}

pub fn write_model_file(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model_to_text(model))?;
    Ok(())
}

fn dims(line: &str) -> Result<(usize, usize)> {
    match parse_numbers::<usize>(line)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Parse(format!("expected two integers, got `{line}`"))),
    }
}

fn tagged<'a>(line: &'a str, tag: &str) -> Result<&'a str> {
    line.strip_prefix(tag)
        .map(str::trim)
        .ok_or_else(|| Error::Parse(format!("expected `{tag} ...`, got `{line}`")))
}

fn weights(line: &str, d: usize) -> Result<Vec<f64>> {
    let w = parse_numbers::<f64>(line)?;
    if w.len() != d + 1 {
        return Err(Error::Parse(format!("expected {} weights, got {}", d + 1, w.len())));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::random_code;

    fn sample() -> MulticlassSample {
        MulticlassSample::new(vec![vec![0.1, -2.5], vec![1e-17, 3.0], vec![0.3333333333333333, 7.0]], vec![2, 0, 1], 3)
            .unwrap()
    }

    #[test]
    fn sample_round_trip() {
        let mut buf = Vec::new();
        write_sample_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(read_sample_csv(&buf[..], None).unwrap(), sample());
    }

    #[test]
    fn sample_header_is_checked() {
        assert!(read_sample_csv("a,b\n1,0\n".as_bytes(), None).is_err());
        assert!(read_sample_csv("x1,y\nfoo,0\n".as_bytes(), None).is_err());
        assert!(read_sample_csv("x1,y\n1,5\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn models_round_trip() {
        let w = WeightMatrix::new(vec![vec![0.1, -0.2, 3.0], vec![1.0 / 3.0, 0.0, -1e300]]).unwrap();
        let t = TreeModel::new(
            TreeShape::chain(3).unwrap(),
            vec![2, 0, 1],
            vec![Halfspace::new(vec![1.0, 2.0, 0.5]).unwrap(), Halfspace::new(vec![-1.0, 0.0, 0.25]).unwrap()],
        )
        .unwrap();
        let code = random_code(4, 3, 5).unwrap();
        let cols = (0..3).map(|j| Halfspace::new(vec![j as f64, 1.0, -0.5]).unwrap()).collect();
        let e = EcocModel::new(code, cols).unwrap();
        for m in [Model::from(w), Model::from(t), Model::from(e)] {
            let text = model_to_text(&m);
            assert_eq!(parse_model(&text).unwrap(), m, "{text}");
        }
    }

    #[test]
    fn rejects_truncated_models() {
        assert!(parse_model("multireduce-model msvm\n2 1\n1 2\n").is_err());
        assert!(parse_model("something else\n").is_err());
        assert!(parse_model("multireduce-model cube\n").is_err());
    }
}
