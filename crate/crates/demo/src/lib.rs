//! WebAssembly bindings for the static page in `www/`.
//!
//! Every operation returns a JSON string. The plain Rust functions are
//! exported too so they can be tested natively.

use multireduce::codes::{ap_code, ova_code, random_code, BinaryVector, CodeMatrix};
use multireduce::halfspace::exact_best_error;
use multireduce::lab::population;
use multireduce::reducers::{
    multiclass_error, train_ecoc, train_msvm, train_ova, train_tree, LearnerConfig, Model, MsvmMode, TreeShape,
};
use multireduce::synth::{apply_label_map, random_label_map, LabelRule, SyntheticDistribution};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Half-width of the square shown by [`regions`].
pub const VIEW: f64 = 1.5;

const MAX_RESOLUTION: u32 = 200;

fn fixture(name: &str, seed: u64) -> Result<SyntheticDistribution, String> {
    let dist = match name {
        "two-points" => SyntheticDistribution::two_points(),
        "circle-9" => SyntheticDistribution::circle_points(9).map_err(err)?,
        "random-center" => SyntheticDistribution::random_points(9, 2, seed, true).map_err(err)?,
        "sector3" => SyntheticDistribution::sector3(),
        other => return Err(format!("unknown fixture `{other}`")),
    };
    Ok(dist)
}

fn err(e: multireduce::Error) -> String {
    e.to_string()
}

fn train(method: &str, sample: &multireduce::reducers::MulticlassSample, seed: u64) -> Result<Model, String> {
    let k = sample.num_classes();
    let cfg = LearnerConfig::with_seed(seed);
    let model = match method {
        "msvm" => Model::Msvm(
            train_msvm(sample, MsvmMode::Realizable, &cfg)
                .or_else(|_| train_msvm(sample, MsvmMode::Approximate, &cfg))
                .map_err(err)?,
        ),
        "ova" => Model::Ecoc(train_ova(sample, &cfg).map_err(err)?),
        "tree" => {
            let shape = TreeShape::random(k, seed).map_err(err)?;
            let mut labels: Vec<usize> = (0..k).collect();
            labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Model::Tree(train_tree(&shape, &labels, sample, &cfg).map_err(err)?)
        }
        "ecoc" => {
            let l = (usize::BITS - (k - 1).leading_zeros()) as usize + 1;
            Model::Ecoc(train_ecoc(&random_code(k, l, seed).map_err(err)?, sample, &cfg).map_err(err)?)
        }
        other => return Err(format!("unknown method `{other}`")),
    };
    Ok(model)
}

/// Trains `method` on a two-dimensional fixture and labels a
/// `resolution × resolution` grid over `[-VIEW, VIEW]²`, row by row from
/// the top.
pub fn regions(fixture_name: &str, method: &str, seed: u64, resolution: u32) -> Result<String, String> {
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must lie in 2..={MAX_RESOLUTION}"));
    }
    let dist = fixture(fixture_name, seed)?;
    let (sample, _) = population(&dist, 300, seed).map_err(err)?;
    let model = train(method, &sample, seed)?;
    let step = 2.0 * VIEW / (resolution - 1) as f64;
    let mut grid = Vec::with_capacity((resolution * resolution) as usize);
    for r in 0..resolution {
        for c in 0..resolution {
            let x = [-VIEW + c as f64 * step, VIEW - r as f64 * step];
            grid.push(model.predict(&x).map_err(err)?);
        }
    }
    let points: Vec<Value> = sample.iter().map(|(x, y)| json!([x[0], x[1], y])).collect();
    Ok(json!({
        "k": sample.num_classes(),
        "points": points,
        "resolution": resolution,
        "view": VIEW,
        "grid": grid,
        "training_error": multiclass_error(&model, &sample).map_err(err)?,
    })
    .to_string())
}

/// Splits the `k` classes of the circle fixture at random, a fraction
/// `mu` to `-1`, and fits the best halfspace exactly.
pub fn label_split(k: usize, mu: f64, exact_count: bool, seed: u64) -> Result<String, String> {
    let dist = SyntheticDistribution::circle_points(k).map_err(err)?;
    let rule = if exact_count { LabelRule::Exact { mu } } else { LabelRule::Iid { mu } };
    let phi = random_label_map(k, rule, seed).map_err(err)?;
    let (sample, _) = population(&dist, k, seed).map_err(err)?;
    let binary = apply_label_map(&sample, &phi).map_err(err)?;
    let fit = exact_best_error(&binary).map_err(err)?;
    let points: Vec<Value> = binary.iter().map(|(x, y)| json!([x[0], x[1], y])).collect();
    Ok(json!({
        "points": points,
        "negatives": phi.negatives(),
        "halfspace": fit.halfspace.weights(),
        "error": fit.error,
        "mistakes": fit.mistakes,
    })
    .to_string())
}

/// Code statistics for `ova`, `ap` or a seeded `random` code (`l` is
/// ignored for the first two), and the flips of one binary vector: `bits`
/// as comma-separated `±1`, or the constructed sensitive vector when empty.
pub fn code_sensitivity(family: &str, k: usize, l: usize, seed: u64, bits: &str) -> Result<String, String> {
    let code = match family {
        "ova" => ova_code(k),
        "ap" => ap_code(k),
        "random" => random_code(k, l, seed),
        other => return Err(format!("unknown code family `{other}`")),
    }
    .map_err(err)?;
    let rows: Vec<&[f64]> = code.rows().collect();
    let mut out = json!({
        "rows": rows,
        "labels": code.label_map(),
        "min_distance": code.code_distance().map_err(err)?,
        "max_min_distance": code.max_min_distance().map_err(err)?,
    });
    let u = if bits.trim().is_empty() {
        code.sensitive_vector().ok()
    } else {
        Some(parse_bits(bits)?)
    };
    if let Some(u) = u {
        out["vector"] = describe(&code, &u)?;
    }
    Ok(out.to_string())
}

fn parse_bits(bits: &str) -> Result<BinaryVector, String> {
    let v = bits
        .split(',')
        .map(|t| t.trim().parse::<i8>().map_err(|_| format!("`{t}` is not +1 or -1")))
        .collect::<Result<Vec<_>, _>>()?;
    BinaryVector::new(v).map_err(err)
}

fn describe(code: &CodeMatrix, u: &BinaryVector) -> Result<Value, String> {
    let sens = code.sensitivity(u).map_err(err)?;
    let flips = (0..u.len())
        .map(|j| code.decode(&u.flipped(j)).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "bits": u.as_slice(),
        "decoded": code.decode(u).map_err(err)?,
        "q": sens.q,
        "sensitive": sens.coords,
        "decoded_after_flip": flips,
    }))
}

#[wasm_bindgen(js_name = regions)]
pub fn regions_js(fixture: &str, method: &str, seed: u32, resolution: u32) -> Result<String, JsError> {
    regions(fixture, method, seed.into(), resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = labelSplit)]
pub fn label_split_js(k: u32, mu: f64, exact_count: bool, seed: u32) -> Result<String, JsError> {
    label_split(k as usize, mu, exact_count, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = codeSensitivity)]
pub fn code_sensitivity_js(family: &str, k: u32, l: u32, seed: u32, bits: &str) -> Result<String, JsError> {
    code_sensitivity(family, k as usize, l as usize, seed.into(), bits).map_err(|e| JsError::new(&e))
}
