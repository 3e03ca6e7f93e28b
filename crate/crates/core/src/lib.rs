//! Multiclass-to-binary reductions and the combinatorics behind them.
//!
//! The crate covers five multiclass hypothesis classes built from
//! halfspaces over `R^d`: one-vs-all, all-pairs, general error-correcting
//! output codes, tree classifiers and multiclass linear predictors
//! (`argmax_i (W x̄)_i`). Alongside the predictors and their trainers it
//! provides
//!
//! * code-matrix analysis ([`codes`]): decoding, Hamming distances and
//!   sensitive vectors,
//! * an exact minimum-error halfspace oracle for `d ≤ 2` ([`halfspace`]),
//! * the conversions tree → linear predictor and linear predictor →
//!   all-pairs ([`reducers`]),
//! * finite hypothesis classes with exhaustive Natarajan/Graph shattering
//!   checks and explicit witness constructions ([`shatter`]),
//! * seeded synthetic distributions ([`synth`]) and an experiment
//!   harness ([`lab`]).
//!
//! Class labels are zero based throughout: a `k`-class problem uses the
//! labels `0..k`. Binary labels are `-1` and `+1` with `sign(0) = +1`.
//! Ties in every argmax resolve to the smallest index.

pub mod codes;
pub mod error;
pub mod halfspace;
pub mod io;
pub mod lab;
pub mod reducers;
pub mod shatter;
pub mod synth;

#[cfg(feature = "cli")]
pub mod cli;

mod par;

pub use error::{Error, Result};

/// A class label in `0..k`.
pub type Label = usize;

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
