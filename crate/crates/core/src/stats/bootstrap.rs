//! Percentile bootstrap confidence intervals for AUROC statistics.
//!
//! Two resampling schemes: a hierarchical bootstrap for the book-level
//! statistic (books with replacement within each class, then paragraphs
//! with replacement within each chosen book) and a flat class-stratified
//! bootstrap over paragraphs. Every replicate derives its RNG stream from
//! (seed, replicate index), so parallel and serial runs agree bit-for-bit.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auroc, StatsError};
use crate::derive_rng;

/// Default replicate count.
pub const BOOTSTRAP_SAMPLES: usize = 1000;
/// Default interval level.
pub const CONFIDENCE_LEVEL: f64 = 0.95;
/// Per-replicate redraw budget when a resample turns out degenerate. The
/// total attempt budget is therefore 10x the replicate count.
const MAX_REDRAWS_PER_REPLICATE: usize = 10;

/// Paragraph scores of one book plus the book's membership class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookGroup {
    pub doc_id: String,
    pub positive: bool,
    pub rates: Vec<f64>,
}

/// A percentile interval plus bookkeeping about redraws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_replicates: usize,
    pub n_redraws: usize,
}

/// Empirical quantile with linear interpolation between order statistics
/// (the same convention as numpy's default / R type 7).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    if lower == upper {
        return sorted[lower];
    }
    let weight = position - lower as f64;
    sorted[lower] + weight * (sorted[upper] - sorted[lower])
}

fn percentile_interval(mut values: Vec<f64>, level: f64, n_redraws: usize) -> ConfidenceInterval {
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    ConfidenceInterval {
        low: quantile(&values, alpha),
        high: quantile(&values, 1.0 - alpha),
        level,
        n_replicates: values.len(),
        n_redraws,
    }
}

fn resample_mean(rates: &[f64], rng: &mut impl Rng) -> f64 {
    let n = rates.len();
    let mut total = 0.0;
    for _ in 0..n {
        total += rates[rng.gen_range(0..n)];
    }
    total / n as f64
}

/// Hierarchical bootstrap CI for the book-level AUROC.
///
/// Each replicate resamples books with replacement within each membership
/// class (preserving per-class book counts), then resamples paragraphs with
/// replacement within every chosen book, recomputes the book means, and
/// recomputes the book-level AUROC. Replicates whose statistic is degenerate
/// are redrawn from a fresh stream, up to 10x the replicate count in total.
pub fn hierarchical_bootstrap_ci(
    books: &[BookGroup],
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval, StatsError> {
    let pos: Vec<&BookGroup> = books.iter().filter(|b| b.positive).collect();
    let neg: Vec<&BookGroup> = books.iter().filter(|b| !b.positive).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(StatsError::DegenerateClasses);
    }
    debug_assert!(books.iter().all(|b| !b.rates.is_empty()));

    let replicate = |rep: usize| -> Result<(f64, usize), StatsError> {
        for attempt in 0..MAX_REDRAWS_PER_REPLICATE {
            let mut rng = derive_rng(
                seed,
                &[
                    b"hierarchical-bootstrap",
                    &(rep as u64).to_le_bytes(),
                    &(attempt as u64).to_le_bytes(),
                ],
            );
            let draw = |class: &[&BookGroup], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..class.len())
                    .map(|_| {
                        let book = class[rng.gen_range(0..class.len())];
                        resample_mean(&book.rates, rng)
                    })
                    .collect()
            };
            let pos_means = draw(&pos, &mut rng);
            let neg_means = draw(&neg, &mut rng);
            if let Ok(value) = auroc(&pos_means, &neg_means) {
                return Ok((value, attempt));
            }
        }
        Err(StatsError::ResampleExhausted {
            attempts: MAX_REDRAWS_PER_REPLICATE * n_boot,
        })
    };

    let outcomes: Result<Vec<(f64, usize)>, StatsError> =
        (0..n_boot).into_par_iter().map(replicate).collect();
    let outcomes = outcomes?;
    let n_redraws = outcomes.iter().map(|(_, redraws)| redraws).sum();
    let values = outcomes.into_iter().map(|(v, _)| v).collect();
    Ok(percentile_interval(values, level, n_redraws))
}

/// Flat class-stratified bootstrap CI for the paragraph-level AUROC:
/// each replicate resamples the positive and negative paragraph scores
/// with replacement, preserving class sizes.
pub fn flat_bootstrap_ci(
    pos: &[f64],
    neg: &[f64],
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval, StatsError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::DegenerateClasses);
    }
    let values: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_rng(seed, &[b"flat-bootstrap", &(rep as u64).to_le_bytes()]);
            let draw = |scores: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..scores.len())
                    .map(|_| scores[rng.gen_range(0..scores.len())])
                    .collect()
            };
            let p = draw(pos, &mut rng);
            let n = draw(neg, &mut rng);
            auroc(&p, &n).expect("classes preserved by stratified resampling")
        })
        .collect();
    Ok(percentile_interval(values, level, 0))
}
