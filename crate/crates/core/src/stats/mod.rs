//! AUROC variants and bootstrap confidence intervals.
//!
//! Six AUROC methods are supported: raw paragraph-level, raw book-level,
//! the thresholded binary method (Youden-optimal threshold, then AUROC on
//! the binary predictions), and a class-balanced mean-of-subsets variant of
//! each. AUROC uses the exact Mann-Whitney formulation with half credit for
//! ties, never a trapezoid approximation.

mod bootstrap;

pub use bootstrap::{
    flat_bootstrap_ci, hierarchical_bootstrap_ci, BookGroup, ConfidenceInterval,
    BOOTSTRAP_SAMPLES, CONFIDENCE_LEVEL,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AccessLabel;
use crate::derive_rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("both score classes must be non-empty")]
    DegenerateClasses,
    #[error("resampling exhausted after {attempts} attempts")]
    ResampleExhausted { attempts: usize },
}

/// A scored unit (paragraph or book) with its membership class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub unit_id: String,
    pub score: f64,
    /// `true` for potential members (positive class), `false` for known
    /// non-members (negative class).
    pub positive: bool,
    /// Book grouping key for hierarchical resampling.
    pub doc_id: String,
}

/// Which AUROC computation a report row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AurocMethod {
    ParagraphLevel,
    BookLevel,
    PapersMethodBinary,
    BalancedParagraph,
    BalancedBook,
    BalancedPapersMethod,
}

impl AurocMethod {
    pub const ALL: [AurocMethod; 6] = [
        AurocMethod::ParagraphLevel,
        AurocMethod::BookLevel,
        AurocMethod::PapersMethodBinary,
        AurocMethod::BalancedParagraph,
        AurocMethod::BalancedBook,
        AurocMethod::BalancedPapersMethod,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AurocMethod::ParagraphLevel => "paragraph_level",
            AurocMethod::BookLevel => "book_level",
            AurocMethod::PapersMethodBinary => "papers_method_binary",
            AurocMethod::BalancedParagraph => "balanced_paragraph",
            AurocMethod::BalancedBook => "balanced_book",
            AurocMethod::BalancedPapersMethod => "balanced_papers_method",
        }
    }
}

/// Access-split filter used throughout scoring and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessSplit {
    All,
    Public,
    NonPublic,
}

impl AccessSplit {
    pub const ALL_SPLITS: [AccessSplit; 3] =
        [AccessSplit::All, AccessSplit::Public, AccessSplit::NonPublic];

    pub fn matches(self, label: AccessLabel) -> bool {
        match self {
            AccessSplit::All => true,
            AccessSplit::Public => label == AccessLabel::Public,
            AccessSplit::NonPublic => label == AccessLabel::NonPublic,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AccessSplit::All => "all",
            AccessSplit::Public => "public",
            AccessSplit::NonPublic => "non_public",
        }
    }
}

/// One AUROC value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AurocReport {
    pub method: AurocMethod,
    pub split: AccessSplit,
    pub value: f64,
    /// 95% percentile bootstrap interval where computed. Percentile CIs can
    /// exclude the point estimate in pathological resamples; both are
    /// reported as-is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
}

/// Exact Mann-Whitney AUROC: the fraction of (positive, negative) pairs
/// where the positive scores higher, ties counted half.
///
/// Computed via average ranks, which is algebraically identical to the
/// pairwise mean but O(n log n).
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64, StatsError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::DegenerateClasses);
    }
    let n_pos = pos.len();
    let n_neg = neg.len();
    let mut combined: Vec<(f64, bool)> = Vec::with_capacity(n_pos + n_neg);
    combined.extend(pos.iter().map(|&s| (s, true)));
    combined.extend(neg.iter().map(|&s| (s, false)));
    combined.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Rank-sum of the positive class with average ranks over tied groups.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < combined.len() {
        let mut j = i;
        while j + 1 < combined.len() && combined[j + 1].0 == combined[i].0 {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 average to (i + j + 2) / 2
        let avg_rank = (i + j + 2) as f64 / 2.0;
        let ties_pos = combined[i..=j].iter().filter(|(_, is_pos)| *is_pos).count();
        rank_sum_pos += avg_rank * ties_pos as f64;
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Rule used to pick the binarization threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdCriterion {
    /// Maximize Youden's J = TPR - FPR.
    #[default]
    YoudenJ,
    /// Maximize raw accuracy (TP + TN) / n.
    Accuracy,
}

fn count_above(sorted: &[f64], threshold: f64) -> usize {
    sorted.len() - sorted.partition_point(|&s| s <= threshold)
}

/// Scans candidate thresholds (midpoints between adjacent distinct pooled
/// scores, plus the two infinities) and returns the one maximizing the
/// criterion; ties break toward the smallest threshold. A unit counts as
/// predicted-positive when its score is strictly above the threshold.
pub fn optimal_threshold_by(
    pos: &[f64],
    neg: &[f64],
    criterion: ThresholdCriterion,
) -> Result<f64, StatsError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::DegenerateClasses);
    }
    let mut pooled: Vec<f64> = pos.iter().chain(neg.iter()).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let mut candidates = Vec::with_capacity(pooled.len() + 1);
    candidates.push(f64::NEG_INFINITY);
    candidates.extend(pooled.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(f64::INFINITY);

    let mut sorted_pos = pos.to_vec();
    let mut sorted_neg = neg.to_vec();
    sorted_pos.sort_by(f64::total_cmp);
    sorted_neg.sort_by(f64::total_cmp);
    let (n_pos, n_neg) = (pos.len() as f64, neg.len() as f64);

    let mut best = f64::NEG_INFINITY;
    let mut best_threshold = f64::NEG_INFINITY;
    for &t in &candidates {
        let tpr = count_above(&sorted_pos, t) as f64 / n_pos;
        let fpr = count_above(&sorted_neg, t) as f64 / n_neg;
        let objective = match criterion {
            ThresholdCriterion::YoudenJ => tpr - fpr,
            ThresholdCriterion::Accuracy => (tpr * n_pos + (1.0 - fpr) * n_neg) / (n_pos + n_neg),
        };
        // strict improvement keeps the smallest threshold on ties
        if objective > best {
            best = objective;
            best_threshold = t;
        }
    }
    Ok(best_threshold)
}

/// [`optimal_threshold_by`] with the default Youden's J criterion.
pub fn optimal_threshold(pos: &[f64], neg: &[f64]) -> Result<f64, StatsError> {
    optimal_threshold_by(pos, neg, ThresholdCriterion::YoudenJ)
}

/// Thresholded binary AUROC: binarize every unit at the optimal threshold,
/// then compute AUROC on the binary predictions. Equals (TPR + TNR) / 2 at
/// that threshold, and never falls below 0.5 since the threshold is
/// optimized on the same data.
pub fn papers_method_auroc(pos: &[f64], neg: &[f64]) -> Result<f64, StatsError> {
    let threshold = optimal_threshold(pos, neg)?;
    let binarize = |scores: &[f64]| -> Vec<f64> {
        scores
            .iter()
            .map(|&s| if s > threshold { 1.0 } else { 0.0 })
            .collect()
    };
    auroc(&binarize(pos), &binarize(neg))
}

/// Base statistic recomputed on each balanced subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceBase {
    /// Plain Mann-Whitney AUROC on the subset.
    Plain,
    /// Thresholded binary AUROC on the subset.
    PapersMethod,
}

/// Default number of balanced subsets.
pub const BALANCED_SUBSETS: usize = 100;

fn subsample_indices(n: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    // partial Fisher-Yates; deterministic given the rng stream
    let mut indices: Vec<usize> = (0..n).collect();
    for j in 0..m {
        let k = j + rng.gen_range(0..n - j);
        indices.swap(j, k);
    }
    indices.truncate(m);
    indices
}

/// Mean of the base statistic over `n_subsets` class-balanced subsets.
///
/// Each subset keeps the minority class whole and subsamples the majority
/// class without replacement down to the minority size. With already
/// balanced classes every subset is the full data, so the result equals the
/// base statistic exactly.
pub fn balanced_auroc(
    pos: &[f64],
    neg: &[f64],
    base: BalanceBase,
    n_subsets: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::DegenerateClasses);
    }
    let compute = |p: &[f64], n: &[f64]| match base {
        BalanceBase::Plain => auroc(p, n),
        BalanceBase::PapersMethod => papers_method_auroc(p, n),
    };
    if pos.len() == neg.len() {
        return compute(pos, neg);
    }

    let (majority, minority_len, pos_is_majority) = if pos.len() > neg.len() {
        (pos, neg.len(), true)
    } else {
        (neg, pos.len(), false)
    };
    let mut total = 0.0;
    for subset in 0..n_subsets {
        let mut rng = derive_rng(seed, &[b"balanced-subset", &(subset as u64).to_le_bytes()]);
        let picked: Vec<f64> = subsample_indices(majority.len(), minority_len, &mut rng)
            .into_iter()
            .map(|i| majority[i])
            .collect();
        let value = if pos_is_majority {
            compute(&picked, neg)?
        } else {
            compute(pos, &picked)?
        };
        total += value;
    }
    Ok(total / n_subsets as f64)
}
