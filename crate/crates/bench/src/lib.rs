//! Shared fixture builders for the benchmark targets.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decop_core::stats::BookGroup;

/// Binomial(24, p)/24 guess-rate samples, the score shape the pipeline feeds
/// into every statistic.
pub fn guess_rates(n: usize, p: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let successes: u32 = (0..24).map(|_| u32::from(rng.gen::<f64>() < p)).sum();
            f64::from(successes) / 24.0
        })
        .collect()
}

/// Book-grouped rates at the standard synthetic geometry.
pub fn book_groups(n_member: usize, n_nonmember: usize, ppb: usize, seed: u64) -> Vec<BookGroup> {
    let mut groups = Vec::with_capacity(n_member + n_nonmember);
    for i in 0..n_member {
        groups.push(BookGroup {
            doc_id: format!("m{i}"),
            positive: true,
            rates: guess_rates(ppb, 0.8, seed ^ (i as u64)),
        });
    }
    for i in 0..n_nonmember {
        groups.push(BookGroup {
            doc_id: format!("n{i}"),
            positive: false,
            rates: guess_rates(ppb, 0.5, seed ^ (0xFFFF + i as u64)),
        });
    }
    groups
}
