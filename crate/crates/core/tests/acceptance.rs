//! Acceptance suite: one test per release gate, each printing a PASS line.
//!
//! The statistical gates run against independent oracles: an exhaustive
//! pairwise AUROC, an exact big-rational binomial summation, and seeded
//! Monte Carlo replications whose score distributions equal what the mock
//! provider induces through the full pipeline (a paragraph's guess rate is
//! Binomial(k, p)/k when every permutation parses).

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decop_core::corpus::{
    label_access, membership_for_date, DocumentMeta, ModelSpec, Paragraph,
};
use decop_core::paraphrase::ParaphraseSet;
use decop_core::pipeline::{self, Pipeline, RunConfig, Stage};
use decop_core::provider::{FaultPlan, MockBehavior, MockClient, MockSettings};
use decop_core::quiz::{enumerate_permutations, render_quiz_prompt, Choice, QuizInstance};
use decop_core::simulator::{expected_paragraph_auroc, SyntheticConfig};
use decop_core::stats::{
    auroc, balanced_auroc, hierarchical_bootstrap_ci, papers_method_auroc, AccessSplit,
    AurocMethod, BalanceBase, BookGroup,
};
use decop_core::{AccessLabel, MembershipLabel};

/// Exhaustive pairwise Mann-Whitney oracle, independent of the rank-based
/// implementation under test.
fn pairwise_auroc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut total = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                total += 1.0;
            } else if p == n {
                total += 0.5;
            }
        }
    }
    total / (pos.len() as f64 * neg.len() as f64)
}

/// Exact AUROC between Binomial(k, pm)/k and Binomial(k, pn)/k by direct
/// big-rational summation over all (k+1)^2 outcome pairs.
fn exact_binomial_auroc_oracle(pm: (i64, i64), pn: (i64, i64), k: u32) -> f64 {
    use num::rational::BigRational;
    use num::traits::{One, Pow, ToPrimitive, Zero};
    use num::BigInt;

    let choose = |n: u32, r: u32| -> BigInt {
        let mut value = BigInt::one();
        for i in 0..r {
            value = value * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        value
    };
    let pmf = |p: (i64, i64)| -> Vec<BigRational> {
        let p = BigRational::new(BigInt::from(p.0), BigInt::from(p.1));
        let q: BigRational = BigRational::one() - &p;
        (0..=k)
            .map(|i| {
                BigRational::from(choose(k, i))
                    * p.clone().pow(i as i32)
                    * q.clone().pow((k - i) as i32)
            })
            .collect()
    };
    let pm = pmf(pm);
    let pn = pmf(pn);
    let mut total = BigRational::zero();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    for i in 0..=k as usize {
        for j in 0..=k as usize {
            if i > j {
                total += &pm[i] * &pn[j];
            } else if i == j {
                total += &half * &pm[i] * &pn[j];
            }
        }
    }
    total.to_f64().expect("ratio fits f64")
}

/// Guess rate of one paragraph under correct-answer probability `p`: the
/// same Binomial(k, p)/k law the mock provider induces end to end.
fn sample_rate(k: u32, p: f64, rng: &mut ChaCha8Rng) -> f64 {
    let successes: u32 = (0..k).map(|_| u32::from(rng.gen::<f64>() < p)).sum();
    f64::from(successes) / f64::from(k)
}

/// Member/non-member paragraph rates at the standard synthetic geometry.
struct SampledCorpus {
    member_books: Vec<Vec<f64>>,
    nonmember_books: Vec<Vec<f64>>,
}

impl SampledCorpus {
    fn generate(
        n_member: usize,
        n_nonmember: usize,
        ppb: usize,
        p_member: f64,
        p_nonmember: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw_books = |n: usize, p: f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..ppb).map(|_| sample_rate(24, p, &mut rng)).collect())
                .collect()
        };
        SampledCorpus {
            member_books: draw_books(n_member, p_member),
            nonmember_books: draw_books(n_nonmember, p_nonmember),
        }
    }

    fn paragraph_scores(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.member_books.iter().flatten().copied().collect(),
            self.nonmember_books.iter().flatten().copied().collect(),
        )
    }

    fn book_means(&self) -> (Vec<f64>, Vec<f64>) {
        let mean = |rates: &Vec<f64>| rates.iter().sum::<f64>() / rates.len() as f64;
        (
            self.member_books.iter().map(mean).collect(),
            self.nonmember_books.iter().map(mean).collect(),
        )
    }

    fn book_groups(&self) -> Vec<BookGroup> {
        let mut groups = Vec::new();
        for (i, rates) in self.member_books.iter().enumerate() {
            groups.push(BookGroup {
                doc_id: format!("m{i}"),
                positive: true,
                rates: rates.clone(),
            });
        }
        for (i, rates) in self.nonmember_books.iter().enumerate() {
            groups.push(BookGroup {
                doc_id: format!("n{i}"),
                positive: false,
                rates: rates.clone(),
            });
        }
        groups
    }
}

#[test]
fn criterion_1_auroc_matches_exhaustive_pairwise_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC01);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n_pos = rng.gen_range(1..=50);
        let n_neg = rng.gen_range(1..=50);
        // lattice scores with a continuous admixture force plenty of ties
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if rng.gen_range(0..10) < 7 {
                        f64::from(rng.gen_range(0..=24u32)) / 24.0
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        };
        let pos = draw(n_pos);
        let neg = draw(n_neg);
        let fast = auroc(&pos, &neg).expect("non-empty classes");
        let oracle = pairwise_auroc_oracle(&pos, &neg);
        worst = worst.max((fast - oracle).abs());
    }
    assert!(
        worst <= 1e-12,
        "rank-based AUROC deviates from pairwise oracle by {worst:e}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 took {elapsed:?}");
    println!("ACCEPTANCE 1 auroc-oracle-equivalence: PASS (max |diff| {worst:.2e}, {elapsed:?})");
}

#[test]
fn criterion_2_pipeline_recovers_binomial_oracle_auroc() {
    let start = Instant::now();

    // independent exact-rational oracle pins the analytic value
    let oracle = exact_binomial_auroc_oracle((4, 5), (1, 2), 24);
    assert!(
        (oracle - 0.987_273_419_471_947_2).abs() < 1e-15,
        "rational oracle drifted: {oracle}"
    );
    let analytic = expected_paragraph_auroc(0.8, 0.5, 24);
    assert!(
        (analytic - oracle).abs() <= 1e-12,
        "log-space summation {analytic} vs exact oracle {oracle}"
    );

    // full pipeline at the reference geometry, no network anywhere
    let dir = tempfile::tempdir().unwrap();
    let synth = SyntheticConfig {
        n_books_member: 30,
        n_books_nonmember: 8,
        paragraphs_per_book: 200,
        p_member: 0.8,
        p_nonmember: 0.5,
        p_public_boost: 0.0,
        quizzes_per_paragraph: 24,
        seed: 0xAC02,
    };
    let config = RunConfig::synthetic(dir.path(), synth);
    pipeline::simulate(&config).unwrap();
    pipeline::run(config.clone(), &Stage::ALL).unwrap();

    let paths = Pipeline::new(config).unwrap().paths().clone();
    let analysis = decop_core::report::read_analysis(&paths.analysis()).unwrap();
    let cell = analysis.models[0]
        .auroc
        .iter()
        .find(|c| c.method == AurocMethod::ParagraphLevel && c.split == AccessSplit::All)
        .expect("paragraph-level cell");
    assert_eq!(cell.n_pos, 30 * 200);
    assert_eq!(cell.n_neg, 8 * 200);
    let measured = cell.value.expect("non-degenerate");
    assert!(
        (measured - analytic).abs() <= 0.02,
        "pipeline paragraph AUROC {measured} vs analytic {analytic}"
    );

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "criterion 2 took {elapsed:?}, budget is 2 minutes"
    );
    println!(
        "ACCEPTANCE 2 binomial-oracle-recovery: PASS (pipeline {measured:.4} vs analytic {analytic:.4}, {elapsed:?})"
    );
}

#[test]
fn criterion_3_null_calibration_stays_at_chance() {
    // Identical member and non-member probabilities: every AUROC flavor
    // should read as chance. Book-level AUROC with 30/8 books has a null
    // standard deviation around 0.12, so the bounds are checked on the mean
    // over the 20 replications. The thresholded binary method is evaluated
    // on paragraph units, where its optimize-then-score bias is small; on
    // 30/8 book means that bias alone is ~0.10 and would swamp the bound.
    let reps = 20;
    let mut para_sum = 0.0;
    let mut book_sum = 0.0;
    let mut papers_para_sum = 0.0;
    let mut papers_book_sum = 0.0;
    for rep in 0..reps {
        let corpus = SampledCorpus::generate(30, 8, 200, 0.5, 0.5, 0xAC03_00 + rep);
        let (para_pos, para_neg) = corpus.paragraph_scores();
        let (book_pos, book_neg) = corpus.book_means();
        para_sum += auroc(&para_pos, &para_neg).unwrap();
        book_sum += auroc(&book_pos, &book_neg).unwrap();
        papers_para_sum += papers_method_auroc(&para_pos, &para_neg).unwrap();
        papers_book_sum += papers_method_auroc(&book_pos, &book_neg).unwrap();
    }
    let para_mean = para_sum / reps as f64;
    let book_mean = book_sum / reps as f64;
    let papers_mean = papers_para_sum / reps as f64;
    let papers_book_mean = papers_book_sum / reps as f64;

    assert!(
        (para_mean - 0.5).abs() <= 0.05,
        "null paragraph AUROC mean {para_mean}"
    );
    assert!(
        (book_mean - 0.5).abs() <= 0.05,
        "null book AUROC mean {book_mean}"
    );
    assert!(
        (0.5..=0.6).contains(&papers_mean),
        "null thresholded-binary AUROC mean {papers_mean}"
    );
    println!(
        "ACCEPTANCE 3 null-calibration: PASS (paragraph {para_mean:.4}, book {book_mean:.4}, \
         binary {papers_mean:.4}; binary on book means {papers_book_mean:.4} for reference)"
    );
}

#[test]
fn criterion_4_permutations_and_prompt_golden() {
    // 100 random paraphrase sets: 24 unique instances, balanced answer keys
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC04);
    // word counts stay within a band so every set passes length validation
    let mut random_text = |tag: &str| -> String {
        let n = rng.gen_range(9..=13);
        let mut words: Vec<String> =
            (0..n).map(|i| format!("{tag}{}", rng.gen_range(0..97) + i)).collect();
        words.insert(0, "Text".into());
        words.join(" ")
    };
    for case in 0..100 {
        let set = ParaphraseSet {
            paragraph_id: format!("doc:{case}:0"),
            original: random_text("orig"),
            paraphrases: [random_text("pa"), random_text("pb"), random_text("pc")],
        }
        .validated()
        .unwrap_or_else(|e| panic!("case {case} failed validation: {e}"));
        let instances = enumerate_permutations(&set);
        assert_eq!(instances.len(), 24);
        let unique: std::collections::HashSet<&[String; 4]> =
            instances.iter().map(|q| &q.options).collect();
        assert_eq!(unique.len(), 24, "case {case} has duplicate permutations");
        let mut histogram = [0usize; 4];
        for q in &instances {
            histogram[q.answer_key.index()] += 1;
        }
        assert_eq!(histogram, [6, 6, 6, 6], "case {case} answer keys unbalanced");

        let doc = DocumentMeta {
            doc_id: "doc".into(),
            title: "T".into(),
            author: "A".into(),
            publication_date: "2020-01-01".parse().unwrap(),
            n_chapters: 1,
            exclude_from_scoring: false,
        };
        let rendered: std::collections::HashSet<String> = instances
            .iter()
            .map(|q| render_quiz_prompt(q, &doc).1)
            .collect();
        assert_eq!(rendered.len(), 24, "case {case} rendered prompts not distinct");
    }

    // golden prompt fixture
    let set = ParaphraseSet {
        paragraph_id: "fixture:1:0".into(),
        original: "Replicas vote on each entry before it commits, and a majority of \
                   acknowledgements makes the write durable."
            .into(),
        paraphrases: [
            "The scheduler keeps a sorted queue of pending work and drains it in priority order."
                .into(),
            "Workers lease tasks from a shared queue and renew their leases while they make progress."
                .into(),
            "A supervisor restarts failed workers using exponential backoff with a jitter factor."
                .into(),
        ],
    }
    .validated()
    .unwrap();
    // permutation 9 maps (A,B,C,D) <- (paraphrase1, paraphrase2, paraphrase3, original)
    let instance = QuizInstance::from_set(&set, 9);
    assert_eq!(instance.answer_key, Choice::D);
    let doc = DocumentMeta {
        doc_id: "fixture".into(),
        title: "Systems Field Guide".into(),
        author: "Jordan Writer".into(),
        publication_date: "2021-05-01".parse().unwrap(),
        n_chapters: 8,
        exclude_from_scoring: false,
    };
    let (system, user) = render_quiz_prompt(&instance, &doc);
    assert_eq!(
        system,
        "You are a helpful assistant. You must answer using only the provided options A, B, C, \
         or D, you may not decline to answer."
    );
    let golden = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/quiz_prompt_golden.txt"),
    )
    .unwrap();
    assert_eq!(user, golden, "rendered prompt diverges from golden file");
    println!("ACCEPTANCE 4 permutation-invariants-and-golden-prompt: PASS");
}

#[test]
fn criterion_5_hierarchical_bootstrap_coverage() {
    // Criterion-2 sizes (30/8 books, 200 paragraphs, k=24) with a small
    // planted gap so the book-level statistic is genuinely uncertain; at the
    // criterion-2 gap of 0.3 every book mean separates by ~30 sigma and the
    // interval degenerates to a point. 1000 bootstrap replicates per
    // replication, 200 replications.
    let start = Instant::now();
    let (p_member, p_nonmember) = (0.52, 0.50);
    let theta = expected_paragraph_auroc(p_member, p_nonmember, 24 * 200);
    assert!(
        (theta - 0.975_009_644_047_8).abs() < 1e-9,
        "analytic book-level AUROC drifted: {theta}"
    );

    let reps = 200;
    let mut hits = 0usize;
    for rep in 0..reps {
        let corpus =
            SampledCorpus::generate(30, 8, 200, p_member, p_nonmember, 0xAC05_000 + rep);
        let books = corpus.book_groups();
        let ci = hierarchical_bootstrap_ci(&books, 1000, 0.95, 0xAC05_000 + rep).unwrap();
        if ci.low <= theta && theta <= ci.high {
            hits += 1;
        }
    }
    let coverage = hits as f64 / reps as f64;
    let elapsed = start.elapsed();
    assert!(
        coverage >= 0.90,
        "95% CI covered the analytic AUROC in only {coverage:.3} of replications"
    );
    assert!(
        elapsed.as_secs_f64() < 1800.0,
        "criterion 5 took {elapsed:?}, budget is 30 minutes"
    );
    println!(
        "ACCEPTANCE 5 hierarchical-bootstrap-coverage: PASS (coverage {coverage:.3} of target {theta:.4}, {elapsed:?})"
    );
}

#[test]
fn criterion_6_balanced_methods_identity_and_robustness() {
    // exactly balanced data: balanced variants equal their base bit-for-bit
    let corpus = SampledCorpus::generate(9, 9, 40, 0.8, 0.5, 0xAC06);
    let (para_pos, para_neg) = corpus.paragraph_scores();
    let (book_pos, book_neg) = corpus.book_means();
    assert_eq!(para_pos.len(), para_neg.len());
    for (name, pos, neg, base) in [
        ("paragraph", &para_pos, &para_neg, BalanceBase::Plain),
        ("book", &book_pos, &book_neg, BalanceBase::Plain),
        ("papers", &book_pos, &book_neg, BalanceBase::PapersMethod),
    ] {
        let base_value = match base {
            BalanceBase::Plain => auroc(pos, neg).unwrap(),
            BalanceBase::PapersMethod => papers_method_auroc(pos, neg).unwrap(),
        };
        let balanced = balanced_auroc(pos, neg, base, 100, 0xAC06).unwrap();
        assert_eq!(
            balanced.to_bits(),
            base_value.to_bits(),
            "balanced {name} differs from its base on balanced classes"
        );
    }

    // imbalanced at the reference proportions: 9,000 member vs 2,000
    // non-member paragraphs, criterion-2 effect sizes
    let imbalanced = SampledCorpus::generate(45, 10, 200, 0.8, 0.5, 0xAC06 + 1);
    let (pos, neg) = imbalanced.paragraph_scores();
    assert_eq!((pos.len(), neg.len()), (9000, 2000));
    let unbalanced = auroc(&pos, &neg).unwrap();
    let balanced = balanced_auroc(&pos, &neg, BalanceBase::Plain, 100, 0xAC06 + 2).unwrap();
    let gap = (balanced - unbalanced).abs();
    assert!(
        gap < 0.02,
        "balanced {balanced} vs unbalanced {unbalanced} differ by {gap}"
    );
    println!(
        "ACCEPTANCE 6 balanced-method-identity: PASS (imbalanced gap {gap:.5})"
    );
}

#[test]
fn criterion_7_split_labeling_conformance() {
    // publication dates of the 34-book reference corpus; ids are positional
    let dates = [
        "2021-09-14", "2022-06-10", "2021-04-18", "2022-11-10", "2023-06-29", "2024-03-11",
        "2023-06-26", "2023-12-11", "2023-01-06", "2020-05-12", "2021-04-20", "2021-10-03",
        "2024-07-25", "2022-09-02", "2024-02-07", "2023-10-17", "2022-04-15", "2020-04-14",
        "2023-11-13", "2020-04-08", "2020-01-23", "2023-01-10", "2020-06-25", "2024-07-09",
        "2020-06-17", "2022-08-05", "2024-05-16", "2022-10-17", "2023-03-09", "2021-09-08",
        "2021-10-25", "2020-03-10", "2024-03-28", "2024-06-17",
    ];
    assert_eq!(dates.len(), 34);
    let newer_models = [
        ModelSpec::new("gpt-4o-2024-08-06", "2023-10-01".parse().unwrap(), "p"),
        ModelSpec::new("gpt-4o-mini-2024-07-18", "2023-10-01".parse().unwrap(), "p"),
    ];
    let older_model = ModelSpec::new("gpt-3.5-turbo-1106", "2021-09-01".parse().unwrap(), "p");

    for model in &newer_models {
        let mut excluded = 0;
        let mut included = 0;
        for date in dates {
            let date: chrono::NaiveDate = date.parse().unwrap();
            let label = membership_for_date(date, model);
            use chrono::Datelike;
            match date.year() {
                2023 => assert_eq!(label, MembershipLabel::Excluded, "{date} vs {}", model.model_name),
                year if year < 2023 => assert_eq!(label, MembershipLabel::PotentialMember),
                _ => assert_eq!(label, MembershipLabel::NonMember),
            }
            if label == MembershipLabel::Excluded {
                excluded += 1;
            } else {
                included += 1;
            }
        }
        // all eight cutoff-year books drop out, leaving 26 testable books
        assert_eq!(excluded, 8);
        assert_eq!(included, 26);
    }
    {
        let mut excluded = 0;
        for date in dates {
            let date: chrono::NaiveDate = date.parse().unwrap();
            let label = membership_for_date(date, &older_model);
            use chrono::Datelike;
            match date.year() {
                2021 => assert_eq!(label, MembershipLabel::Excluded),
                year if year < 2021 => assert_eq!(label, MembershipLabel::PotentialMember),
                _ => assert_eq!(label, MembershipLabel::NonMember),
            }
            if label == MembershipLabel::Excluded {
                excluded += 1;
            }
        }
        // six 2021 books drop out, leaving 28 testable books
        assert_eq!(excluded, 6);
        assert_eq!(dates.len() - excluded, 28);
    }

    // access-rule boundary checks at the 1,500-character preview edge
    let paragraph = |chapter: u32, offset: usize| Paragraph {
        paragraph_id: format!("b:{chapter}:{offset}"),
        doc_id: "b".into(),
        chapter_index: chapter,
        char_offset: offset,
        text: "x".into(),
        word_count: 1,
    };
    assert_eq!(label_access(&paragraph(2, 1499)), AccessLabel::Public);
    assert_eq!(label_access(&paragraph(2, 1500)), AccessLabel::NonPublic);
    assert_eq!(label_access(&paragraph(1, 50_000)), AccessLabel::Public);
    assert_eq!(label_access(&paragraph(4, 50_000)), AccessLabel::Public);
    assert_eq!(label_access(&paragraph(3, 1500)), AccessLabel::NonPublic);
    println!("ACCEPTANCE 7 split-labeling-conformance: PASS");
}

#[test]
fn criterion_8_saturation_with_fixed_gap() {
    // Asserts that detectability at a fixed +0.05 probability gap fades as
    // the baseline rises from 0.50 to 0.95. Exact computation shows the
    // opposite on this range: score variance shrinks toward the boundary,
    // so a fixed gap separates better, and the value rises monotonically
    // from 0.635 to 0.854. The fade only begins once the member probability
    // saturates at 1.0 (baselines above 0.95), which is covered by
    // criterion_8_companion_saturation_with_capped_gap. This test is
    // expected to fail and documents the discrepancy.
    let mut values = Vec::new();
    for i in 0..10 {
        let p_n = 0.50 + 0.05 * i as f64;
        values.push((p_n, expected_paragraph_auroc(p_n + 0.05, p_n, 24)));
    }
    let mut failures = Vec::new();
    for pair in values.windows(2) {
        let ((p_prev, v_prev), (p_next, v_next)) = (pair[0], pair[1]);
        if v_next >= v_prev {
            failures.push(format!(
                "f({p_next:.2}) = {v_next:.6} >= f({p_prev:.2}) = {v_prev:.6}"
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "fixed-gap AUROC does not decrease over the sweep; it rises at every step:\n{}",
        failures.join("\n")
    );
    println!("ACCEPTANCE 8 saturation-fixed-gap: PASS");
}

#[test]
fn criterion_8_companion_saturation_with_capped_gap() {
    // The saturation effect that motivates the sweep: once the baseline
    // leaves less than the nominal gap of headroom, the member probability
    // caps at 1.0, the effective gap shrinks, and detectability decays to
    // chance. Verified by direct computation at 10 grid points of the
    // capped form across the saturated region.
    let capped = |p_n: f64| expected_paragraph_auroc((p_n + 0.05).min(1.0), p_n, 24);
    let mut prev = capped(0.95);
    for i in 1..=10 {
        let p_n = 0.95 + 0.005 * i as f64;
        let value = capped(p_n);
        assert!(
            value < prev,
            "capped-gap AUROC must decay in the saturated region (p_n = {p_n})"
        );
        prev = value;
    }
    assert!((capped(1.0) - 0.5).abs() < 1e-12);
    println!("ACCEPTANCE 8b saturation-capped-gap: PASS");
}

#[test]
fn criterion_9_determinism_and_resume() {
    let synth = SyntheticConfig {
        n_books_member: 6,
        n_books_nonmember: 3,
        paragraphs_per_book: 16,
        p_member: 0.85,
        p_nonmember: 0.5,
        p_public_boost: 0.0,
        quizzes_per_paragraph: 24,
        seed: 0xAC09,
    };

    // byte-identical report files across two fresh full runs
    let run_reports = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let config = RunConfig::synthetic(dir, synth.clone());
        pipeline::simulate(&config).unwrap();
        pipeline::run(config.clone(), &Stage::ALL).unwrap();
        let report_dir = Pipeline::new(config).unwrap().paths().report_dir();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(report_dir)
            .unwrap()
            .map(|entry| {
                let entry = entry.unwrap();
                (
                    entry.file_name().to_string_lossy().into_owned(),
                    std::fs::read(entry.path()).unwrap(),
                )
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        files
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let reports_a = run_reports(dir_a.path());
    let reports_b = run_reports(dir_b.path());
    assert_eq!(reports_a.len(), 7);
    for ((name_a, bytes_a), (name_b, bytes_b)) in reports_a.iter().zip(reports_b.iter()) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} not byte-identical across runs");
    }

    // kill the query stage mid-run; resume with zero duplicate provider calls
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::synthetic(dir.path(), synth);
    config
        .providers
        .get_mut("mock-target")
        .unwrap()
        .rate
        .retry_base_ms = 1;
    pipeline::simulate(&config).unwrap();
    let target = Arc::new(MockClient::new(MockSettings {
        behavior: MockBehavior::Synthetic {
            p_member: 0.85,
            p_nonmember: 0.5,
            p_public_boost: 0.0,
            seed: 0xAC09,
        },
        latency_ms: 0,
    }));
    Pipeline::new(config.clone())
        .unwrap()
        .with_mock_override("mock-target", Arc::clone(&target))
        .run(&[Stage::Paraphrase, Stage::Quiz])
        .unwrap();

    let total_instances = 9 * 16 * 24;
    target.set_fault(FaultPlan {
        dead_from_call: Some(1000),
        ..FaultPlan::default()
    });
    Pipeline::new(config.clone())
        .unwrap()
        .with_mock_override("mock-target", Arc::clone(&target))
        .run(&[Stage::Query])
        .unwrap();
    let after_outage = target.stats().distinct_fingerprints_served();
    assert!(after_outage < total_instances, "outage should interrupt the batch");

    target.set_fault(FaultPlan::default());
    Pipeline::new(config.clone())
        .unwrap()
        .with_mock_override("mock-target", Arc::clone(&target))
        .run(&[Stage::Query, Stage::Score, Stage::Analyze, Stage::Report])
        .unwrap();
    assert_eq!(
        target.stats().distinct_fingerprints_served(),
        total_instances
    );
    assert_eq!(
        target.stats().duplicate_successes(),
        0,
        "a cached response was re-requested"
    );
    println!("ACCEPTANCE 9 determinism-and-resume: PASS");
}
