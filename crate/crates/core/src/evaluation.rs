//! Offline evaluation: random hold-out split, top-N ranking metrics
//! (precision, recall, NDCG), and the Kendall-tau comparison of algorithm
//! orderings across datasets.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::InteractionSet;
use crate::error::{Error, Result};
use crate::recommenders::{fit, Algorithm, HyperParams, RatingsView, RecModel};

/// Disjoint train/test partition of a dataset's interactions, both sides
/// expressed in the parent dataset's internal index space.
#[derive(Debug, Clone)]
pub struct SplitPair {
    user_count: usize,
    item_count: usize,
    train_rows: Vec<Vec<u32>>,
    test_rows: Vec<Vec<u32>>,
    seed: u64,
    test_fraction: f64,
}

impl SplitPair {
    /// Builds a split from explicit per-user rows. Rows must be sorted and
    /// disjoint per user; intended for tests that need a controlled split.
    pub fn from_parts(
        item_count: usize,
        train_rows: Vec<Vec<u32>>,
        test_rows: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if train_rows.len() != test_rows.len() {
            return Err(Error::invalid_argument(
                "train and test must cover the same users",
            ));
        }
        for (u, (train, test)) in train_rows.iter().zip(&test_rows).enumerate() {
            for &i in train.iter().chain(test) {
                if i as usize >= item_count {
                    return Err(Error::invalid_argument(format!(
                        "user {u}: item {i} out of range"
                    )));
                }
            }
            if test.iter().any(|i| train.binary_search(i).is_ok()) {
                return Err(Error::invalid_argument(format!(
                    "user {u}: train and test overlap"
                )));
            }
        }
        Ok(SplitPair {
            user_count: train_rows.len(),
            item_count,
            train_rows,
            test_rows,
            seed: 0,
            test_fraction: 0.0,
        })
    }

    pub fn train_view(&self) -> RatingsView<'_> {
        RatingsView::new(self.user_count, self.item_count, &self.train_rows)
    }

    pub fn train_rows(&self) -> &[Vec<u32>] {
        &self.train_rows
    }

    pub fn test_rows(&self) -> &[Vec<u32>] {
        &self.test_rows
    }

    pub fn train_len(&self) -> usize {
        self.train_rows.iter().map(|r| r.len()).sum()
    }

    pub fn test_len(&self) -> usize {
        self.test_rows.iter().map(|r| r.len()).sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_fraction
    }
}

/// Uniform random hold-out: `round(fraction * |interactions|)` interactions
/// become the test side. Deterministic per seed.
pub fn random_split(ds: &InteractionSet, fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid_argument(format!(
            "test fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let total = ds.len();
    let test_size = (fraction * total as f64).round() as usize;

    // partial Fisher-Yates over the flat interaction order picks the test set
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..test_size.min(total.saturating_sub(1)) {
        let j = rng.random_range(i..total);
        order.swap(i, j);
    }
    let mut in_test = vec![false; total];
    for &idx in order.iter().take(test_size) {
        in_test[idx] = true;
    }

    let mut train_rows: Vec<Vec<u32>> = vec![Vec::new(); ds.user_count()];
    let mut test_rows: Vec<Vec<u32>> = vec![Vec::new(); ds.user_count()];
    for (flat, (u, i)) in ds.pairs().enumerate() {
        if in_test[flat] {
            test_rows[u as usize].push(i);
        } else {
            train_rows[u as usize].push(i);
        }
    }

    Ok(SplitPair {
        user_count: ds.user_count(),
        item_count: ds.item_count(),
        train_rows,
        test_rows,
        seed,
        test_fraction: fraction,
    })
}

/// Averaged top-`n` metrics over the users with at least one test
/// interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
}

/// Ranking metrics of one model on one split.
///
/// Per user: precision = hits / n, recall = hits / |test items|, NDCG with
/// binary relevance, discount 1 / log2(rank + 1), and the ideal DCG over
/// min(n, |test items|) positions.
pub fn evaluate(split: &SplitPair, model: &RecModel, n: usize) -> Metrics {
    let mut sum_precision = 0.0;
    let mut sum_recall = 0.0;
    let mut sum_ndcg = 0.0;
    let mut evaluated = 0usize;

    for u in 0..split.user_count as u32 {
        let test = &split.test_rows[u as usize];
        if test.is_empty() {
            continue;
        }
        let recs = model.recommend(u, n, &split.train_rows[u as usize]);
        let mut hits = 0usize;
        let mut dcg = 0.0;
        for (rank0, item) in recs.iter().enumerate() {
            if test.binary_search(item).is_ok() {
                hits += 1;
                dcg += 1.0 / ((rank0 as f64 + 2.0).log2());
            }
        }
        let ideal: f64 = (0..n.min(test.len()))
            .map(|rank0| 1.0 / ((rank0 as f64 + 2.0).log2()))
            .sum();
        sum_precision += hits as f64 / n as f64;
        sum_recall += hits as f64 / test.len() as f64;
        sum_ndcg += if ideal > 0.0 { dcg / ideal } else { 0.0 };
        evaluated += 1;
    }

    if evaluated == 0 {
        return Metrics {
            precision: 0.0,
            recall: 0.0,
            ndcg: 0.0,
        };
    }
    let count = evaluated as f64;
    Metrics {
        precision: sum_precision / count,
        recall: sum_recall / count,
        ndcg: sum_ndcg / count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Precision,
    Recall,
    Ndcg,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::Ndcg];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Ndcg => "ndcg",
        }
    }

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::Ndcg => m.ndcg,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "precision" => Ok(Metric::Precision),
            "recall" => Ok(Metric::Recall),
            "ndcg" => Ok(Metric::Ndcg),
            other => Err(Error::invalid_argument(format!(
                "unknown metric {other:?} (expected precision|recall|ndcg)"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One algorithm's metrics within a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Per-algorithm evaluation results on one dataset split, with enough
/// metadata to reproduce the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<AlgorithmResult>,
    /// Content hash of the evaluated dataset.
    pub fingerprint: String,
    pub seed: u64,
    pub n: usize,
}

impl EvalReport {
    pub fn get(&self, algorithm: Algorithm) -> Option<&Metrics> {
        self.records
            .iter()
            .find(|r| r.algorithm == algorithm)
            .map(|r| &r.metrics)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.records.iter().map(|r| r.algorithm).collect()
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        serde_json::from_reader(reader).map_err(|e| Error::ModelFormat(e.to_string()))
    }
}

/// Splits once, fits every algorithm on the same train view, evaluates all
/// of them at top-`n`. Per-algorithm fit seeds derive from `seed` so the
/// whole report is reproducible from one number.
pub fn run_suite(
    ds: &InteractionSet,
    algorithms: &[Algorithm],
    hp: &HyperParams,
    fraction: f64,
    seed: u64,
    n: usize,
) -> Result<EvalReport> {
    if algorithms.is_empty() {
        return Err(Error::invalid_argument("no algorithms requested"));
    }
    if ds.is_empty() {
        return Err(Error::invalid_argument("cannot evaluate an empty dataset"));
    }
    let split = random_split(ds, fraction, seed)?;
    let view = split.train_view();
    let mut records = Vec::with_capacity(algorithms.len());
    for (idx, &algorithm) in algorithms.iter().enumerate() {
        let fit_seed = seed
            .wrapping_mul(0x5851_F42D_4C95_7F2D)
            .wrapping_add(idx as u64 + 1);
        let model = fit(algorithm, view, hp, fit_seed)?;
        let metrics = evaluate(&split, &model, n);
        records.push(AlgorithmResult { algorithm, metrics });
    }
    Ok(EvalReport {
        records,
        fingerprint: ds.fingerprint(),
        seed,
        n,
    })
}

/// Kendall-tau comparison of the algorithm rankings two reports induce
/// under one metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingComparison {
    pub kendall_tau: f64,
    pub concordant_pairs: usize,
    pub discordant_pairs: usize,
    /// The algorithm pairs whose relative order flips between the reports.
    pub discordant: Vec<(Algorithm, Algorithm)>,
}

/// Compares the algorithm orderings of two reports under `metric`.
/// Tau is (concordant - discordant) / total pairs; ties count as neither.
pub fn compare_orderings(
    a: &EvalReport,
    b: &EvalReport,
    metric: Metric,
) -> Result<OrderingComparison> {
    let algos = a.algorithms();
    let mut b_algos = b.algorithms();
    let mut a_sorted = algos.clone();
    a_sorted.sort_by_key(|x| x.name());
    b_algos.sort_by_key(|x| x.name());
    if a_sorted != b_algos {
        return Err(Error::invalid_argument(format!(
            "reports cover different algorithm sets: {:?} vs {:?}",
            a_sorted.iter().map(|x| x.name()).collect::<Vec<_>>(),
            b_algos.iter().map(|x| x.name()).collect::<Vec<_>>(),
        )));
    }

    let mut concordant = 0usize;
    let mut discordant = 0usize;
    let mut flipped = Vec::new();
    for (i, &x) in algos.iter().enumerate() {
        for &y in algos.iter().skip(i + 1) {
            let da = metric.of(a.get(x).unwrap()) - metric.of(a.get(y).unwrap());
            let db = metric.of(b.get(x).unwrap()) - metric.of(b.get(y).unwrap());
            let product = da * db;
            if product > 0.0 {
                concordant += 1;
            } else if product < 0.0 {
                discordant += 1;
                flipped.push((x, y));
            }
        }
    }
    let total = algos.len() * (algos.len() - 1) / 2;
    let tau = if total == 0 {
        1.0
    } else {
        (concordant as f64 - discordant as f64) / total as f64
    };
    Ok(OrderingComparison {
        kendall_tau: tau,
        concordant_pairs: concordant,
        discordant_pairs: discordant,
        discordant: flipped,
    })
}
