//! The five recommendation algorithms behind one train/recommend interface:
//! Random, Most Popular, User KNN, BPRMF, and WRMF.
//!
//! All models score the catalog of items seen at training time, exclude the
//! user's own training items, and break score ties by ascending item index
//! so that reports are reproducible.

mod bpr;
mod knn;
mod wrmf;

pub use bpr::{pairwise_gradient, pairwise_objective};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::InteractionSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Random,
    MostPopular,
    UserKnn,
    Bprmf,
    Wrmf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Random,
        Algorithm::MostPopular,
        Algorithm::UserKnn,
        Algorithm::Bprmf,
        Algorithm::Wrmf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Random => "Random",
            Algorithm::MostPopular => "Most Popular",
            Algorithm::UserKnn => "User KNN",
            Algorithm::Bprmf => "BPRMF",
            Algorithm::Wrmf => "WRMF",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "random" => Ok(Algorithm::Random),
            "mostpopular" | "pop" | "popular" => Ok(Algorithm::MostPopular),
            "userknn" | "knn" => Ok(Algorithm::UserKnn),
            "bprmf" | "bpr" => Ok(Algorithm::Bprmf),
            "wrmf" => Ok(Algorithm::Wrmf),
            other => Err(Error::invalid_argument(format!(
                "unknown algorithm {other:?} (expected random|most-popular|user-knn|bprmf|wrmf)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

/// Hyperparameters of the trainable algorithms, overridable through
/// `rec.<algo>.<param>` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub knn_neighbors: usize,
    pub bpr_factors: usize,
    pub bpr_learning_rate: f64,
    pub bpr_regularization: f64,
    pub bpr_epochs: usize,
    pub wrmf_factors: usize,
    pub wrmf_alpha: f64,
    pub wrmf_regularization: f64,
    pub wrmf_iterations: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            knn_neighbors: 80,
            bpr_factors: 10,
            bpr_learning_rate: 0.05,
            bpr_regularization: 0.0025,
            bpr_epochs: 100,
            wrmf_factors: 10,
            wrmf_alpha: 1.0,
            wrmf_regularization: 0.015,
            wrmf_iterations: 15,
        }
    }
}

impl HyperParams {
    /// Applies one `rec.<algo>.<param>=<value>` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::invalid_argument(format!("{key}: {v:?} is not an integer")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::invalid_argument(format!("{key}: {v:?} is not a number")))
        };
        match key {
            "rec.userknn.k" | "rec.userknn.neighbors" => {
                self.knn_neighbors = parse_usize(value)?;
            }
            "rec.bprmf.factors" => self.bpr_factors = parse_usize(value)?,
            "rec.bprmf.learning_rate" => self.bpr_learning_rate = parse_f64(value)?,
            "rec.bprmf.regularization" => self.bpr_regularization = parse_f64(value)?,
            "rec.bprmf.epochs" => self.bpr_epochs = parse_usize(value)?,
            "rec.wrmf.factors" => self.wrmf_factors = parse_usize(value)?,
            "rec.wrmf.alpha" => self.wrmf_alpha = parse_f64(value)?,
            "rec.wrmf.regularization" => self.wrmf_regularization = parse_f64(value)?,
            "rec.wrmf.iterations" => self.wrmf_iterations = parse_usize(value)?,
            other => {
                return Err(Error::invalid_argument(format!(
                    "unknown hyperparameter key {other:?}"
                )))
            }
        }
        Ok(())
    }
}

/// Borrowed training data: per-user sorted item rows over a fixed
/// user/item index space. Rows may be empty (users whose interactions all
/// fell into the test split).
#[derive(Debug, Clone, Copy)]
pub struct RatingsView<'a> {
    user_count: usize,
    item_count: usize,
    rows: &'a [Vec<u32>],
}

impl<'a> RatingsView<'a> {
    pub fn new(user_count: usize, item_count: usize, rows: &'a [Vec<u32>]) -> Self {
        debug_assert_eq!(rows.len(), user_count);
        RatingsView {
            user_count,
            item_count,
            rows,
        }
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn rows(&self) -> &'a [Vec<u32>] {
        self.rows
    }

    pub fn row(&self, user: u32) -> &'a [u32] {
        &self.rows[user as usize]
    }

    pub fn interactions(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Items occurring in at least one row, ascending.
    pub fn catalog(&self) -> Vec<u32> {
        let mut seen = vec![false; self.item_count];
        for row in self.rows {
            for &i in row {
                seen[i as usize] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

impl<'a> From<&'a InteractionSet> for RatingsView<'a> {
    fn from(ds: &'a InteractionSet) -> Self {
        RatingsView::new(ds.user_count(), ds.item_count(), ds.rows())
    }
}

/// A fitted recommender.
#[derive(Debug, Clone)]
pub enum RecModel {
    Random(RandomModel),
    MostPopular(PopularityModel),
    UserKnn(knn::KnnModel),
    Bprmf(FactorModel),
    Wrmf(FactorModel),
}

impl RecModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            RecModel::Random(_) => Algorithm::Random,
            RecModel::MostPopular(_) => Algorithm::MostPopular,
            RecModel::UserKnn(_) => Algorithm::UserKnn,
            RecModel::Bprmf(_) => Algorithm::Bprmf,
            RecModel::Wrmf(_) => Algorithm::Wrmf,
        }
    }

    /// Top-`n` items for `user`, never containing anything in `exclude`
    /// (the user's training items; must be sorted ascending).
    ///
    /// Personalized models return an empty list for users without training
    /// interactions; Random and Most Popular can serve them.
    pub fn recommend(&self, user: u32, n: usize, exclude: &[u32]) -> Vec<u32> {
        match self {
            RecModel::Random(m) => m.recommend(user, n, exclude),
            RecModel::MostPopular(m) => m.recommend(n, exclude),
            RecModel::UserKnn(m) => m.recommend(user, n, exclude),
            RecModel::Bprmf(m) | RecModel::Wrmf(m) => m.recommend(user, n, exclude),
        }
    }

    /// Per-half-iteration training loss, where the algorithm tracks one
    /// (WRMF does; others return an empty slice).
    pub fn loss_trace(&self) -> &[f64] {
        match self {
            RecModel::Wrmf(m) => &m.loss_trace,
            _ => &[],
        }
    }
}

/// Fits `algorithm` on the training view. Deterministic for a fixed seed.
pub fn fit(
    algorithm: Algorithm,
    train: RatingsView<'_>,
    hp: &HyperParams,
    seed: u64,
) -> Result<RecModel> {
    if algorithm != Algorithm::Random && train.interactions() == 0 {
        return Err(Error::invalid_argument(format!(
            "{algorithm} requires a non-empty training set"
        )));
    }
    Ok(match algorithm {
        Algorithm::Random => RecModel::Random(RandomModel {
            seed,
            catalog: train.catalog(),
        }),
        Algorithm::MostPopular => RecModel::MostPopular(PopularityModel::fit(train)),
        Algorithm::UserKnn => RecModel::UserKnn(knn::fit(train, hp.knn_neighbors)),
        Algorithm::Bprmf => RecModel::Bprmf(bpr::fit(train, hp, seed)),
        Algorithm::Wrmf => RecModel::Wrmf(wrmf::fit(train, hp, seed)),
    })
}

/// Uniformly random recommendations over the training catalog. The per-user
/// stream is derived from the fit seed, so repeated calls agree.
#[derive(Debug, Clone)]
pub struct RandomModel {
    seed: u64,
    catalog: Vec<u32>,
}

impl RandomModel {
    fn recommend(&self, user: u32, n: usize, exclude: &[u32]) -> Vec<u32> {
        let mut candidates: Vec<u32> = self
            .catalog
            .iter()
            .copied()
            .filter(|i| exclude.binary_search(i).is_err())
            .collect();
        let stream = self
            .seed
            .wrapping_add((user as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let take = n.min(candidates.len());
        for i in 0..take {
            let j = rng.random_range(i..candidates.len());
            candidates.swap(i, j);
        }
        candidates.truncate(take);
        candidates
    }
}

/// Item popularity counts over the training set.
#[derive(Debug, Clone)]
pub struct PopularityModel {
    /// Catalog items ordered by descending count, ties by ascending index.
    ranked: Vec<u32>,
    counts: Vec<u64>,
}

impl PopularityModel {
    fn fit(train: RatingsView<'_>) -> Self {
        let mut counts = vec![0u64; train.item_count()];
        for row in train.rows() {
            for &i in row {
                counts[i as usize] += 1;
            }
        }
        let mut ranked: Vec<u32> = (0..train.item_count() as u32)
            .filter(|&i| counts[i as usize] > 0)
            .collect();
        ranked.sort_by(|&a, &b| {
            counts[b as usize]
                .cmp(&counts[a as usize])
                .then(a.cmp(&b))
        });
        PopularityModel { ranked, counts }
    }

    pub fn count_of(&self, item: u32) -> u64 {
        self.counts[item as usize]
    }

    pub fn ranked(&self) -> &[u32] {
        &self.ranked
    }

    fn recommend(&self, n: usize, exclude: &[u32]) -> Vec<u32> {
        self.ranked
            .iter()
            .copied()
            .filter(|i| exclude.binary_search(i).is_err())
            .take(n)
            .collect()
    }
}

/// Latent factor model shared by BPRMF and WRMF.
#[derive(Debug, Clone)]
pub struct FactorModel {
    factors: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    catalog: Vec<u32>,
    seen: Vec<bool>,
    loss_trace: Vec<f64>,
}

impl FactorModel {
    pub fn user_factor(&self, user: u32) -> &[f64] {
        let f = self.factors;
        &self.user_factors[user as usize * f..(user as usize + 1) * f]
    }

    pub fn item_factor(&self, item: u32) -> &[f64] {
        let f = self.factors;
        &self.item_factors[item as usize * f..(item as usize + 1) * f]
    }

    pub fn score(&self, user: u32, item: u32) -> f64 {
        dot(self.user_factor(user), self.item_factor(item))
    }

    fn recommend(&self, user: u32, n: usize, exclude: &[u32]) -> Vec<u32> {
        if (user as usize) >= self.seen.len() || !self.seen[user as usize] {
            return Vec::new();
        }
        let pu = self.user_factor(user);
        let f = self.factors;
        let scored = self.catalog.iter().filter_map(|&i| {
            if exclude.binary_search(&i).is_ok() {
                None
            } else {
                let qi = &self.item_factors[i as usize * f..(i as usize + 1) * f];
                Some((i, dot(pu, qi)))
            }
        });
        rank_top_n(scored, n)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Descending score, ties by ascending item index.
pub(crate) fn rank_top_n(scored: impl Iterator<Item = (u32, f64)>, n: usize) -> Vec<u32> {
    let mut items: Vec<(u32, f64)> = scored.collect();
    items.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    items.truncate(n);
    items.into_iter().map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_rows() -> Vec<Vec<u32>> {
        // u0={i0,i1}, u1={i0,i1}, u2={i1,i2}, u3={i1,i2}
        vec![vec![0, 1], vec![0, 1], vec![1, 2], vec![1, 2]]
    }

    #[test]
    fn most_popular_ranking_on_fixture() {
        let rows = toy_rows();
        let view = RatingsView::new(4, 3, &rows);
        let model = fit(Algorithm::MostPopular, view, &HyperParams::default(), 0).unwrap();
        if let RecModel::MostPopular(m) = &model {
            // i1 rated 4 times, i0 and i2 twice; tie broken by index
            assert_eq!(m.ranked(), &[1, 0, 2]);
            assert_eq!(m.count_of(1), 4);
        } else {
            panic!("wrong model variant");
        }
        // user trained on i1 gets [i0, i2]
        assert_eq!(model.recommend(0, 2, &[1]), vec![0, 2]);
    }

    #[test]
    fn n_larger_than_catalog_returns_rest() {
        let rows = toy_rows();
        let view = RatingsView::new(4, 3, &rows);
        let model = fit(Algorithm::MostPopular, view, &HyperParams::default(), 0).unwrap();
        assert_eq!(model.recommend(0, 10, &[0, 1]), vec![2]);
    }

    #[test]
    fn random_is_deterministic_per_seed_and_user() {
        let rows = toy_rows();
        let view = RatingsView::new(4, 3, &rows);
        let a = fit(Algorithm::Random, view, &HyperParams::default(), 9).unwrap();
        let b = fit(Algorithm::Random, view, &HyperParams::default(), 9).unwrap();
        for u in 0..4 {
            assert_eq!(a.recommend(u, 3, &[]), b.recommend(u, 3, &[]));
        }
    }

    #[test]
    fn random_full_catalog_is_permutation() {
        let rows = toy_rows();
        let view = RatingsView::new(4, 3, &rows);
        let model = fit(Algorithm::Random, view, &HyperParams::default(), 5).unwrap();
        let mut recs = model.recommend(1, 3, &[]);
        recs.sort_unstable();
        assert_eq!(recs, vec![0, 1, 2]);
    }

    #[test]
    fn empty_train_is_error_except_random() {
        let rows: Vec<Vec<u32>> = vec![vec![], vec![]];
        let view = RatingsView::new(2, 3, &rows);
        for alg in [
            Algorithm::MostPopular,
            Algorithm::UserKnn,
            Algorithm::Bprmf,
            Algorithm::Wrmf,
        ] {
            assert!(fit(alg, view, &HyperParams::default(), 0).is_err());
        }
        assert!(fit(Algorithm::Random, view, &HyperParams::default(), 0).is_ok());
    }

    #[test]
    fn personalized_models_return_empty_for_unseen_users() {
        let rows = vec![vec![0, 1], vec![], vec![1, 2]];
        let view = RatingsView::new(3, 3, &rows);
        for alg in [Algorithm::UserKnn, Algorithm::Bprmf, Algorithm::Wrmf] {
            let model = fit(alg, view, &HyperParams::default(), 1).unwrap();
            assert!(model.recommend(1, 5, &[]).is_empty(), "{alg}");
        }
    }

    #[test]
    fn exclusion_always_respected() {
        let rows = toy_rows();
        let view = RatingsView::new(4, 3, &rows);
        for alg in Algorithm::ALL {
            let model = fit(alg, view, &HyperParams::default(), 3).unwrap();
            for u in 0..4u32 {
                let exclude = rows[u as usize].clone();
                for rec in model.recommend(u, 3, &exclude) {
                    assert!(exclude.binary_search(&rec).is_err(), "{alg} leaked {rec}");
                }
            }
        }
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!("most-popular".parse::<Algorithm>().unwrap(), Algorithm::MostPopular);
        assert_eq!("User KNN".parse::<Algorithm>().unwrap(), Algorithm::UserKnn);
        assert!("svd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn hyperparams_keys() {
        let mut hp = HyperParams::default();
        hp.set("rec.userknn.k", "40").unwrap();
        hp.set("rec.bprmf.learning_rate", "0.1").unwrap();
        hp.set("rec.wrmf.iterations", "5").unwrap();
        assert_eq!(hp.knn_neighbors, 40);
        assert_eq!(hp.bpr_learning_rate, 0.1);
        assert_eq!(hp.wrmf_iterations, 5);
        assert!(hp.set("rec.nope.x", "1").is_err());
        assert!(hp.set("rec.bprmf.epochs", "ten").is_err());
    }
}
