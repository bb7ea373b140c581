//! Learning the three empirical distribution families from a clustered
//! reference dataset: users per cluster, ratings per user within a cluster,
//! and rating mass per item within a cluster.
//!
//! Distributions keep exact integer counts; normalized weights are a view.
//! This keeps the counting oracle comparisons exact and the model file free
//! of floating-point drift.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::data::InteractionSet;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_TAG: &str = "behavior-model/1";

/// A finite distribution over non-negative integer outcomes, stored as
/// positive integer counts. Zero-count outcomes are omitted from the
/// support; the support is kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    support: Vec<u32>,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalDistribution {
    /// Builds a distribution from (outcome, count) pairs. Counts for
    /// repeated outcomes accumulate; zero counts are dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (u32, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<u32, u64> = BTreeMap::new();
        for (outcome, count) in pairs {
            if count > 0 {
                *merged.entry(outcome).or_insert(0) += count;
            }
        }
        if merged.is_empty() {
            return Err(Error::invalid_argument(
                "empirical distribution needs at least one positive count",
            ));
        }
        let mut support = Vec::with_capacity(merged.len());
        let mut counts = Vec::with_capacity(merged.len());
        let mut total = 0u64;
        for (outcome, count) in merged {
            support.push(outcome);
            counts.push(count);
            total += count;
        }
        Ok(EmpiricalDistribution {
            support,
            counts,
            total,
        })
    }

    /// Outcomes with positive probability, ascending.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Raw counts aligned with [`support`](Self::support).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Normalized weight of the outcome at support position `idx`.
    pub fn weight_at(&self, idx: usize) -> f64 {
        self.counts[idx] as f64 / self.total as f64
    }

    /// Normalized weights in support order.
    pub fn weights(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    /// Normalized weight of an outcome, zero if absent from the support.
    pub fn weight_of(&self, outcome: u32) -> f64 {
        match self.support.binary_search(&outcome) {
            Ok(idx) => self.weight_at(idx),
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, outcome: u32) -> bool {
        self.support.binary_search(&outcome).is_ok()
    }

    pub fn max_outcome(&self) -> u32 {
        *self.support.last().expect("distribution is never empty")
    }

    /// Mean outcome under the normalized weights.
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.counts)
            .map(|(&o, &c)| o as f64 * c as f64)
            .sum::<f64>()
            / self.total as f64
    }

    fn pairs(&self) -> Vec<(u32, u64)> {
        self.support
            .iter()
            .copied()
            .zip(self.counts.iter().copied())
            .collect()
    }
}

/// The learned rating behavior of a reference dataset: the global cluster
/// occupancy distribution plus per-cluster ratings-per-user and
/// ratings-per-item distributions. The sole input of generation.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorModel {
    k: usize,
    cluster_dist: EmpiricalDistribution,
    ratings_per_user: Vec<EmpiricalDistribution>,
    item_dist: Vec<EmpiricalDistribution>,
    item_ids: Vec<String>,
}

impl BehaviorModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// P^C: how users are distributed over the K clusters.
    pub fn cluster_dist(&self) -> &EmpiricalDistribution {
        &self.cluster_dist
    }

    /// P^U_k: distribution of per-user rating counts inside cluster `k`.
    pub fn ratings_per_user(&self, cluster: usize) -> &EmpiricalDistribution {
        &self.ratings_per_user[cluster]
    }

    /// P^I_k: distribution of rating mass over items inside cluster `k`.
    pub fn item_dist(&self, cluster: usize) -> &EmpiricalDistribution {
        &self.item_dist[cluster]
    }

    /// External item identifiers of the reference dataset, indexed by the
    /// item indices appearing in the per-cluster item distributions.
    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Merges all clusters into one, exactly as if the model had been
    /// learned with K = 1: per-cluster count tables sum outcome-wise.
    pub fn collapse(&self) -> BehaviorModel {
        let user_total: u64 = self.cluster_dist.counts().iter().sum();
        let cluster_dist = EmpiricalDistribution::from_counts([(0u32, user_total)])
            .expect("user total is positive");
        let merge = |dists: &[EmpiricalDistribution]| {
            EmpiricalDistribution::from_counts(
                dists.iter().flat_map(|d| d.pairs()),
            )
            .expect("merged distribution keeps all counts")
        };
        BehaviorModel {
            k: 1,
            cluster_dist,
            ratings_per_user: vec![merge(&self.ratings_per_user)],
            item_dist: vec![merge(&self.item_dist)],
            item_ids: self.item_ids.clone(),
        }
    }

    /// Serializes the model as `behavior-model/1` JSON.
    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        let file = BehaviorModelFile {
            format: MODEL_FORMAT_TAG.to_owned(),
            k: self.k,
            items: self.item_ids.clone(),
            cluster_counts: self.cluster_dist.pairs(),
            ratings_per_user: self.ratings_per_user.iter().map(|d| d.pairs()).collect(),
            item_counts: self.item_dist.iter().map(|d| d.pairs()).collect(),
        };
        serde_json::to_writer_pretty(writer, &file)
            .map_err(|e| Error::ModelFormat(e.to_string()))
    }

    /// Reads and validates a `behavior-model/1` JSON file.
    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let file: BehaviorModelFile =
            serde_json::from_reader(reader).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT_TAG {
            return Err(Error::ModelFormat(format!(
                "unsupported format tag {:?} (expected {MODEL_FORMAT_TAG:?})",
                file.format
            )));
        }
        if file.k == 0 {
            return Err(Error::ModelFormat("k must be positive".into()));
        }
        if file.ratings_per_user.len() != file.k || file.item_counts.len() != file.k {
            return Err(Error::ModelFormat(format!(
                "expected {} per-cluster distributions, got {} user and {} item tables",
                file.k,
                file.ratings_per_user.len(),
                file.item_counts.len()
            )));
        }
        let cluster_dist = EmpiricalDistribution::from_counts(file.cluster_counts)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        if cluster_dist.max_outcome() as usize >= file.k {
            return Err(Error::ModelFormat(
                "cluster distribution support exceeds k".into(),
            ));
        }
        let mut ratings_per_user = Vec::with_capacity(file.k);
        for (c, table) in file.ratings_per_user.into_iter().enumerate() {
            let dist = EmpiricalDistribution::from_counts(table)
                .map_err(|e| Error::ModelFormat(format!("cluster {c} user table: {e}")))?;
            if dist.support()[0] == 0 {
                return Err(Error::ModelFormat(format!(
                    "cluster {c}: ratings-per-user support contains zero"
                )));
            }
            ratings_per_user.push(dist);
        }
        let mut item_dist = Vec::with_capacity(file.k);
        for (c, table) in file.item_counts.into_iter().enumerate() {
            let dist = EmpiricalDistribution::from_counts(table)
                .map_err(|e| Error::ModelFormat(format!("cluster {c} item table: {e}")))?;
            if dist.max_outcome() as usize >= file.items.len() {
                return Err(Error::ModelFormat(format!(
                    "cluster {c}: item distribution support exceeds the item map"
                )));
            }
            item_dist.push(dist);
        }
        Ok(BehaviorModel {
            k: file.k,
            cluster_dist,
            ratings_per_user,
            item_dist,
            item_ids: file.items,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BehaviorModelFile {
    format: String,
    k: usize,
    items: Vec<String>,
    cluster_counts: Vec<(u32, u64)>,
    ratings_per_user: Vec<Vec<(u32, u64)>>,
    item_counts: Vec<Vec<(u32, u64)>>,
}

/// P^C: weight of cluster k is the share of users assigned to it.
pub fn learn_cluster_dist(model: &ClusterModel) -> EmpiricalDistribution {
    EmpiricalDistribution::from_counts(
        model
            .cluster_sizes()
            .into_iter()
            .enumerate()
            .map(|(c, size)| (c as u32, size as u64)),
    )
    .expect("a fitted model has no empty clusters")
}

/// Per-user interaction counts of the users assigned to `cluster`, in user
/// index order. The multiset view of P^U_k.
pub fn ratings_per_user_counts(
    ds: &InteractionSet,
    model: &ClusterModel,
    cluster: usize,
) -> Result<Vec<u64>> {
    check_cluster(model, cluster)?;
    check_dimensions(ds, model)?;
    Ok(model
        .assignments()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a as usize == cluster)
        .map(|(u, _)| ds.items_of(u as u32).len() as u64)
        .collect())
}

/// P^U_k: distribution over the distinct per-user rating counts within the
/// cluster, weighted by how many of its users attain each count.
pub fn learn_ratings_per_user(
    ds: &InteractionSet,
    model: &ClusterModel,
    cluster: usize,
) -> Result<EmpiricalDistribution> {
    let counts = ratings_per_user_counts(ds, model, cluster)?;
    EmpiricalDistribution::from_counts(counts.into_iter().map(|c| (c as u32, 1u64)))
}

/// P^I_k: distribution over the items rated inside the cluster, weighted by
/// their rating counts within the cluster.
pub fn learn_item_dist(
    ds: &InteractionSet,
    model: &ClusterModel,
    cluster: usize,
) -> Result<EmpiricalDistribution> {
    check_cluster(model, cluster)?;
    check_dimensions(ds, model)?;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for (u, &a) in model.assignments().iter().enumerate() {
        if a as usize == cluster {
            for &i in ds.items_of(u as u32) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
    }
    EmpiricalDistribution::from_counts(counts)
}

/// Assembles the full behavior model for all K clusters.
pub fn learn(ds: &InteractionSet, model: &ClusterModel) -> Result<BehaviorModel> {
    check_dimensions(ds, model)?;
    let cluster_dist = learn_cluster_dist(model);
    if cluster_dist.len() != model.k() {
        return Err(Error::Internal(format!(
            "cluster distribution covers {} of {} clusters",
            cluster_dist.len(),
            model.k()
        )));
    }
    let mut ratings_per_user = Vec::with_capacity(model.k());
    let mut item_dist = Vec::with_capacity(model.k());
    for cluster in 0..model.k() {
        ratings_per_user.push(learn_ratings_per_user(ds, model, cluster)?);
        item_dist.push(learn_item_dist(ds, model, cluster)?);
    }
    Ok(BehaviorModel {
        k: model.k(),
        cluster_dist,
        ratings_per_user,
        item_dist,
        item_ids: ds.item_ids().to_vec(),
    })
}

fn check_cluster(model: &ClusterModel, cluster: usize) -> Result<()> {
    if cluster >= model.k() {
        return Err(Error::invalid_argument(format!(
            "cluster {cluster} out of range for k={}",
            model.k()
        )));
    }
    Ok(())
}

fn check_dimensions(ds: &InteractionSet, model: &ClusterModel) -> Result<()> {
    if model.assignments().len() != ds.user_count() {
        return Err(Error::invalid_argument(format!(
            "model was fitted on {} users, dataset has {}",
            model.assignments().len(),
            ds.user_count()
        )));
    }
    if let Some(c) = model.centroids().first() {
        if c.len() != ds.item_count() {
            return Err(Error::invalid_argument(format!(
                "model centroids have dimension {}, dataset has {} items",
                c.len(),
                ds.item_count()
            )));
        }
    }
    Ok(())
}
