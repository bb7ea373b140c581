//! Rating sampling: builds a synthetic dataset from a learned
//! [`BehaviorModel`]. Every synthetic user draws a community, a rating
//! count from that community's per-user distribution, and that many
//! distinct items from the community's item distribution.
//!
//! The baseline mode skips clustering entirely: all users share one global
//! behavior and generation stops when an exact total rating count is
//! reached.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::ClusterModel;
use crate::data::InteractionSet;
use crate::distributions::{learn, BehaviorModel, EmpiricalDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMode {
    /// Algorithm-2 sampling from a clustered behavior model.
    Clustered,
    /// Single shared behavior, exact total rating count.
    Baseline,
}

/// Inputs of a generation run.
#[derive(Debug, Clone)]
pub struct GenerationConfig {
    /// Requested number of synthetic users U.
    pub users: usize,
    pub seed: u64,
    pub mode: GenerationMode,
    /// Exact total rating count; required in baseline mode, where the user
    /// count emerges from the draw instead of being fixed.
    pub target_ratings: Option<u64>,
}

impl GenerationConfig {
    pub fn clustered(users: usize, seed: u64) -> Self {
        GenerationConfig {
            users,
            seed,
            mode: GenerationMode::Clustered,
            target_ratings: None,
        }
    }

    pub fn baseline(target_ratings: u64, seed: u64) -> Self {
        GenerationConfig {
            users: 0,
            seed,
            mode: GenerationMode::Baseline,
            target_ratings: Some(target_ratings),
        }
    }
}

/// A generated dataset plus bookkeeping about the run.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: InteractionSet,
    /// Cluster drawn for each synthetic user, indexed like the dataset's
    /// internal user ids.
    pub user_clusters: Vec<u32>,
    /// How many per-user rating counts had to be clamped down to the size
    /// of their cluster's item support.
    pub clamped_draws: u64,
}

/// Updatable cumulative-weight structure over a distribution's support,
/// backed by a Fenwick tree: O(log n) weighted draw and removal.
#[derive(Debug, Clone)]
pub struct WeightTree {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
}

impl WeightTree {
    pub fn new(weights: &[u64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut idx = i + 1;
            while idx <= n {
                tree[idx] += w;
                idx += idx & idx.wrapping_neg();
            }
        }
        WeightTree {
            tree,
            weights: weights.to_vec(),
            total: weights.iter().sum(),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Index of the first position whose cumulative weight exceeds `target`.
    /// Requires `target < total`.
    pub fn find(&self, target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.weights.len();
        let mut pos = 0usize;
        let mut remaining = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= remaining {
                remaining -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos // 0-based index of the selected position
    }

    /// Sets the weight at `idx` to zero.
    pub fn remove(&mut self, idx: usize) {
        let w = self.weights[idx];
        if w == 0 {
            return;
        }
        self.weights[idx] = 0;
        self.total -= w;
        let n = self.weights.len();
        let mut pos = idx + 1;
        while pos <= n {
            self.tree[pos] -= w;
            pos += pos & pos.wrapping_neg();
        }
    }

    /// Draws one position with probability proportional to its weight and
    /// removes it.
    pub fn sample_remove<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        debug_assert!(self.total > 0);
        let target = rng.random_range(0..self.total);
        let idx = self.find(target);
        self.remove(idx);
        idx
    }
}

/// Weighted random draw of one outcome: sigma.
pub fn sample_categorical<R: Rng + ?Sized>(dist: &EmpiricalDistribution, rng: &mut R) -> u32 {
    let target = rng.random_range(0..dist.total());
    let mut acc = 0u64;
    for (idx, &count) in dist.counts().iter().enumerate() {
        acc += count;
        if target < acc {
            return dist.support()[idx];
        }
    }
    unreachable!("target < total guarantees a hit")
}

/// Weighted random draw of `n` distinct outcomes: sigma-hat. Successive
/// draws with removal and renormalization.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    dist: &EmpiricalDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if n > dist.len() {
        return Err(Error::InfeasibleDraw {
            requested: n,
            available: dist.len(),
        });
    }
    let mut tree = WeightTree::new(dist.counts());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let idx = tree.sample_remove(rng);
        out.push(dist.support()[idx]);
    }
    Ok(out)
}

/// Algorithm-2 generation: `cfg.users` synthetic users sampled from the
/// model. Synthetic users are named `synth-<n>`; items keep the reference
/// dataset's external identifiers.
pub fn generate(model: &BehaviorModel, cfg: &GenerationConfig) -> Result<Generated> {
    if cfg.mode != GenerationMode::Clustered {
        return Err(Error::invalid_argument(
            "generate expects clustered mode; use generate_baseline for baseline datasets",
        ));
    }
    if cfg.users == 0 {
        return Err(Error::invalid_argument("user count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_users(model, SampleBudget::Users(cfg.users), &mut rng)
}

/// Baseline generation from a reference dataset: one global behavior (no
/// clustering) and an exact total rating count. The final user's item count
/// is truncated so the total lands exactly on `target_ratings`; the user
/// count therefore emerges from the draw.
pub fn generate_baseline(ds: &InteractionSet, cfg: &GenerationConfig) -> Result<Generated> {
    let single = ClusterModel::single_cluster(ds)?;
    let model = learn(ds, &single)?;
    generate_baseline_from_model(&model, cfg)
}

/// Baseline generation driven by an existing behavior model; the model is
/// collapsed to a single shared behavior first.
pub fn generate_baseline_from_model(
    model: &BehaviorModel,
    cfg: &GenerationConfig,
) -> Result<Generated> {
    if cfg.mode != GenerationMode::Baseline {
        return Err(Error::invalid_argument(
            "generate_baseline expects baseline mode",
        ));
    }
    let target = cfg
        .target_ratings
        .ok_or_else(|| Error::invalid_argument("baseline mode requires target_ratings"))?;
    if target < 1 {
        return Err(Error::invalid_argument("target_ratings must be at least 1"));
    }
    let flat = if model.k() == 1 {
        model.clone()
    } else {
        model.collapse()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_users(&flat, SampleBudget::Ratings(target), &mut rng)
}

enum SampleBudget {
    /// Fixed number of users.
    Users(usize),
    /// Generate users until exactly this many ratings exist.
    Ratings(u64),
}

fn sample_users<R: Rng + ?Sized>(
    model: &BehaviorModel,
    budget: SampleBudget,
    rng: &mut R,
) -> Result<Generated> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut user_clusters: Vec<u32> = Vec::new();
    let mut clamped = 0u64;
    let mut emitted = 0u64;
    let mut user = 0usize;

    loop {
        match budget {
            SampleBudget::Users(total) if user >= total => break,
            SampleBudget::Ratings(total) if emitted >= total => break,
            _ => {}
        }

        let cluster = sample_categorical(model.cluster_dist(), rng);
        let mut count = sample_categorical(model.ratings_per_user(cluster as usize), rng) as usize;
        let available = model.item_dist(cluster as usize).len();
        if count > available {
            // the drawn rating count exceeds the cluster's observed item
            // catalog; clamp rather than inventing items outside it
            count = available;
            clamped += 1;
        }
        if let SampleBudget::Ratings(total) = budget {
            let remaining = (total - emitted) as usize;
            if count > remaining {
                count = remaining;
            }
        }
        debug_assert!(count >= 1);

        let items = sample_without_replacement(model.item_dist(cluster as usize), count, rng)?;
        let user_id = format!("synth-{user}");
        for item in items {
            pairs.push((user_id.clone(), model.item_ids()[item as usize].clone()));
        }
        user_clusters.push(cluster);
        emitted += count as u64;
        user += 1;
    }

    Ok(Generated {
        dataset: InteractionSet::from_pairs(pairs),
        user_clusters,
        clamped_draws: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::kmeans;
    use crate::distributions::learn;

    fn toy_fixture() -> InteractionSet {
        InteractionSet::from_pairs([
            ("u0", "i0"),
            ("u0", "i1"),
            ("u1", "i0"),
            ("u1", "i1"),
            ("u2", "i1"),
            ("u2", "i2"),
            ("u3", "i1"),
            ("u3", "i2"),
        ])
    }

    fn toy_behavior_model() -> BehaviorModel {
        let ds = toy_fixture();
        let clusters = kmeans(&ds, 2, 3).unwrap();
        learn(&ds, &clusters).unwrap()
    }

    #[test]
    fn weight_tree_matches_linear_scan() {
        let weights = [3u64, 0, 5, 1, 7, 0, 2];
        let tree = WeightTree::new(&weights);
        assert_eq!(tree.total(), 18);
        let mut cumulative = 0u64;
        let mut expected = Vec::new();
        for (i, &w) in weights.iter().enumerate() {
            for _ in 0..w {
                expected.push(i);
            }
            cumulative += w;
        }
        assert_eq!(cumulative, 18);
        for target in 0..18u64 {
            assert_eq!(tree.find(target), expected[target as usize], "target {target}");
        }
    }

    #[test]
    fn weight_tree_remove_rescales() {
        let mut tree = WeightTree::new(&[4, 4, 4]);
        tree.remove(1);
        assert_eq!(tree.total(), 8);
        assert_eq!(tree.find(0), 0);
        assert_eq!(tree.find(3), 0);
        assert_eq!(tree.find(4), 2);
        assert_eq!(tree.find(7), 2);
    }

    #[test]
    fn single_outcome_always_sampled() {
        let d = EmpiricalDistribution::from_counts([(7, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(sample_categorical(&d, &mut rng), 7);
        }
    }

    #[test]
    fn without_replacement_full_support() {
        let d = EmpiricalDistribution::from_counts([(1, 5), (4, 1), (9, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut drawn = sample_without_replacement(&d, 3, &mut rng).unwrap();
        drawn.sort_unstable();
        assert_eq!(drawn, vec![1, 4, 9]);
    }

    #[test]
    fn without_replacement_infeasible() {
        let d = EmpiricalDistribution::from_counts([(1, 5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            sample_without_replacement(&d, 2, &mut rng),
            Err(Error::InfeasibleDraw {
                requested: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn forced_outcomes_generate_exact_dataset() {
        // k=1, every user has exactly 2 ratings over a 2-item catalog:
        // every synthetic user must hold both items.
        let ds = InteractionSet::from_pairs([("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]);
        let clusters = kmeans(&ds, 1, 1).unwrap();
        let model = learn(&ds, &clusters).unwrap();
        let out = generate(&model, &GenerationConfig::clustered(3, 99)).unwrap();
        let stats = out.dataset.stats();
        assert_eq!((stats.users, stats.items, stats.ratings), (3, 2, 6));
        for u in 0..3u32 {
            assert_eq!(out.dataset.items_of(u).len(), 2);
        }
        assert_eq!(out.clamped_draws, 0);
    }

    #[test]
    fn synthetic_user_ids_are_sequential() {
        let model = toy_behavior_model();
        let out = generate(&model, &GenerationConfig::clustered(4, 5)).unwrap();
        for u in 0..4u32 {
            assert_eq!(out.dataset.external_user_id(u), format!("synth-{u}"));
        }
    }

    #[test]
    fn items_keep_reference_external_ids() {
        let model = toy_behavior_model();
        let out = generate(&model, &GenerationConfig::clustered(50, 5)).unwrap();
        for i in 0..out.dataset.item_count() as u32 {
            let id = out.dataset.external_item_id(i);
            assert!(["i0", "i1", "i2"].contains(&id), "unexpected item {id}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let model = toy_behavior_model();
        let cfg = GenerationConfig::clustered(100, 1234);
        let a = generate(&model, &cfg).unwrap();
        let b = generate(&model, &cfg).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.dataset.write_canonical(&mut buf_a).unwrap();
        b.dataset.write_canonical(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        assert_eq!(a.user_clusters, b.user_clusters);
    }

    #[test]
    fn generated_users_have_at_least_one_item() {
        let model = toy_behavior_model();
        let out = generate(&model, &GenerationConfig::clustered(500, 7)).unwrap();
        assert_eq!(out.dataset.user_count(), 500);
        for u in 0..500u32 {
            assert!(!out.dataset.items_of(u).is_empty());
        }
    }

    #[test]
    fn baseline_hits_exact_total() {
        let ds = toy_fixture();
        for target in [1u64, 2, 3, 7, 8, 20] {
            let cfg = GenerationConfig::baseline(target, 11);
            let out = generate_baseline(&ds, &cfg).unwrap();
            assert_eq!(out.dataset.len() as u64, target, "target {target}");
        }
    }

    #[test]
    fn baseline_target_one_is_single_user_single_item() {
        let ds = toy_fixture();
        let out = generate_baseline(&ds, &GenerationConfig::baseline(1, 3)).unwrap();
        let stats = out.dataset.stats();
        assert_eq!((stats.users, stats.items, stats.ratings), (1, 1, 1));
    }

    #[test]
    fn baseline_requires_target() {
        let ds = toy_fixture();
        let cfg = GenerationConfig {
            users: 5,
            seed: 1,
            mode: GenerationMode::Baseline,
            target_ratings: None,
        };
        assert!(matches!(
            generate_baseline(&ds, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn baseline_from_model_equals_baseline_from_dataset() {
        // collapsing a K=2 model must give byte-identical output to learning
        // with K=1 directly, because the merged count tables are identical
        let ds = toy_fixture();
        let clusters = kmeans(&ds, 2, 3).unwrap();
        let model = learn(&ds, &clusters).unwrap();
        let cfg = GenerationConfig::baseline(8, 42);
        let via_model = generate_baseline_from_model(&model, &cfg).unwrap();
        let via_ds = generate_baseline(&ds, &cfg).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        via_model.dataset.write_canonical(&mut a).unwrap();
        via_ds.dataset.write_canonical(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clustered_mode_rejects_zero_users() {
        let model = toy_behavior_model();
        assert!(generate(&model, &GenerationConfig::clustered(0, 1)).is_err());
    }

    #[test]
    fn support_closure_holds() {
        let model = toy_behavior_model();
        let out = generate(&model, &GenerationConfig::clustered(200, 21)).unwrap();
        for (u, &cluster) in out.user_clusters.iter().enumerate() {
            let items = out.dataset.items_of(u as u32);
            assert!(items.len() as u32 <= model.ratings_per_user(cluster as usize).max_outcome());
            for &i in items {
                let external = out.dataset.external_item_id(i);
                let ref_idx = model
                    .item_ids()
                    .iter()
                    .position(|id| id == external)
                    .expect("generated item exists in the reference map")
                    as u32;
                assert!(model.item_dist(cluster as usize).contains(ref_idx));
            }
        }
    }
}
