//! K-means over binary user vectors.
//!
//! Users are clustered into K communities by Lloyd's algorithm with
//! k-means++ seeding. Distances are squared Euclidean on the sparse binary
//! rows, expanded as `|u| - 2*dot(u, c) + |c|^2` so that only the nonzero
//! components of a user are ever touched.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::InteractionSet;
use crate::error::{Error, Result};

/// K centroids plus the user-to-cluster assignment.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    k: usize,
    assignments: Vec<u32>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    inertia_history: Vec<f64>,
    empty_repairs: usize,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Cluster index of each user, indexed by internal user id.
    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Sum of squared distances of users to their assigned centroid.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Inertia after each Lloyd iteration, first entry included.
    pub fn inertia_history(&self) -> &[f64] {
        &self.inertia_history
    }

    /// How many empty-cluster repairs happened during fitting.
    pub fn empty_repairs(&self) -> usize {
        self.empty_repairs
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignments {
            sizes[a as usize] += 1;
        }
        sizes
    }

    /// The trivial model that puts every user into one cluster. Used by the
    /// baseline generation mode, which skips clustering entirely.
    pub fn single_cluster(ds: &InteractionSet) -> Result<Self> {
        if ds.user_count() == 0 {
            return Err(Error::invalid_argument("dataset has no users"));
        }
        let dim = ds.item_count();
        let mut centroid = vec![0.0; dim];
        for row in ds.rows() {
            for &i in row {
                centroid[i as usize] += 1.0;
            }
        }
        let n = ds.user_count() as f64;
        for c in centroid.iter_mut() {
            *c /= n;
        }
        let centroids = vec![centroid];
        let assignments = vec![0u32; ds.user_count()];
        let inertia = total_inertia(ds, &centroids, &assignments);
        Ok(ClusterModel {
            k: 1,
            assignments,
            centroids,
            inertia,
            inertia_history: vec![inertia],
            empty_repairs: 0,
        })
    }
}

/// Tuning knobs for Lloyd's algorithm.
#[derive(Debug, Clone, Copy)]
pub struct KmeansOptions {
    pub max_iter: usize,
    /// Convergence threshold on the maximum centroid displacement.
    pub tol: f64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions {
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

/// Clusters the users of `ds` into `k` communities. Deterministic for a
/// fixed seed.
pub fn kmeans(ds: &InteractionSet, k: usize, seed: u64) -> Result<ClusterModel> {
    kmeans_with_options(ds, k, seed, KmeansOptions::default())
}

pub fn kmeans_with_options(
    ds: &InteractionSet,
    k: usize,
    seed: u64,
    options: KmeansOptions,
) -> Result<ClusterModel> {
    if ds.user_count() == 0 {
        return Err(Error::invalid_argument("dataset has no users"));
    }
    if k == 0 || k > ds.user_count() {
        return Err(Error::invalid_argument(format!(
            "cluster count {k} out of range (must satisfy 1 <= k <= {} users)",
            ds.user_count()
        )));
    }
    let initial = plus_plus_init(ds, k, seed);
    lloyd(ds, initial, options)
}

/// Runs Lloyd iterations from explicit initial centroids. Exposed so tests
/// can drive clustering with a fixed initialization.
pub fn lloyd(
    ds: &InteractionSet,
    initial_centroids: Vec<Vec<f64>>,
    options: KmeansOptions,
) -> Result<ClusterModel> {
    let k = initial_centroids.len();
    if k == 0 || k > ds.user_count() {
        return Err(Error::invalid_argument(format!(
            "cluster count {k} out of range (must satisfy 1 <= k <= {} users)",
            ds.user_count()
        )));
    }
    let dim = ds.item_count();
    if initial_centroids.iter().any(|c| c.len() != dim) {
        return Err(Error::invalid_argument(format!(
            "initial centroids must have dimension {dim}"
        )));
    }

    let mut centroids = initial_centroids;
    let mut history = Vec::new();
    let mut repairs_total = 0usize;

    let (mut assignments, mut dists) = assign(ds, &centroids, None);
    repairs_total += repair_empty(ds, &centroids, &mut assignments, &mut dists);
    let mut inertia = dists.iter().sum::<f64>();
    history.push(inertia);

    for _ in 1..options.max_iter {
        let next_centroids = means(ds, k, dim, &assignments);
        let shift = max_shift(&centroids, &next_centroids);

        let (mut next_assignments, mut next_dists) =
            assign(ds, &next_centroids, Some(&assignments));
        let repairs = repair_empty(ds, &next_centroids, &mut next_assignments, &mut next_dists);
        repairs_total += repairs;

        let next_inertia = next_dists.iter().sum::<f64>();
        debug_assert!(
            repairs > 0 || next_inertia <= inertia * (1.0 + 1e-9) + 1e-12,
            "inertia increased without a repair: {inertia} -> {next_inertia}"
        );
        history.push(next_inertia);

        let fixpoint = next_assignments == assignments;
        centroids = next_centroids;
        assignments = next_assignments;
        inertia = next_inertia;

        if fixpoint || shift < options.tol {
            break;
        }
    }

    Ok(ClusterModel {
        k,
        assignments,
        centroids,
        inertia,
        inertia_history: history,
        empty_repairs: repairs_total,
    })
}

/// k-means++ seeding: the first centroid is a random user vector, each next
/// one a user drawn with probability proportional to its squared distance to
/// the nearest chosen centroid. When all remaining distances are zero
/// (duplicate vectors), unchosen users are taken in index order so that
/// k = |users| still yields k distinct seeds.
fn plus_plus_init(ds: &InteractionSet, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let users = ds.user_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; users];
    let mut picked: Vec<u32> = Vec::with_capacity(k);

    let first = rng.random_range(0..users) as u32;
    chosen[first as usize] = true;
    picked.push(first);

    // squared distance of each user to the nearest chosen seed
    let mut d2: Vec<f64> = (0..users as u32)
        .map(|u| binary_distance_sq(ds.items_of(u), ds.items_of(first)))
        .collect();

    while picked.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut selected = None;
            for (u, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r && w > 0.0 {
                    selected = Some(u as u32);
                    break;
                }
            }
            selected.unwrap_or_else(|| {
                // float round-off pushed r past the last positive weight
                d2.iter()
                    .rposition(|&w| w > 0.0)
                    .map(|u| u as u32)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            // all remaining users coincide with a seed; take the first unchosen
            chosen
                .iter()
                .position(|&c| !c)
                .expect("k <= users guarantees an unchosen user") as u32
        };
        chosen[next as usize] = true;
        picked.push(next);
        let next_items = ds.items_of(next);
        for u in 0..users as u32 {
            let d = binary_distance_sq(ds.items_of(u), next_items);
            if d < d2[u as usize] {
                d2[u as usize] = d;
            }
        }
    }

    picked
        .into_iter()
        .map(|u| {
            let mut c = vec![0.0; ds.item_count()];
            for &i in ds.items_of(u) {
                c[i as usize] = 1.0;
            }
            c
        })
        .collect()
}

/// Squared Euclidean distance between two sorted binary index sets:
/// |a| + |b| - 2|a ∩ b|.
fn binary_distance_sq(a: &[u32], b: &[u32]) -> f64 {
    let mut common = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (a.len() + b.len() - 2 * common) as f64
}

fn centroid_norm_sq(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// Squared distance of a sparse binary row to a dense centroid, given the
/// centroid's squared norm. Clamped at zero against round-off.
fn row_distance_sq(row: &[u32], centroid: &[f64], cnorm_sq: f64) -> f64 {
    let dot: f64 = row.iter().map(|&i| centroid[i as usize]).sum();
    (row.len() as f64 - 2.0 * dot + cnorm_sq).max(0.0)
}

/// Assignment step. Ties prefer the user's previous cluster, then the lowest
/// cluster index, so repeated runs and the repair step stay deterministic.
fn assign(
    ds: &InteractionSet,
    centroids: &[Vec<f64>],
    previous: Option<&[u32]>,
) -> (Vec<u32>, Vec<f64>) {
    let norms: Vec<f64> = centroids.iter().map(|c| centroid_norm_sq(c)).collect();
    let results: Vec<(u32, f64)> = (0..ds.user_count() as u32)
        .into_par_iter()
        .map(|u| {
            let row = ds.items_of(u);
            let prev = previous.map(|p| p[u as usize]);
            let (mut best_c, mut best_d) = match prev {
                Some(p) => (p, row_distance_sq(row, &centroids[p as usize], norms[p as usize])),
                None => (0, row_distance_sq(row, &centroids[0], norms[0])),
            };
            for (c, centroid) in centroids.iter().enumerate() {
                let c = c as u32;
                if Some(c) == prev || (prev.is_none() && c == 0) {
                    continue;
                }
                let d = row_distance_sq(row, centroid, norms[c as usize]);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            (best_c, best_d)
        })
        .collect();

    let mut assignments = Vec::with_capacity(results.len());
    let mut dists = Vec::with_capacity(results.len());
    for (c, d) in results {
        assignments.push(c);
        dists.push(d);
    }
    (assignments, dists)
}

/// Moves, for every empty cluster, the user farthest from that cluster's
/// centroid (among users whose current cluster keeps at least one member)
/// into it. Returns the number of repairs.
fn repair_empty(
    ds: &InteractionSet,
    centroids: &[Vec<f64>],
    assignments: &mut [u32],
    dists: &mut [f64],
) -> usize {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a as usize] += 1;
    }
    let mut repairs = 0;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let norm = centroid_norm_sq(&centroids[empty]);
        let mut best: Option<(f64, u32)> = None;
        for u in 0..ds.user_count() as u32 {
            if sizes[assignments[u as usize] as usize] <= 1 {
                continue;
            }
            let d = row_distance_sq(ds.items_of(u), &centroids[empty], norm);
            let better = match best {
                None => true,
                Some((bd, _)) => d > bd,
            };
            if better {
                best = Some((d, u));
            }
        }
        let (d, u) = best.expect("a non-singleton cluster exists while another is empty");
        sizes[assignments[u as usize] as usize] -= 1;
        sizes[empty] += 1;
        assignments[u as usize] = empty as u32;
        dists[u as usize] = d;
        repairs += 1;
    }
    repairs
}

/// Update step: each centroid becomes the mean of its assigned binary rows.
fn means(ds: &InteractionSet, k: usize, dim: usize, assignments: &[u32]) -> Vec<Vec<f64>> {
    let mut acc = vec![vec![0.0f64; dim]; k];
    let mut sizes = vec![0usize; k];
    for (u, row) in ds.rows().iter().enumerate() {
        let c = assignments[u] as usize;
        sizes[c] += 1;
        let target = &mut acc[c];
        for &i in row {
            target[i as usize] += 1.0;
        }
    }
    for (c, centroid) in acc.iter_mut().enumerate() {
        debug_assert!(sizes[c] > 0, "means called with an empty cluster");
        let n = sizes[c] as f64;
        for x in centroid.iter_mut() {
            *x /= n;
        }
    }
    acc
}

fn max_shift(old: &[Vec<f64>], new: &[Vec<f64>]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn total_inertia(ds: &InteractionSet, centroids: &[Vec<f64>], assignments: &[u32]) -> f64 {
    let norms: Vec<f64> = centroids.iter().map(|c| centroid_norm_sq(c)).collect();
    (0..ds.user_count() as u32)
        .map(|u| {
            let c = assignments[u as usize] as usize;
            row_distance_sq(ds.items_of(u), &centroids[c], norms[c])
        })
        .sum()
}
