//! User-based nearest neighbors with cosine similarity on binary vectors.
//!
//! For binary rows the cosine of two users is |a ∩ b| / sqrt(|a| |b|).
//! Fitting keeps, for every user, the top-k most similar users; scoring an
//! item sums the similarities of the neighbors who rated it.

use rayon::prelude::*;

use super::{rank_top_n, RatingsView};

#[derive(Debug, Clone)]
pub struct KnnModel {
    /// Per user: up to k (neighbor, similarity) pairs, sorted by descending
    /// similarity, ties by ascending user index.
    neighbors: Vec<Vec<(u32, f64)>>,
    rows: Vec<Vec<u32>>,
    item_count: usize,
    catalog: Vec<u32>,
}

pub(super) fn fit(train: RatingsView<'_>, k: usize) -> KnnModel {
    let rows = train.rows();
    let user_count = train.user_count();

    let mut inverted: Vec<Vec<u32>> = vec![Vec::new(); train.item_count()];
    for (u, row) in rows.iter().enumerate() {
        for &i in row {
            inverted[i as usize].push(u as u32);
        }
    }

    let neighbors: Vec<Vec<(u32, f64)>> = (0..user_count as u32)
        .into_par_iter()
        .map(|u| {
            let row = &rows[u as usize];
            if row.is_empty() {
                return Vec::new();
            }
            let mut overlap = vec![0u32; user_count];
            for &i in row {
                for &v in &inverted[i as usize] {
                    overlap[v as usize] += 1;
                }
            }
            let norm_u = (row.len() as f64).sqrt();
            let mut sims: Vec<(u32, f64)> = overlap
                .iter()
                .enumerate()
                .filter(|&(v, &o)| o > 0 && v as u32 != u)
                .map(|(v, &o)| {
                    let sim = o as f64 / (norm_u * (rows[v].len() as f64).sqrt());
                    (v as u32, sim)
                })
                .collect();
            sims.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            sims.truncate(k);
            sims
        })
        .collect();

    KnnModel {
        neighbors,
        rows: rows.to_vec(),
        item_count: train.item_count(),
        catalog: train.catalog(),
    }
}

impl KnnModel {
    pub fn neighbors_of(&self, user: u32) -> &[(u32, f64)] {
        &self.neighbors[user as usize]
    }

    /// Score of `item` for `user`: sum of neighbor similarities over the
    /// neighbors who rated the item.
    pub fn score(&self, user: u32, item: u32) -> f64 {
        self.neighbors[user as usize]
            .iter()
            .filter(|(v, _)| self.rows[*v as usize].binary_search(&item).is_ok())
            .map(|(_, sim)| sim)
            .sum()
    }

    pub(super) fn recommend(&self, user: u32, n: usize, exclude: &[u32]) -> Vec<u32> {
        let idx = user as usize;
        if idx >= self.rows.len() || self.rows[idx].is_empty() {
            return Vec::new();
        }
        let mut scores = vec![0.0f64; self.item_count];
        for &(v, sim) in &self.neighbors[idx] {
            for &i in &self.rows[v as usize] {
                scores[i as usize] += sim;
            }
        }
        let scored = self.catalog.iter().filter_map(|&i| {
            if exclude.binary_search(&i).is_ok() {
                None
            } else {
                Some((i, scores[i as usize]))
            }
        });
        rank_top_n(scored, n)
    }
}
