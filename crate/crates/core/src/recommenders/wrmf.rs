//! Weighted regularized matrix factorization for implicit feedback,
//! trained by alternating least squares. Positive entries carry confidence
//! 1 + alpha, everything else confidence 1 with preference 0; each half
//! iteration solves one side exactly, so the weighted loss never increases.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FactorModel, HyperParams, RatingsView};

pub(super) fn fit(train: RatingsView<'_>, hp: &HyperParams, seed: u64) -> FactorModel {
    let f = hp.wrmf_factors;
    let alpha = hp.wrmf_alpha;
    let lambda = hp.wrmf_regularization;
    let users = train.user_count();
    let items = train.item_count();

    let user_rows: Vec<Vec<u32>> = train.rows().to_vec();
    let mut item_rows: Vec<Vec<u32>> = vec![Vec::new(); items];
    for (u, row) in user_rows.iter().enumerate() {
        for &i in row {
            item_rows[i as usize].push(u as u32);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut user_factors = vec![0.0f64; users * f];
    let mut item_factors: Vec<f64> = (0..items * f)
        .map(|_| rng.random::<f64>() * 0.1 - 0.05)
        .collect();

    let mut loss_trace = Vec::with_capacity(hp.wrmf_iterations * 2);
    for _ in 0..hp.wrmf_iterations {
        solve_side(&user_rows, &item_factors, &mut user_factors, f, alpha, lambda);
        loss_trace.push(loss(
            &user_rows,
            &user_factors,
            &item_factors,
            f,
            alpha,
            lambda,
        ));
        solve_side(&item_rows, &user_factors, &mut item_factors, f, alpha, lambda);
        loss_trace.push(loss(
            &user_rows,
            &user_factors,
            &item_factors,
            f,
            alpha,
            lambda,
        ));
    }
    debug_assert!(
        loss_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)),
        "weighted loss increased across a half iteration"
    );

    let seen: Vec<bool> = train.rows().iter().map(|r| !r.is_empty()).collect();
    FactorModel {
        factors: f,
        user_factors,
        item_factors,
        catalog: train.catalog(),
        seen,
        loss_trace,
    }
}

/// Solves one ALS side exactly: for every row r of `rows`,
/// (G + alpha * sum_{j in r} y_j y_j^T + lambda I) x_r = (1 + alpha) sum y_j
/// where G = Y^T Y over the fixed side.
fn solve_side(
    rows: &[Vec<u32>],
    fixed: &[f64],
    solved: &mut [f64],
    f: usize,
    alpha: f64,
    lambda: f64,
) {
    let gram = gram_matrix(fixed, f);

    let results: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| {
            if row.is_empty() {
                return vec![0.0; f];
            }
            let mut a = gram.clone();
            for d in 0..f {
                a[(d, d)] += lambda;
            }
            let mut b = DVector::zeros(f);
            for &j in row {
                let y = &fixed[j as usize * f..(j as usize + 1) * f];
                for r in 0..f {
                    b[r] += (1.0 + alpha) * y[r];
                    for c in 0..f {
                        a[(r, c)] += alpha * y[r] * y[c];
                    }
                }
            }
            let chol = Cholesky::new(a).expect("ridge term keeps the system positive definite");
            let x = chol.solve(&b);
            x.iter().copied().collect()
        })
        .collect();

    for (r, x) in results.into_iter().enumerate() {
        solved[r * f..(r + 1) * f].copy_from_slice(&x);
    }
}

fn gram_matrix(factors: &[f64], f: usize) -> DMatrix<f64> {
    let mut gram = DMatrix::zeros(f, f);
    for row in factors.chunks_exact(f) {
        for r in 0..f {
            for c in 0..f {
                gram[(r, c)] += row[r] * row[c];
            }
        }
    }
    gram
}

/// Full weighted regularized loss:
/// sum_{u,i} c_ui (p_ui - x_u . y_i)^2 + lambda (|X|^2 + |Y|^2), expanded so
/// the all-pairs term costs O((U + I) f^2 + R f) instead of O(U I f).
pub(super) fn loss(
    user_rows: &[Vec<u32>],
    user_factors: &[f64],
    item_factors: &[f64],
    f: usize,
    alpha: f64,
    lambda: f64,
) -> f64 {
    let gram = gram_matrix(item_factors, f);
    let mut total = 0.0;

    // sum over ALL pairs of (0 - s)^2 = x^T G x per user
    for x in user_factors.chunks_exact(f) {
        for r in 0..f {
            for c in 0..f {
                total += x[r] * gram[(r, c)] * x[c];
            }
        }
    }
    // positives: replace the implicit 1 * s^2 with (1 + alpha)(1 - s)^2
    for (u, row) in user_rows.iter().enumerate() {
        let x = &user_factors[u * f..(u + 1) * f];
        for &i in row {
            let y = &item_factors[i as usize * f..(i as usize + 1) * f];
            let s: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            total += (1.0 + alpha) * (1.0 - s) * (1.0 - s) - s * s;
        }
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    total + lambda * (sq(user_factors) + sq(item_factors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_is_non_increasing_per_half_iteration() {
        let rows = vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2], vec![3]];
        let view = RatingsView::new(5, 4, &rows);
        let model = fit(view, &HyperParams::default(), 11);
        let trace = &model.loss_trace;
        assert_eq!(trace.len(), HyperParams::default().wrmf_iterations * 2);
        for w in trace.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-9),
                "loss increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn rank_one_structure_ranks_shared_items_first() {
        // every user holds items {0,1}; item 2 is never rated
        let rows = vec![vec![0, 1], vec![0, 1], vec![0, 1]];
        let view = RatingsView::new(3, 3, &rows);
        let hp = HyperParams {
            wrmf_factors: 1,
            ..HyperParams::default()
        };
        let model = fit(view, &hp, 5);
        for u in 0..3u32 {
            assert!(model.score(u, 0) > model.score(u, 2), "user {u} item 0");
            assert!(model.score(u, 1) > model.score(u, 2), "user {u} item 1");
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let rows = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
        let view = RatingsView::new(3, 3, &rows);
        let a = fit(view, &HyperParams::default(), 3);
        let b = fit(view, &HyperParams::default(), 3);
        assert_eq!(a.user_factors, b.user_factors);
        assert_eq!(a.item_factors, b.item_factors);
    }
}
