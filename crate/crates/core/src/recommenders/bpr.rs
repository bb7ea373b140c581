//! Matrix factorization trained with the Bayesian Personalized Ranking
//! pairwise objective: stochastic updates on sampled (user, positive,
//! negative) triples, maximizing ln sigmoid(x_ui - x_uj) with L2 shrinkage.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dot, FactorModel, HyperParams, RatingsView};

/// Value of the per-triple objective:
/// ln sigmoid(p_u . (q_i - q_j)) - (reg / 2) (|p_u|^2 + |q_i|^2 + |q_j|^2).
pub fn pairwise_objective(pu: &[f64], qi: &[f64], qj: &[f64], reg: f64) -> f64 {
    let x = dot(pu, qi) - dot(pu, qj);
    let norm: f64 = pu.iter().chain(qi).chain(qj).map(|v| v * v).sum();
    ln_sigmoid(x) - 0.5 * reg * norm
}

/// Analytic gradient of [`pairwise_objective`] with respect to
/// (p_u, q_i, q_j).
pub fn pairwise_gradient(
    pu: &[f64],
    qi: &[f64],
    qj: &[f64],
    reg: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = dot(pu, qi) - dot(pu, qj);
    // d/dx ln sigmoid(x) = sigmoid(-x)
    let s = sigmoid(-x);
    let g_pu = pu
        .iter()
        .zip(qi.iter().zip(qj))
        .map(|(&p, (&i, &j))| s * (i - j) - reg * p)
        .collect();
    let g_qi = qi
        .iter()
        .zip(pu)
        .map(|(&i, &p)| s * p - reg * i)
        .collect();
    let g_qj = qj
        .iter()
        .zip(pu)
        .map(|(&j, &p)| -s * p - reg * j)
        .collect();
    (g_pu, g_qi, g_qj)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn ln_sigmoid(x: f64) -> f64 {
    // numerically stable: -ln(1 + e^-x)
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(super) fn fit(train: RatingsView<'_>, hp: &HyperParams, seed: u64) -> FactorModel {
    let f = hp.bpr_factors;
    let lr = hp.bpr_learning_rate;
    let reg = hp.bpr_regularization;
    let users = train.user_count();
    let items = train.item_count();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut user_factors = init_factors(users * f, &mut rng);
    let mut item_factors = init_factors(items * f, &mut rng);

    let positives: Vec<(u32, u32)> = train
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(u, row)| row.iter().map(move |&i| (u as u32, i)))
        .collect();

    let samples = hp.bpr_epochs * positives.len();
    for _ in 0..samples {
        let (u, i) = positives[rng.random_range(0..positives.len())];
        let row = train.row(u);
        let Some(j) = sample_negative(row, items, &mut rng) else {
            continue;
        };

        let (ub, ib, jb) = (u as usize * f, i as usize * f, j as usize * f);
        let (g_pu, g_qi, g_qj) = {
            let pu = &user_factors[ub..ub + f];
            let qi = &item_factors[ib..ib + f];
            let qj = &item_factors[jb..jb + f];
            pairwise_gradient(pu, qi, qj, reg)
        };
        for d in 0..f {
            user_factors[ub + d] += lr * g_pu[d];
            item_factors[ib + d] += lr * g_qi[d];
            item_factors[jb + d] += lr * g_qj[d];
        }
    }

    let seen: Vec<bool> = train.rows().iter().map(|r| !r.is_empty()).collect();
    FactorModel {
        factors: f,
        user_factors,
        item_factors,
        catalog: train.catalog(),
        seen,
        loss_trace: Vec::new(),
    }
}

fn init_factors<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>() * 0.2 - 0.1).collect()
}

/// Uniform negative item for a user: any catalog-universe item the user did
/// not rate. None if the user rated everything.
fn sample_negative<R: Rng>(row: &[u32], item_count: usize, rng: &mut R) -> Option<u32> {
    if row.len() >= item_count {
        return None;
    }
    loop {
        let j = rng.random_range(0..item_count as u32);
        if row.binary_search(&j).is_err() {
            return Some(j);
        }
    }
}
