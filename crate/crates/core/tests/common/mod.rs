//! Shared fixtures for the integration tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use synthratings::InteractionSet;

/// 4 users over 3 items forming two exact communities:
/// u0={i0,i1}, u1={i0,i1}, u2={i1,i2}, u3={i1,i2}.
pub fn toy_fixture() -> InteractionSet {
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

/// Two communities with distinct item pools and varied per-user counts,
/// so count histograms are not degenerate.
pub fn varied_fixture() -> InteractionSet {
    InteractionSet::from_pairs([
        ("u0", "a"),
        ("u0", "b"),
        ("u0", "c"),
        ("u1", "a"),
        ("u2", "x"),
        ("u2", "y"),
        ("u3", "x"),
    ])
}

/// Small random dataset: every user keeps at least one interaction.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_users: usize, max_items: usize) -> InteractionSet {
    let users = rng.random_range(1..=max_users);
    let items = rng.random_range(1..=max_items);
    let mut pairs = Vec::new();
    for u in 0..users {
        let count = rng.random_range(1..=items.min(5));
        let mut chosen: Vec<usize> = (0..items).collect();
        for i in 0..count {
            let j = rng.random_range(i..items);
            chosen.swap(i, j);
        }
        for &i in chosen.iter().take(count) {
            pairs.push((format!("u{u}"), format!("i{i}")));
        }
    }
    InteractionSet::from_pairs(pairs)
}

/// A dataset with planted community structure: `groups` user groups, each
/// drawing most of its items from its own pool with popularity skew, plus a
/// little cross-group noise. Large enough to train every recommender.
pub fn structured_dataset(
    seed: u64,
    groups: usize,
    users_per_group: usize,
    items_per_group: usize,
) -> InteractionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_items = groups * items_per_group;
    let mut pairs = Vec::new();
    for g in 0..groups {
        for u in 0..users_per_group {
            let user = format!("u{}", g * users_per_group + u);
            let count = rng.random_range(3..=8);
            let mut taken = std::collections::BTreeSet::new();
            while taken.len() < count {
                // popularity skew inside the group pool: squared uniform
                let r = rng.random::<f64>();
                let offset = ((r * r) * items_per_group as f64) as usize;
                let item = if rng.random::<f64>() < 0.9 {
                    g * items_per_group + offset.min(items_per_group - 1)
                } else {
                    rng.random_range(0..total_items)
                };
                taken.insert(item);
            }
            for item in taken {
                pairs.push((user.clone(), format!("i{item}")));
            }
        }
    }
    InteractionSet::from_pairs(pairs)
}
