//! Canonical in-memory representation of an implicit-feedback dataset.
//!
//! An [`InteractionSet`] stores the positive (user, item) pairs of a dataset
//! with dense internal indices and a bijective mapping to the external string
//! identifiers. Users without any positive interaction cannot exist by
//! construction; items are mapped only when they occur in at least one kept
//! interaction.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Totals of a dataset: distinct users, distinct occurring items, interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
}

/// Sparse binary view of one user's row of the user x item matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserVector<'a> {
    dim: usize,
    ones: &'a [u32],
}

impl UserVector<'_> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices of the components equal to one, ascending.
    pub fn ones(&self) -> &[u32] {
        self.ones
    }

    pub fn get(&self, item: u32) -> bool {
        self.ones.binary_search(&item).is_ok()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let mut dense = vec![0u8; self.dim];
        for &i in self.ones {
            dense[i as usize] = 1;
        }
        dense
    }
}

/// Sparse set of positive (user, item) interactions with contiguous internal
/// ids and bijective maps to the external identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSet {
    user_items: Vec<Vec<u32>>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    interaction_count: usize,
}

impl InteractionSet {
    /// Builds a set from raw (external user id, external item id) pairs.
    ///
    /// Duplicate pairs collapse to a single interaction. Internal ids are
    /// assigned densely in first-seen input order, which makes construction
    /// deterministic for a fixed input order.
    pub fn from_pairs<U, I>(pairs: impl IntoIterator<Item = (U, I)>) -> Self
    where
        U: AsRef<str>,
        I: AsRef<str>,
    {
        let mut user_ids: Vec<String> = Vec::new();
        let mut item_ids: Vec<String> = Vec::new();
        let mut user_index: HashMap<String, u32> = HashMap::new();
        let mut item_index: HashMap<String, u32> = HashMap::new();
        let mut user_items: Vec<Vec<u32>> = Vec::new();

        for (user, item) in pairs {
            let user = user.as_ref();
            let item = item.as_ref();
            let u = match user_index.get(user) {
                Some(&u) => u,
                None => {
                    let u = user_ids.len() as u32;
                    user_index.insert(user.to_owned(), u);
                    user_ids.push(user.to_owned());
                    user_items.push(Vec::new());
                    u
                }
            };
            let i = match item_index.get(item) {
                Some(&i) => i,
                None => {
                    let i = item_ids.len() as u32;
                    item_index.insert(item.to_owned(), i);
                    item_ids.push(item.to_owned());
                    i
                }
            };
            user_items[u as usize].push(i);
        }

        let mut interaction_count = 0;
        for items in &mut user_items {
            items.sort_unstable();
            items.dedup();
            interaction_count += items.len();
        }

        InteractionSet {
            user_items,
            user_ids,
            item_ids,
            user_index,
            item_index,
            interaction_count,
        }
    }

    pub fn user_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    /// Number of interactions in the set.
    pub fn len(&self) -> usize {
        self.interaction_count
    }

    pub fn is_empty(&self) -> bool {
        self.interaction_count == 0
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            users: self.user_count(),
            items: self.item_count(),
            ratings: self.len(),
        }
    }

    /// Item indices rated by `user`, ascending. Panics on out-of-range index.
    pub fn items_of(&self, user: u32) -> &[u32] {
        &self.user_items[user as usize]
    }

    /// Per-user item rows, indexed by internal user id.
    pub fn rows(&self) -> &[Vec<u32>] {
        &self.user_items
    }

    /// The binary preference vector of a user over the item catalog.
    pub fn user_vector(&self, user: u32) -> Result<UserVector<'_>> {
        if (user as usize) >= self.user_count() {
            return Err(Error::invalid_argument(format!(
                "user index {user} out of range (user count {})",
                self.user_count()
            )));
        }
        Ok(UserVector {
            dim: self.item_count(),
            ones: &self.user_items[user as usize],
        })
    }

    pub fn contains(&self, user: u32, item: u32) -> bool {
        self.user_items
            .get(user as usize)
            .is_some_and(|items| items.binary_search(&item).is_ok())
    }

    /// All (user, item) pairs in canonical order: users ascending, items
    /// ascending within a user.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.user_items
            .iter()
            .enumerate()
            .flat_map(|(u, items)| items.iter().map(move |&i| (u as u32, i)))
    }

    pub fn external_user_id(&self, user: u32) -> &str {
        &self.user_ids[user as usize]
    }

    pub fn external_item_id(&self, item: u32) -> &str {
        &self.item_ids[item as usize]
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index_of(&self, external: &str) -> Option<u32> {
        self.user_index.get(external).copied()
    }

    pub fn item_index_of(&self, external: &str) -> Option<u32> {
        self.item_index.get(external).copied()
    }

    /// Writes the canonical dataset format: one `user\titem` line per
    /// interaction, users in internal order, items ascending within a user.
    pub fn write_canonical<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for (u, items) in self.user_items.iter().enumerate() {
            let user = &self.user_ids[u];
            for &i in items {
                writer.write_all(user.as_bytes())?;
                writer.write_all(b"\t")?;
                writer.write_all(self.item_ids[i as usize].as_bytes())?;
                writer.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Reads the canonical dataset format produced by [`write_canonical`].
    ///
    /// [`write_canonical`]: InteractionSet::write_canonical
    pub fn read_canonical<R: BufRead>(reader: R) -> Result<Self> {
        crate::ingest::parse(reader, crate::ingest::SourceFormat::Canonical, 0.0)
    }

    /// Content hash of the canonical serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (u, items) in self.user_items.iter().enumerate() {
            for &i in items {
                hasher.update(self.user_ids[u].as_bytes());
                hasher.update(b"\t");
                hasher.update(self.item_ids[i as usize].as_bytes());
                hasher.update(b"\n");
            }
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}
