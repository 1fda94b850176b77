//! Per-agent immunity sets and recovery-time cross-immunity propagation.

use std::collections::VecDeque;

use crate::rng::RngStream;
use crate::variant::{ClusterId, Registry};

/// Set of antigenic clusters, stored as a growable bitset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterSet {
    words: Vec<u64>,
    len: usize,
}

impl ClusterSet {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn contains(&self, c: ClusterId) -> bool {
        let (w, b) = (c as usize / 64, c % 64);
        self.words.get(w).is_some_and(|x| x >> b & 1 == 1)
    }

    /// Returns `true` if `c` was not yet present.
    pub fn insert(&mut self, c: ClusterId) -> bool {
        let (w, b) = (c as usize / 64, c % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] >> b & 1 == 0;
        self.words[w] |= 1 << b;
        self.len += fresh as usize;
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| (0..64u32).filter(move |b| bits >> b & 1 == 1).map(move |b| w as u32 * 64 + b))
    }
}

/// Adds `cluster` with certainty, then spreads breadth-first over the
/// cluster tree: every tree neighbour of a newly acquired cluster that is
/// not yet held is acquired with probability `cross_immunity`, and each
/// success spreads further. Clusters held before the call do not spread.
pub fn grant_immunity(
    immune: &mut ClusterSet,
    registry: &Registry,
    cluster: ClusterId,
    cross_immunity: f64,
    rng: &mut RngStream,
) {
    if !immune.insert(cluster) {
        return;
    }
    let mut queue = VecDeque::from([cluster]);
    while let Some(c) = queue.pop_front() {
        for n in registry.cluster_neighbours(c) {
            if !immune.contains(n) && rng.bernoulli(cross_immunity) {
                immune.insert(n);
                queue.push_back(n);
            }
        }
    }
}
