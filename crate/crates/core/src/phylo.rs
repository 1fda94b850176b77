//! Variant fitness measures and tree distances.

use crate::abm::World;
use crate::error::{Error, Result};
use crate::variant::{ClusterId, Registry, VariantId, VariantProps};

/// Secondary infections of one carrier in a fully susceptible population:
/// contacts × infectiousness × infectious window (duration − latent period).
pub fn variant_r0(v: &VariantProps, contacts: usize) -> f64 {
    contacts as f64 * v.infect_prob() * (v.duration - v.latent_end).max(0.0)
}

/// R0 when symptomatic carriers are isolated from symptom onset: symptomatic
/// courses only transmit between the end of the latent period and onset.
pub fn variant_r0_adapted(v: &VariantProps, contacts: usize) -> f64 {
    let rate = contacts as f64 * v.infect_prob();
    let sym = v.symptomatic_prob();
    let full = (v.duration - v.latent_end).max(0.0);
    let pre_onset = (v.incubation_end - v.latent_end).max(0.0);
    (1.0 - sym) * rate * full + sym * rate * pre_onset
}

/// `r0_adapted / r0`, or 1 when the variant has no infectious window at all.
pub fn adapted_ratio(v: &VariantProps, contacts: usize) -> f64 {
    let r0 = variant_r0(v, contacts);
    if r0 > 0.0 {
        variant_r0_adapted(v, contacts) / r0
    } else {
        1.0
    }
}

/// Per-variant summary.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantStats {
    pub r0: f64,
    pub r0_adapted: f64,
    pub adapted_ratio: f64,
    pub phylo_depth: u32,
    pub cluster_depth: u32,
    pub props: VariantProps,
}

pub fn variant_stats(registry: &Registry, id: VariantId, contacts: usize) -> Result<VariantStats> {
    let v = registry.get_variant(id).ok_or(Error::UnknownId(id as usize))?;
    Ok(VariantStats {
        r0: variant_r0(&v.props, contacts),
        r0_adapted: variant_r0_adapted(&v.props, contacts),
        adapted_ratio: adapted_ratio(&v.props, contacts),
        phylo_depth: v.depth,
        cluster_depth: registry.cluster(v.cluster).depth,
        props: v.props,
    })
}

/// Mutations separating a variant from the wild type.
pub fn phylogenetic_distance(registry: &Registry, id: VariantId) -> Result<u32> {
    registry.get_variant(id).map(|v| v.depth).ok_or(Error::UnknownId(id as usize))
}

/// Number of drifts on the tree path between two clusters.
pub fn antigenic_distance(registry: &Registry, a: ClusterId, b: ClusterId) -> Result<u32> {
    let node = |c: ClusterId| registry.get_cluster(c).ok_or(Error::UnknownId(c as usize));
    let (mut x, mut y) = (node(a)?, node(b)?);
    let mut dist = 0;
    while x.depth > y.depth {
        x = registry.cluster(x.parent.expect("non-root has a parent"));
        dist += 1;
    }
    while y.depth > x.depth {
        y = registry.cluster(y.parent.expect("non-root has a parent"));
        dist += 1;
    }
    while x.id != y.id {
        x = registry.cluster(x.parent.expect("non-root has a parent"));
        y = registry.cluster(y.parent.expect("non-root has a parent"));
        dist += 2;
    }
    Ok(dist)
}

/// Unweighted means over a set of variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveVariantStats {
    pub mean_r0: f64,
    pub mean_adapted_ratio: f64,
    pub mean_props: VariantProps,
    pub mean_phylo_depth: f64,
    /// Deepest cluster ever created (never decreases within a run).
    pub max_antigenic_distance: u32,
    /// Number of variants averaged over.
    pub variant_count: usize,
}

/// Unweighted means over `ids`, which must be non-empty.
pub fn mean_variant_stats(registry: &Registry, ids: &[VariantId], contacts: usize) -> ActiveVariantStats {
    assert!(!ids.is_empty(), "mean over an empty variant set");
    let n = ids.len() as f64;
    let mut r0 = 0.0;
    let mut ratio = 0.0;
    let mut depth = 0.0;
    let mut props = [0.0; 6];
    for &id in ids {
        let v = registry.variant(id);
        r0 += variant_r0(&v.props, contacts);
        ratio += adapted_ratio(&v.props, contacts);
        depth += v.depth as f64;
        for (acc, x) in props.iter_mut().zip(v.props.to_array()) {
            *acc += x;
        }
    }
    ActiveVariantStats {
        mean_r0: r0 / n,
        mean_adapted_ratio: ratio / n,
        mean_props: VariantProps::from_array(props.map(|x| x / n)),
        mean_phylo_depth: depth / n,
        max_antigenic_distance: registry.max_cluster_depth(),
        variant_count: ids.len(),
    }
}

/// Means over the currently active variants or, once the virus is extinct,
/// over the variants that were active last.
pub fn active_variant_stats(w: &World) -> ActiveVariantStats {
    let active: Vec<VariantId> = if w.active_variants().is_empty() {
        w.last_active_variants().to_vec()
    } else {
        w.active_variants().iter().copied().collect()
    };
    mean_variant_stats(w.registry(), &active, w.params().daily_contacts)
}
