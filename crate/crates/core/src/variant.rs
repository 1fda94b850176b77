//! Variant and antigenic-cluster registries and the mutation kernel.

use crate::params::SimParams;
use crate::rng::RngStream;

/// Lower bound on a multiplicative shock; keeps every property positive.
pub const SHOCK_FLOOR: f64 = -0.99;

pub type VariantId = u32;
pub type ClusterId = u32;

/// The evolving property vector of a variant. Values are stored raw and may
/// exceed 1 after upward mutations; probabilities are clamped where used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantProps {
    pub infectiousness: f64,
    pub latent_end: f64,
    pub incubation_end: f64,
    pub duration: f64,
    pub symptomatic_chance: f64,
    pub fatality: f64,
}

impl VariantProps {
    pub fn wild_type(p: &SimParams) -> Self {
        Self {
            infectiousness: p.infectiousness0,
            latent_end: p.latent_end0,
            incubation_end: p.incubation_end0,
            duration: p.duration0,
            symptomatic_chance: p.symptomatic_chance0,
            fatality: p.fatality0,
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.infectiousness,
            self.latent_end,
            self.incubation_end,
            self.duration,
            self.symptomatic_chance,
            self.fatality,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            infectiousness: a[0],
            latent_end: a[1],
            incubation_end: a[2],
            duration: a[3],
            symptomatic_chance: a[4],
            fatality: a[5],
        }
    }

    pub fn infect_prob(&self) -> f64 {
        self.infectiousness.min(1.0)
    }

    pub fn symptomatic_prob(&self) -> f64 {
        self.symptomatic_chance.min(1.0)
    }

    pub fn fatality_prob(&self) -> f64 {
        self.fatality.min(1.0)
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|&x| x > 0.0 && x.is_finite())
    }
}

/// Scales each property by `1 + max(shock, SHOCK_FLOOR)`.
pub fn apply_shocks(parent: VariantProps, shocks: [f64; 6]) -> VariantProps {
    let mut props = parent.to_array();
    for (h, w) in props.iter_mut().zip(shocks) {
        *h *= 1.0 + w.max(SHOCK_FLOOR);
    }
    VariantProps::from_array(props)
}

/// Draws six independent `N(mean, sd)` shocks and applies them to `parent`.
pub fn mutate_props(parent: VariantProps, mean: f64, sd: f64, rng: &mut RngStream) -> VariantProps {
    let mut shocks = [0.0; 6];
    for w in &mut shocks {
        *w = rng.normal(mean, sd);
    }
    apply_shocks(parent, shocks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRecord {
    pub id: VariantId,
    pub parent: Option<VariantId>,
    pub cluster: ClusterId,
    pub props: VariantProps,
    /// Mutations separating this variant from the wild type.
    pub depth: u32,
    pub born_step: usize,
    /// Whether the mutation that created this variant carried a drift.
    pub drifted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRecord {
    pub id: ClusterId,
    pub parent: Option<ClusterId>,
    /// Drifts separating this cluster from the wild-type cluster.
    pub depth: u32,
    pub children: Vec<ClusterId>,
}

/// Append-only phylogenetic tree of variants plus the antigenic-cluster
/// tree. Identifiers are dense and assigned in creation order; the wild type
/// is variant 0 in cluster 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    variants: Vec<VariantRecord>,
    clusters: Vec<ClusterRecord>,
    max_cluster_depth: u32,
}

impl Registry {
    pub fn new(wild_type: VariantProps) -> Self {
        Self {
            variants: vec![VariantRecord {
                id: 0,
                parent: None,
                cluster: 0,
                props: wild_type,
                depth: 0,
                born_step: 0,
                drifted: false,
            }],
            clusters: vec![ClusterRecord { id: 0, parent: None, depth: 0, children: Vec::new() }],
            max_cluster_depth: 0,
        }
    }

    pub fn variant(&self, id: VariantId) -> &VariantRecord {
        &self.variants[id as usize]
    }

    pub fn get_variant(&self, id: VariantId) -> Option<&VariantRecord> {
        self.variants.get(id as usize)
    }

    pub fn cluster(&self, id: ClusterId) -> &ClusterRecord {
        &self.clusters[id as usize]
    }

    pub fn get_cluster(&self, id: ClusterId) -> Option<&ClusterRecord> {
        self.clusters.get(id as usize)
    }

    pub fn variants(&self) -> &[VariantRecord] {
        &self.variants
    }

    pub fn clusters(&self) -> &[ClusterRecord] {
        &self.clusters
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Deepest cluster ever created, i.e. the maximum antigenic distance to
    /// the wild-type cluster.
    pub fn max_cluster_depth(&self) -> u32 {
        self.max_cluster_depth
    }

    /// Tree neighbours (parent, then children in creation order).
    pub fn cluster_neighbours(&self, id: ClusterId) -> impl Iterator<Item = ClusterId> + '_ {
        let c = &self.clusters[id as usize];
        c.parent.into_iter().chain(c.children.iter().copied())
    }

    fn push_cluster(&mut self, parent: ClusterId) -> ClusterId {
        let id = self.clusters.len() as ClusterId;
        let depth = self.clusters[parent as usize].depth + 1;
        self.clusters[parent as usize].children.push(id);
        self.clusters.push(ClusterRecord { id, parent: Some(parent), depth, children: Vec::new() });
        self.max_cluster_depth = self.max_cluster_depth.max(depth);
        id
    }

    /// Appends a child of `parent` with already-mutated properties. A drift
    /// opens a new cluster below the parent's cluster.
    pub fn push_variant(&mut self, parent: VariantId, props: VariantProps, drift: bool, step: usize) -> VariantId {
        let (parent_cluster, parent_depth) = {
            let p = &self.variants[parent as usize];
            (p.cluster, p.depth)
        };
        let cluster = if drift { self.push_cluster(parent_cluster) } else { parent_cluster };
        let id = self.variants.len() as VariantId;
        self.variants.push(VariantRecord {
            id,
            parent: Some(parent),
            cluster,
            props,
            depth: parent_depth + 1,
            born_step: step,
            drifted: drift,
        });
        id
    }

    /// Creates a mutated child of `parent`.
    pub fn spawn_variant(
        &mut self,
        parent: VariantId,
        drift: bool,
        step: usize,
        mutation_mean: f64,
        mutation_sd: f64,
        rng: &mut RngStream,
    ) -> VariantId {
        let props = mutate_props(self.variants[parent as usize].props, mutation_mean, mutation_sd, rng);
        self.push_variant(parent, props, drift, step)
    }
}
