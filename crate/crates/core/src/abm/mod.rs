//! Agent-based evolutionary engine.
//!
//! Each step runs two phases in a fixed order:
//!
//! 1. **Contacts.** Every infectious, non-isolated carrier (ascending agent
//!    id) meets `daily_contacts` living agents drawn uniformly with
//!    replacement, itself excluded. A contact that is neither infected nor
//!    immune to the carrier's cluster is infected with probability
//!    `min(i, 1) · (1 − δ)`. An infection mutates with probability ϕ, and a
//!    mutation drifts into a new antigenic cluster with probability κ.
//! 2. **Progression.** Counters advance; symptoms are drawn on the symptom
//!    day (and lead to isolation under that policy); on the last day the
//!    agent dies or recovers and acquires immunity.

mod course;
mod immunity;

use std::collections::BTreeSet;

pub use course::{course_from_raw, draw_course, round_day, CourseThresholds};
pub use immunity::{grant_immunity, ClusterSet};

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::phylo::{active_variant_stats, ActiveVariantStats};
use crate::rng::RngStream;
use crate::variant::{ClusterId, Registry, VariantId, VariantProps};

pub type AgentId = u32;

const NOT_ALIVE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Infection {
    pub variant: VariantId,
    /// Steps since infection.
    pub counter: u32,
    pub course: CourseThresholds,
    /// Undetermined until the symptom day.
    pub symptomatic: Option<bool>,
    pub isolated: bool,
}

impl Infection {
    /// Whether the carrier transmits in the coming contact phase.
    pub fn is_infectious(&self) -> bool {
        !self.isolated && self.course.latent_end <= self.counter && self.counter < self.course.end_day
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HealthStatus {
    Susceptible,
    Infected,
    Recovered,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub alive: bool,
    pub infection: Option<Infection>,
    pub immune: ClusterSet,
}

impl Agent {
    fn new() -> Self {
        Self { alive: true, infection: None, immune: ClusterSet::new() }
    }

    pub fn status(&self) -> HealthStatus {
        if !self.alive {
            HealthStatus::Dead
        } else if self.infection.is_some() {
            HealthStatus::Infected
        } else if self.immune.is_empty() {
            HealthStatus::Susceptible
        } else {
            HealthStatus::Recovered
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Infection,
    Mutation,
    Drift,
    Isolation,
    Death,
    Recovery,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Infection => "infection",
            EventKind::Mutation => "mutation",
            EventKind::Drift => "drift",
            EventKind::Isolation => "isolation",
            EventKind::Death => "death",
            EventKind::Recovery => "recovery",
        }
    }
}

/// One line of the audit log. `source` is the transmitting carrier for
/// infections (absent for the initial seeding).
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
    pub agent: Option<AgentId>,
    pub variant: VariantId,
    pub cluster: ClusterId,
    pub source: Option<AgentId>,
}

pub const EVENT_HEADER: &str = "step,event,agent,variant,cluster,source";

impl Event {
    pub fn csv_line(&self) -> String {
        let opt = |x: Option<AgentId>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.step,
            self.kind.as_str(),
            opt(self.agent),
            self.variant,
            self.cluster,
            opt(self.source)
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Infection events, reinfections included.
    pub infections: u64,
    pub deaths: u64,
    pub mutations: u64,
    pub drifts: u64,
    /// Distinct agents infected at least once.
    pub ever_infected: u64,
}

/// Population-level outputs recorded after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub share_infected: f64,
    pub mortality: f64,
    pub cumulative_infected_share: f64,
    pub variants: ActiveVariantStats,
    pub active_variant_count: usize,
    pub extinct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    params: SimParams,
    step: usize,
    agents: Vec<Agent>,
    registry: Registry,
    infected: BTreeSet<AgentId>,
    alive: Vec<AgentId>,
    alive_pos: Vec<u32>,
    variant_active: Vec<u32>,
    active_variants: BTreeSet<VariantId>,
    ever_infected: Vec<bool>,
    counters: Counters,
    last_active: Vec<VariantId>,
    rng: RngStream,
    events: Option<Vec<Event>>,
}

impl World {
    /// Builds the initial population and seeds the wild type into
    /// `n_initial_infected` distinct agents chosen at random.
    pub fn new(params: SimParams) -> Result<Self> {
        Self::build(params, false)
    }

    /// Like [`World::new`] but records every event.
    pub fn with_event_log(params: SimParams) -> Result<Self> {
        Self::build(params, true)
    }

    fn build(params: SimParams, log: bool) -> Result<Self> {
        let params = params.validate()?;
        let n = params.n_agents;
        if params.n_initial_infected > n {
            return Err(Error::TooManyInitialInfected { infected: params.n_initial_infected, agents: n });
        }
        let mut rng = RngStream::new(params.seed);
        let mut world = World {
            step: 0,
            agents: (0..n).map(|_| Agent::new()).collect(),
            registry: Registry::new(VariantProps::wild_type(&params)),
            infected: BTreeSet::new(),
            alive: (0..n as AgentId).collect(),
            alive_pos: (0..n as u32).collect(),
            variant_active: vec![0],
            active_variants: BTreeSet::new(),
            ever_infected: vec![false; n],
            counters: Counters::default(),
            last_active: vec![0],
            rng: RngStream::new(0),
            events: log.then(Vec::new),
            params,
        };
        // Partial Fisher-Yates over agent ids picks the seed cases.
        let mut ids: Vec<AgentId> = (0..n as AgentId).collect();
        for k in 0..world.params.n_initial_infected {
            let j = k + rng.below((n - k) as u64) as usize;
            ids.swap(k, j);
        }
        world.rng = rng;
        let mut seeds = ids[..world.params.n_initial_infected].to_vec();
        seeds.sort_unstable();
        for id in seeds {
            world.infect(id, 0, None);
        }
        Ok(world)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn infected(&self) -> &BTreeSet<AgentId> {
        &self.infected
    }

    pub fn alive_count(&self) -> usize {
        self.alive.len()
    }

    /// Variants with at least one current infection, ascending.
    pub fn active_variants(&self) -> &BTreeSet<VariantId> {
        &self.active_variants
    }

    /// Variants active at the most recent step that had any infection.
    pub fn last_active_variants(&self) -> &[VariantId] {
        &self.last_active
    }

    pub fn active_count(&self, v: VariantId) -> u32 {
        self.variant_active.get(v as usize).copied().unwrap_or(0)
    }

    pub fn events(&self) -> Option<&[Event]> {
        self.events.as_deref()
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.events.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Gives direct access to an agent's immunity, for setting up scenarios.
    pub fn immune_mut(&mut self, agent: AgentId) -> &mut ClusterSet {
        &mut self.agents[agent as usize].immune
    }

    fn log(&mut self, kind: EventKind, agent: Option<AgentId>, variant: VariantId, source: Option<AgentId>) {
        if let Some(events) = self.events.as_mut() {
            let cluster = self.registry.variant(variant).cluster;
            events.push(Event { step: self.step, kind, agent, variant, cluster, source });
        }
    }

    /// Starts an infection with `variant` in `target`.
    fn infect(&mut self, target: AgentId, variant: VariantId, source: Option<AgentId>) {
        let props = self.registry.variant(variant).props;
        let course = draw_course(&props, self.params.course_sd_frac, &mut self.rng);
        let agent = &mut self.agents[target as usize];
        debug_assert!(agent.alive && agent.infection.is_none());
        agent.infection = Some(Infection { variant, counter: 0, course, symptomatic: None, isolated: false });
        self.infected.insert(target);
        if self.variant_active.len() <= variant as usize {
            self.variant_active.resize(variant as usize + 1, 0);
        }
        self.variant_active[variant as usize] += 1;
        self.active_variants.insert(variant);
        self.counters.infections += 1;
        if !std::mem::replace(&mut self.ever_infected[target as usize], true) {
            self.counters.ever_infected += 1;
        }
        self.log(EventKind::Infection, Some(target), variant, source);
    }

    fn release_variant(&mut self, variant: VariantId) {
        let count = &mut self.variant_active[variant as usize];
        *count -= 1;
        if *count == 0 {
            self.active_variants.remove(&variant);
        }
    }

    /// Infects an eligible `target` from a carrier of `source_variant`. The
    /// infection may mutate (probability ϕ) and the mutation may drift
    /// (probability κ); a drift lets every living agent immune to the parent
    /// cluster become immune to the new one with probability ψ^I.
    pub fn try_infect(&mut self, source_variant: VariantId, target: AgentId, source: Option<AgentId>) {
        {
            let t = &self.agents[target as usize];
            let cluster = self.registry.variant(source_variant).cluster;
            assert!(
                t.alive && t.infection.is_none() && !t.immune.contains(cluster),
                "agent {target} is not eligible for infection"
            );
        }
        let mut variant = source_variant;
        if self.rng.bernoulli(self.params.mutation_prob) {
            let drift = self.rng.bernoulli(self.params.drift_prob);
            variant = self.registry.spawn_variant(
                source_variant,
                drift,
                self.step,
                self.params.mutation_mean,
                self.params.mutation_sd,
                &mut self.rng,
            );
            self.counters.mutations += 1;
            self.log(EventKind::Mutation, Some(target), variant, source);
            if drift {
                self.counters.drifts += 1;
                self.log(EventKind::Drift, Some(target), variant, source);
                let parent_cluster = self.registry.variant(source_variant).cluster;
                let new_cluster = self.registry.variant(variant).cluster;
                let psi = self.params.cross_immunity;
                for agent in self.agents.iter_mut().filter(|a| a.alive) {
                    if agent.immune.contains(parent_cluster) && self.rng.bernoulli(psi) {
                        agent.immune.insert(new_cluster);
                    }
                }
            }
        }
        self.infect(target, variant, source);
    }

    pub fn contact_phase(&mut self) {
        let carriers: Vec<(AgentId, VariantId)> = self
            .infected
            .iter()
            .filter_map(|&id| {
                let inf = self.agents[id as usize].infection.as_ref()?;
                inf.is_infectious().then_some((id, inf.variant))
            })
            .collect();
        let contacts = self.params.daily_contacts;
        let distancing = 1.0 - self.params.social_distancing;
        for (carrier, variant) in carriers {
            let others = self.alive.len() - 1;
            if others == 0 {
                break;
            }
            let props = &self.registry.variant(variant).props;
            let p_transmit = props.infect_prob() * distancing;
            let cluster = self.registry.variant(variant).cluster;
            let carrier_pos = self.alive_pos[carrier as usize] as usize;
            for _ in 0..contacts {
                let mut j = self.rng.below(others as u64) as usize;
                if j >= carrier_pos {
                    j += 1;
                }
                let target = self.alive[j];
                let a = &self.agents[target as usize];
                if a.infection.is_some() || a.immune.contains(cluster) {
                    continue;
                }
                if self.rng.bernoulli(p_transmit) {
                    self.try_infect(variant, target, Some(carrier));
                }
            }
        }
    }

    pub fn progression_phase(&mut self) {
        let carriers: Vec<AgentId> = self.infected.iter().copied().collect();
        let isolate = self.params.isolate_symptomatic;
        for id in carriers {
            let inf = self.agents[id as usize].infection.as_mut().expect("indexed agent is infected");
            inf.counter += 1;
            let props = self.registry.variant(inf.variant).props;
            let variant = inf.variant;
            if inf.counter == inf.course.symptom_day && inf.course.symptom_day < inf.course.end_day {
                let symptomatic = self.rng.bernoulli(props.symptomatic_prob());
                inf.symptomatic = Some(symptomatic);
                if symptomatic && isolate {
                    inf.isolated = true;
                    self.log(EventKind::Isolation, Some(id), variant, None);
                }
            }
            let inf = self.agents[id as usize].infection.as_ref().expect("still infected");
            if inf.counter >= inf.course.end_day {
                self.resolve(id, variant, props);
            }
        }
    }

    fn resolve(&mut self, id: AgentId, variant: VariantId, props: VariantProps) {
        let protected = !self.agents[id as usize].immune.is_empty();
        let mut fatality = props.fatality_prob();
        if protected {
            fatality *= 1.0 - self.params.cross_protection;
        }
        let dies = self.rng.bernoulli(fatality);
        self.agents[id as usize].infection = None;
        self.infected.remove(&id);
        self.release_variant(variant);
        if dies {
            self.kill(id);
            self.log(EventKind::Death, Some(id), variant, None);
        } else {
            let cluster = self.registry.variant(variant).cluster;
            self.grant_immunity(id, cluster);
            self.log(EventKind::Recovery, Some(id), variant, None);
        }
    }

    fn kill(&mut self, id: AgentId) {
        self.agents[id as usize].alive = false;
        self.counters.deaths += 1;
        let pos = self.alive_pos[id as usize] as usize;
        self.alive.swap_remove(pos);
        if let Some(&moved) = self.alive.get(pos) {
            self.alive_pos[moved as usize] = pos as u32;
        }
        self.alive_pos[id as usize] = NOT_ALIVE;
    }

    /// Recovery-time immunity: `cluster` for certain, neighbours recursively
    /// with probability ψ^I.
    pub fn grant_immunity(&mut self, agent: AgentId, cluster: ClusterId) {
        assert!(self.agents[agent as usize].alive, "grant_immunity on a dead agent");
        grant_immunity(
            &mut self.agents[agent as usize].immune,
            &self.registry,
            cluster,
            self.params.cross_immunity,
            &mut self.rng,
        );
    }

    /// Advances one step and returns the metrics recorded at its end.
    pub fn step(&mut self) -> StepMetrics {
        self.contact_phase();
        self.progression_phase();
        self.step += 1;
        if !self.active_variants.is_empty() {
            self.last_active.clear();
            self.last_active.extend(self.active_variants.iter().copied());
        }
        self.metrics()
    }

    pub fn metrics(&self) -> StepMetrics {
        let n = self.params.n_agents as f64;
        StepMetrics {
            step: self.step,
            share_infected: self.infected.len() as f64 / n,
            mortality: self.counters.deaths as f64 / n,
            cumulative_infected_share: self.counters.ever_infected as f64 / n,
            variants: active_variant_stats(self),
            active_variant_count: self.active_variants.len(),
            extinct: self.infected.is_empty(),
        }
    }

    /// Checks the bookkeeping invariants; returns a description of the first
    /// violation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let infected: BTreeSet<AgentId> =
            (0..self.agents.len() as AgentId).filter(|&i| self.agents[i as usize].infection.is_some()).collect();
        if infected != self.infected {
            return Err("infected index out of sync".into());
        }
        let total: u64 = self.variant_active.iter().map(|&c| c as u64).sum();
        if total != self.infected.len() as u64 {
            return Err("per-variant counts do not sum to infections".into());
        }
        let dead = self.agents.iter().filter(|a| !a.alive).count() as u64;
        if dead != self.counters.deaths || self.alive.len() as u64 + dead != self.params.n_agents as u64 {
            return Err("death count or alive index out of sync".into());
        }
        for (pos, &id) in self.alive.iter().enumerate() {
            if self.alive_pos[id as usize] as usize != pos || !self.agents[id as usize].alive {
                return Err(format!("alive index broken at agent {id}"));
            }
        }
        for (id, a) in self.agents.iter().enumerate() {
            if let Some(inf) = &a.infection {
                if !a.alive {
                    return Err(format!("dead agent {id} is infected"));
                }
                if inf.counter > inf.course.end_day.max(1) {
                    return Err(format!("agent {id} counter past end day"));
                }
                if inf.isolated && !(inf.symptomatic == Some(true) && self.params.isolate_symptomatic) {
                    return Err(format!("agent {id} isolated without symptoms or policy"));
                }
            }
        }
        Ok(())
    }
}

/// Runs a full horizon and returns one metrics record per step.
pub fn run(params: SimParams) -> Result<Vec<StepMetrics>> {
    let mut world = World::new(params)?;
    let horizon = world.params.horizon;
    Ok((0..horizon).map(|_| world.step()).collect())
}
