//! Replicated runs over parameter grids and their aggregation.
//!
//! A sweep crosses five policy/evolution parameters (ϕ, ψ^I, ψ^II,
//! isolation, δ) and runs every scenario `replications` times. Replication
//! seeds depend only on the base seed, the scenario's parameter values and
//! the replication index, so results do not depend on execution order,
//! thread count, or which other scenarios share the grid.

mod io;
pub mod stats;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::abm::{self, StepMetrics};
use crate::error::{Error, Result};
use crate::params::{config_entries, parse_flag, SimParams};
use crate::rng::splitmix64;

pub use io::{
    read_boxes, read_dataset, read_quantiles, write_boxes, write_dataset, write_dataset_header, write_manifest,
    write_quantiles, write_rows, BOX_HEADER, DATASET_HEADER, MANIFEST_HEADER, QUANTILE_HEADER,
};
pub use stats::{box_stats, quantile_sorted, BoxStats};

pub const DEFAULT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// The parameters a sweep varies; identifies a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioKey {
    pub mutation_prob: f64,
    pub cross_immunity: f64,
    pub cross_protection: f64,
    pub isolate_symptomatic: bool,
    pub social_distancing: f64,
}

pub const SCENARIO_COLUMNS: [&str; 5] =
    ["mutation_prob", "cross_immunity", "cross_protection", "isolate_symptomatic", "social_distancing"];

impl ScenarioKey {
    pub fn of(p: &SimParams) -> Self {
        Self {
            mutation_prob: p.mutation_prob,
            cross_immunity: p.cross_immunity,
            cross_protection: p.cross_protection,
            isolate_symptomatic: p.isolate_symptomatic,
            social_distancing: p.social_distancing,
        }
    }

    pub fn apply(&self, base: &SimParams) -> SimParams {
        SimParams {
            mutation_prob: self.mutation_prob,
            cross_immunity: self.cross_immunity,
            cross_protection: self.cross_protection,
            isolate_symptomatic: self.isolate_symptomatic,
            social_distancing: self.social_distancing,
            ..base.clone()
        }
    }

    /// Comma-joined values in [`SCENARIO_COLUMNS`] order, as written to CSV.
    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.mutation_prob,
            self.cross_immunity,
            self.cross_protection,
            self.isolate_symptomatic,
            self.social_distancing
        )
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        format!(
            "phi={} psiI={} psiII={} iso={} delta={}",
            self.mutation_prob,
            self.cross_immunity,
            self.cross_protection,
            if self.isolate_symptomatic { "yes" } else { "no" },
            self.social_distancing
        )
    }

    fn tuple_cmp(&self, other: &Self) -> Ordering {
        self.mutation_prob
            .total_cmp(&other.mutation_prob)
            .then(self.cross_immunity.total_cmp(&other.cross_immunity))
            .then(self.cross_protection.total_cmp(&other.cross_protection))
            .then(self.isolate_symptomatic.cmp(&other.isolate_symptomatic))
            .then(self.social_distancing.total_cmp(&other.social_distancing))
    }
}

impl Eq for ScenarioKey {}

impl PartialOrd for ScenarioKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScenarioKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.tuple_cmp(other)
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

/// Seed of replication `rep` of `key`:
/// `base_seed + splitmix64(splitmix64(fnv1a(csv_fields(key))) ^ rep)`.
pub fn replication_seed(base_seed: u64, key: &ScenarioKey, rep: usize) -> u64 {
    let scenario_hash = splitmix64(fnv1a(key.csv_fields().as_bytes()));
    base_seed.wrapping_add(splitmix64(scenario_hash ^ rep as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scenario: ScenarioKey,
    pub replication: usize,
    pub step: usize,
    pub share_infected: f64,
    pub mortality: f64,
    pub cumulative_infected_share: f64,
    pub mean_r0: f64,
    pub mean_adapted_ratio: f64,
    pub max_antigenic_distance: u32,
    pub mean_phylo_distance: f64,
    pub mean_infectiousness: f64,
    pub mean_latent_end: f64,
    pub mean_incubation_end: f64,
    pub mean_duration: f64,
    pub mean_symptomatic_chance: f64,
    pub mean_fatality: f64,
    pub active_variant_count: usize,
    pub extinct: bool,
}

/// Numeric columns that can be aggregated.
pub const METRICS: [&str; 15] = [
    "share_infected",
    "mortality",
    "cumulative_infected_share",
    "mean_r0",
    "mean_adapted_ratio",
    "max_antigenic_distance",
    "mean_phylo_distance",
    "mean_infectiousness",
    "mean_latent_end",
    "mean_incubation_end",
    "mean_duration",
    "mean_symptomatic_chance",
    "mean_fatality",
    "active_variant_count",
    "extinct",
];

impl MetricRow {
    pub fn from_step(scenario: ScenarioKey, replication: usize, m: &StepMetrics) -> Self {
        let v = &m.variants;
        Self {
            scenario,
            replication,
            step: m.step,
            share_infected: m.share_infected,
            mortality: m.mortality,
            cumulative_infected_share: m.cumulative_infected_share,
            mean_r0: v.mean_r0,
            mean_adapted_ratio: v.mean_adapted_ratio,
            max_antigenic_distance: v.max_antigenic_distance,
            mean_phylo_distance: v.mean_phylo_depth,
            mean_infectiousness: v.mean_props.infectiousness,
            mean_latent_end: v.mean_props.latent_end,
            mean_incubation_end: v.mean_props.incubation_end,
            mean_duration: v.mean_props.duration,
            mean_symptomatic_chance: v.mean_props.symptomatic_chance,
            mean_fatality: v.mean_props.fatality,
            active_variant_count: m.active_variant_count,
            extinct: m.extinct,
        }
    }

    /// Value of a named metric (booleans as 0/1).
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "share_infected" => self.share_infected,
            "mortality" => self.mortality,
            "cumulative_infected_share" => self.cumulative_infected_share,
            "mean_r0" => self.mean_r0,
            "mean_adapted_ratio" => self.mean_adapted_ratio,
            "max_antigenic_distance" => self.max_antigenic_distance as f64,
            "mean_phylo_distance" => self.mean_phylo_distance,
            "mean_infectiousness" => self.mean_infectiousness,
            "mean_latent_end" => self.mean_latent_end,
            "mean_incubation_end" => self.mean_incubation_end,
            "mean_duration" => self.mean_duration,
            "mean_symptomatic_chance" => self.mean_symptomatic_chance,
            "mean_fatality" => self.mean_fatality,
            "active_variant_count" => self.active_variant_count as f64,
            "extinct" => self.extinct as u8 as f64,
            _ => return None,
        })
    }
}

pub fn check_metric(name: &str) -> Result<()> {
    if METRICS.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownMetric(name.to_string()))
    }
}

/// One full replication as metric rows, one per step.
pub fn run_replication(params: SimParams, replication: usize) -> Result<Vec<MetricRow>> {
    let key = ScenarioKey::of(&params);
    Ok(abm::run(params)?.iter().map(|m| MetricRow::from_step(key, replication, m)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Non-varied parameters, horizon and base seed.
    pub base: SimParams,
    pub mutation_prob: Vec<f64>,
    pub cross_immunity: Vec<f64>,
    pub cross_protection: Vec<f64>,
    pub isolate_symptomatic: Vec<bool>,
    pub social_distancing: Vec<f64>,
    pub replications: usize,
}

pub const DEFAULT_REPLICATIONS: usize = 100;

impl SweepGrid {
    /// A grid with a single scenario: the base parameters themselves.
    pub fn single(base: SimParams, replications: usize) -> Self {
        Self {
            mutation_prob: vec![base.mutation_prob],
            cross_immunity: vec![base.cross_immunity],
            cross_protection: vec![base.cross_protection],
            isolate_symptomatic: vec![base.isolate_symptomatic],
            social_distancing: vec![base.social_distancing],
            replications,
            base,
        }
    }

    /// Parses a grid file over `base`. List keys take comma-separated
    /// values; `replications`, `horizon` and `base_seed` are scalars. Absent
    /// lists default to the base value. The result is not validated.
    pub fn from_grid_str(base: SimParams, text: &str) -> Result<Self> {
        let mut grid = Self::single(base, DEFAULT_REPLICATIONS);
        fn list<T>(key: &str, value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
            value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse).collect::<Result<Vec<T>>>().and_then(
                |v| {
                    if v.is_empty() {
                        Err(Error::InvalidValue { key: key.to_string(), value: value.to_string() })
                    } else {
                        Ok(v)
                    }
                },
            )
        }
        let float = |key: &str| {
            let key = key.to_string();
            move |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidValue { key: key.clone(), value: s.to_string() })
        };
        let scalar = |key: &str, value: &str| {
            value.parse::<u64>().map_err(|_| Error::InvalidValue { key: key.to_string(), value: value.to_string() })
        };
        for (_, key, value) in config_entries(text)? {
            match key {
                "mutation_prob" => grid.mutation_prob = list(key, value, float(key))?,
                "cross_immunity" => grid.cross_immunity = list(key, value, float(key))?,
                "cross_protection" => grid.cross_protection = list(key, value, float(key))?,
                "social_distancing" => grid.social_distancing = list(key, value, float(key))?,
                "isolate_symptomatic" => grid.isolate_symptomatic = list(key, value, |s| parse_flag(key, s))?,
                "replications" => grid.replications = scalar(key, value)? as usize,
                "horizon" => grid.base.horizon = scalar(key, value)? as usize,
                "base_seed" => grid.base.seed = scalar(key, value)?,
                _ => return Err(Error::UnknownKey(key.to_string())),
            }
        }
        Ok(grid)
    }

    /// Scenarios in grid order (ϕ outermost, δ innermost).
    pub fn scenarios(&self) -> Vec<ScenarioKey> {
        let mut out = Vec::new();
        for &mutation_prob in &self.mutation_prob {
            for &cross_immunity in &self.cross_immunity {
                for &cross_protection in &self.cross_protection {
                    for &isolate_symptomatic in &self.isolate_symptomatic {
                        for &social_distancing in &self.social_distancing {
                            out.push(ScenarioKey {
                                mutation_prob,
                                cross_immunity,
                                cross_protection,
                                isolate_symptomatic,
                                social_distancing,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(self) -> Result<Self> {
        if self.replications == 0 {
            return Err(Error::OutOfRange { field: "replications", range: "[1,inf)" });
        }
        let scenarios = self.scenarios();
        if scenarios.is_empty() {
            return Err(Error::NoData(": empty sweep grid".into()));
        }
        for key in &scenarios {
            key.apply(&self.base).validate()?;
        }
        Ok(self)
    }

    /// Parameters of replication `rep` of `key`, seed included.
    pub fn replication_params(&self, key: &ScenarioKey, rep: usize) -> SimParams {
        SimParams { seed: replication_seed(self.base.seed, key, rep), ..key.apply(&self.base) }
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.scenarios()
            .into_iter()
            .enumerate()
            .flat_map(|(index, key)| {
                (0..self.replications).map(move |rep| ManifestEntry {
                    scenario_index: index,
                    scenario: key,
                    replication: rep,
                    seed: 0,
                })
            })
            .map(|mut e| {
                e.seed = replication_seed(self.base.seed, &e.scenario, e.replication);
                e
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub scenario_index: usize,
    pub scenario: ScenarioKey,
    pub replication: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepDataset {
    pub rows: Vec<MetricRow>,
}

/// All replications of one scenario, in parallel on the current rayon pool,
/// ordered by (replication, step).
pub fn sweep_scenario(grid: &SweepGrid, key: &ScenarioKey) -> Result<Vec<MetricRow>> {
    let per_rep: Vec<Vec<MetricRow>> = (0..grid.replications)
        .into_par_iter()
        .map(|rep| run_replication(grid.replication_params(key, rep), rep))
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Every scenario × replication, ordered by (scenario in grid order,
/// replication, step).
pub fn sweep(grid: &SweepGrid) -> Result<SweepDataset> {
    let grid = grid.clone().validate()?;
    let jobs: Vec<(ScenarioKey, usize)> =
        grid.scenarios().into_iter().flat_map(|k| (0..grid.replications).map(move |r| (k, r))).collect();
    let per_job: Vec<Vec<MetricRow>> = jobs
        .into_par_iter()
        .map(|(key, rep)| run_replication(grid.replication_params(&key, rep), rep))
        .collect::<Result<_>>()?;
    Ok(SweepDataset { rows: per_job.into_iter().flatten().collect() })
}

/// Metric values grouped by scenario and step. Values within a group are
/// sorted, so the grouping does not depend on row order.
fn grouped(ds: &SweepDataset, metric: &str) -> Result<BTreeMap<(ScenarioKey, usize), Vec<f64>>> {
    check_metric(metric)?;
    let mut groups: BTreeMap<(ScenarioKey, usize), Vec<f64>> = BTreeMap::new();
    for row in &ds.rows {
        let v = row.metric(metric).expect("checked metric");
        groups.entry((row.scenario, row.step)).or_default().push(v);
    }
    for v in groups.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRow {
    pub scenario: ScenarioKey,
    pub step: usize,
    pub quantile: f64,
    pub value: f64,
}

/// Per scenario and step, empirical quantiles of `metric` across
/// replications. Rows are ordered by (scenario, step, quantile order given).
pub fn quantile_series(ds: &SweepDataset, metric: &str, quantiles: &[f64]) -> Result<Vec<QuantileRow>> {
    if let Some(&q) = quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::InvalidValue { key: "quantile".into(), value: q.to_string() });
    }
    let groups = grouped(ds, metric)?;
    let mut out = Vec::with_capacity(groups.len() * quantiles.len());
    for ((scenario, step), values) in &groups {
        for &quantile in quantiles {
            out.push(QuantileRow {
                scenario: *scenario,
                step: *step,
                quantile,
                value: quantile_sorted(values, quantile),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub scenario: ScenarioKey,
    pub stats: BoxStats,
}

/// Notched box statistics of `metric` at `step`, one row per scenario.
pub fn notched_box(ds: &SweepDataset, metric: &str, step: usize) -> Result<Vec<BoxRow>> {
    let groups = grouped(ds, metric)?;
    let out: Vec<BoxRow> = groups
        .iter()
        .filter(|((_, s), _)| *s == step)
        .map(|((scenario, _), values)| BoxRow { scenario: *scenario, stats: box_stats(values) })
        .collect();
    if out.is_empty() {
        return Err(Error::NoData(format!(" at step {step}")));
    }
    Ok(out)
}
