//! Simulation parameters and their flat `key=value` file format.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The full parameter vector of one run. A run is a pure function of this
/// value (which includes the seed).
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n_agents: usize,
    pub n_initial_infected: usize,
    /// Contacts per carrier and step (η).
    pub daily_contacts: usize,
    /// Per-contact infection probability of the wild type.
    pub infectiousness0: f64,
    pub latent_end0: f64,
    pub incubation_end0: f64,
    pub duration0: f64,
    pub fatality0: f64,
    pub symptomatic_chance0: f64,
    /// Standard deviation of individual course days, as a fraction of the mean.
    pub course_sd_frac: f64,
    /// Probability that an infection produces a new variant (ϕ).
    pub mutation_prob: f64,
    pub mutation_mean: f64,
    pub mutation_sd: f64,
    /// Per-edge probability that immunity carries over to a neighbouring cluster (ψ^I).
    pub cross_immunity: f64,
    /// Fatality reduction for agents holding any prior immunity (ψ^II).
    pub cross_protection: f64,
    /// Probability that a mutation carries an antigenic drift (κ).
    pub drift_prob: f64,
    pub isolate_symptomatic: bool,
    /// Share of transmission removed by uniform distancing (δ).
    pub social_distancing: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for SimParams {
    /// Baseline calibration: R0 = 2.5 for the wild type, half of all
    /// transmission pre-symptomatic.
    fn default() -> Self {
        Self {
            n_agents: 10_000,
            n_initial_infected: 10,
            daily_contacts: 10,
            infectiousness0: 0.0625,
            latent_end0: 4.0,
            incubation_end0: 6.0,
            duration0: 8.0,
            fatality0: 0.01,
            symptomatic_chance0: 0.7,
            course_sd_frac: 0.1,
            mutation_prob: 0.01,
            mutation_mean: 0.0,
            mutation_sd: 0.05,
            cross_immunity: 0.5,
            cross_protection: 0.99,
            drift_prob: 0.1,
            isolate_symptomatic: false,
            social_distancing: 0.0,
            horizon: 500,
            seed: 1,
        }
    }
}

/// Field names in file order.
pub const FIELDS: [&str; 20] = [
    "n_agents",
    "n_initial_infected",
    "daily_contacts",
    "infectiousness0",
    "latent_end0",
    "incubation_end0",
    "duration0",
    "fatality0",
    "symptomatic_chance0",
    "course_sd_frac",
    "mutation_prob",
    "mutation_mean",
    "mutation_sd",
    "cross_immunity",
    "cross_protection",
    "drift_prob",
    "isolate_symptomatic",
    "social_distancing",
    "horizon",
    "seed",
];

fn unit(field: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfRange { field, range: "[0,1]" })
    }
}

fn at_least_one(field: &'static str, x: usize) -> Result<()> {
    if x >= 1 {
        Ok(())
    } else {
        Err(Error::OutOfRange { field, range: "[1,inf)" })
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { field, range: "(0,inf)" })
    }
}

fn non_negative(field: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { field, range: "[0,inf)" })
    }
}

/// Returns `p` unchanged when every invariant holds, otherwise an error
/// naming the first violated field (in file order).
pub fn validate_params(p: SimParams) -> Result<SimParams> {
    at_least_one("n_agents", p.n_agents)?;
    if p.n_initial_infected > p.n_agents {
        return Err(Error::TooManyInitialInfected { infected: p.n_initial_infected, agents: p.n_agents });
    }
    at_least_one("daily_contacts", p.daily_contacts)?;
    unit("infectiousness0", p.infectiousness0)?;
    positive("latent_end0", p.latent_end0)?;
    positive("incubation_end0", p.incubation_end0)?;
    positive("duration0", p.duration0)?;
    if !(p.duration0 > p.incubation_end0 && p.incubation_end0 > p.latent_end0) {
        return Err(Error::CourseOrdering);
    }
    unit("fatality0", p.fatality0)?;
    unit("symptomatic_chance0", p.symptomatic_chance0)?;
    non_negative("course_sd_frac", p.course_sd_frac)?;
    unit("mutation_prob", p.mutation_prob)?;
    if !p.mutation_mean.is_finite() {
        return Err(Error::OutOfRange { field: "mutation_mean", range: "finite reals" });
    }
    non_negative("mutation_sd", p.mutation_sd)?;
    unit("cross_immunity", p.cross_immunity)?;
    unit("cross_protection", p.cross_protection)?;
    unit("drift_prob", p.drift_prob)?;
    unit("social_distancing", p.social_distancing)?;
    at_least_one("horizon", p.horizon)?;
    Ok(p)
}

impl SimParams {
    pub fn validate(self) -> Result<Self> {
        validate_params(self)
    }

    /// Assigns one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::InvalidValue { key: key.to_string(), value: value.to_string() })
        }
        match key {
            "n_agents" => self.n_agents = parse(key, value)?,
            "n_initial_infected" => self.n_initial_infected = parse(key, value)?,
            "daily_contacts" => self.daily_contacts = parse(key, value)?,
            "infectiousness0" => self.infectiousness0 = parse(key, value)?,
            "latent_end0" => self.latent_end0 = parse(key, value)?,
            "incubation_end0" => self.incubation_end0 = parse(key, value)?,
            "duration0" => self.duration0 = parse(key, value)?,
            "fatality0" => self.fatality0 = parse(key, value)?,
            "symptomatic_chance0" => self.symptomatic_chance0 = parse(key, value)?,
            "course_sd_frac" => self.course_sd_frac = parse(key, value)?,
            "mutation_prob" => self.mutation_prob = parse(key, value)?,
            "mutation_mean" => self.mutation_mean = parse(key, value)?,
            "mutation_sd" => self.mutation_sd = parse(key, value)?,
            "cross_immunity" => self.cross_immunity = parse(key, value)?,
            "cross_protection" => self.cross_protection = parse(key, value)?,
            "drift_prob" => self.drift_prob = parse(key, value)?,
            "isolate_symptomatic" => self.isolate_symptomatic = parse_flag(key, value)?,
            "social_distancing" => self.social_distancing = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "n_agents" => self.n_agents.to_string(),
            "n_initial_infected" => self.n_initial_infected.to_string(),
            "daily_contacts" => self.daily_contacts.to_string(),
            "infectiousness0" => self.infectiousness0.to_string(),
            "latent_end0" => self.latent_end0.to_string(),
            "incubation_end0" => self.incubation_end0.to_string(),
            "duration0" => self.duration0.to_string(),
            "fatality0" => self.fatality0.to_string(),
            "symptomatic_chance0" => self.symptomatic_chance0.to_string(),
            "course_sd_frac" => self.course_sd_frac.to_string(),
            "mutation_prob" => self.mutation_prob.to_string(),
            "mutation_mean" => self.mutation_mean.to_string(),
            "mutation_sd" => self.mutation_sd.to_string(),
            "cross_immunity" => self.cross_immunity.to_string(),
            "cross_protection" => self.cross_protection.to_string(),
            "drift_prob" => self.drift_prob.to_string(),
            "isolate_symptomatic" => self.isolate_symptomatic.to_string(),
            "social_distancing" => self.social_distancing.to_string(),
            "horizon" => self.horizon.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("not a SimParams field: {key}"),
        }
    }

    /// Parses a config file body. Keys absent from the file keep their
    /// default values; unknown keys and duplicates are errors. The result is
    /// not validated.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = SimParams::default();
        let mut seen = Vec::new();
        for (line_no, key, value) in config_entries(text)? {
            if seen.contains(&key) {
                return Err(Error::Config { line: line_no, msg: format!("duplicate key `{key}`") });
            }
            p.set(key, value)?;
            seen.push(key);
        }
        Ok(p)
    }

    /// Writes every field, one `key=value` per line, in file order.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in FIELDS {
            let _ = writeln!(out, "{key}={}", self.get(key));
        }
        out
    }
}

/// Accepts `true/false/yes/no/1/0`.
pub fn parse_flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidValue { key: key.to_string(), value: value.to_string() }),
    }
}

/// Splits a `key=value` file into `(line number, key, value)` triples,
/// dropping blank lines and `#` comments.
pub fn config_entries(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config { line: i + 1, msg: format!("expected key=value, got `{line}`") });
        };
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}
