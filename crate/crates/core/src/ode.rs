//! Deterministic SEPAIRD reference model.
//!
//! Susceptibles are infected by pre-symptomatic (P), asymptomatic (A) and,
//! unless symptomatic cases are isolated, symptomatic (I) carriers. Exposed
//! agents (E) become pre-symptomatic at rate α, pre-symptomatic agents turn
//! symptomatic (share ν) or permanently asymptomatic at rate μ, and both
//! resolve at rate γ. Symptomatic courses end in death with probability 1 − λ.
//! Uniform distancing scales the contact rate by 1 − δ.

use crate::error::{Error, Result};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeParams {
    /// Infectious contacts per day.
    pub beta: f64,
    /// 1 / latent days.
    pub alpha: f64,
    /// 1 / pre-symptomatic days.
    pub mu: f64,
    /// 1 / symptomatic (or asymptomatic) days.
    pub gamma: f64,
    /// Symptomatic share.
    pub nu: f64,
    /// Survival probability of a symptomatic course.
    pub lambda: f64,
    pub delta: f64,
    pub isolate: bool,
}

impl OdeParams {
    pub fn validate(self) -> Result<Self> {
        for (field, x) in [("beta", self.beta), ("alpha", self.alpha), ("mu", self.mu), ("gamma", self.gamma)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::OutOfRange { field, range: "(0,inf)" });
            }
        }
        for (field, x) in [("nu", self.nu), ("lambda", self.lambda)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::OutOfRange { field, range: "(0,1)" });
            }
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::OutOfRange { field: "delta", range: "[0,1]" });
        }
        Ok(self)
    }

    /// Contact rate after distancing.
    fn effective_beta(&self) -> f64 {
        self.beta * (1.0 - self.delta)
    }
}

/// Compartment masses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdeState {
    pub susceptible: f64,
    pub exposed: f64,
    pub presymptomatic: f64,
    pub asymptomatic: f64,
    pub symptomatic: f64,
    pub recovered: f64,
    pub dead: f64,
}

impl OdeState {
    /// Disease-free population with `infected` agents seeded as pre-symptomatic.
    pub fn seeded(population: f64, infected: f64) -> Self {
        Self { susceptible: population - infected, presymptomatic: infected, ..Default::default() }
    }

    pub fn to_array(self) -> [f64; 7] {
        [
            self.susceptible,
            self.exposed,
            self.presymptomatic,
            self.asymptomatic,
            self.symptomatic,
            self.recovered,
            self.dead,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            susceptible: a[0],
            exposed: a[1],
            presymptomatic: a[2],
            asymptomatic: a[3],
            symptomatic: a[4],
            recovered: a[5],
            dead: a[6],
        }
    }

    /// Living population S+E+P+A+I+R.
    pub fn living(&self) -> f64 {
        self.total() - self.dead
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }

    /// Currently infected mass E+P+A+I.
    pub fn active_infections(&self) -> f64 {
        self.exposed + self.presymptomatic + self.asymptomatic + self.symptomatic
    }

    fn axpy(self, h: f64, k: OdeState) -> OdeState {
        let (x, k) = (self.to_array(), k.to_array());
        OdeState::from_array(std::array::from_fn(|j| x[j] + h * k[j]))
    }
}

/// Maps agent-level parameters onto rates: β = η·i₀ and each rate is the
/// reciprocal of its phase length.
pub fn abm_to_ode(p: &SimParams) -> Result<OdeParams> {
    let presymptomatic_days = p.incubation_end0 - p.latent_end0;
    let symptomatic_days = p.duration0 - p.incubation_end0;
    if presymptomatic_days <= 0.0 {
        return Err(Error::ZeroLengthPhase("incubation_end0 - latent_end0"));
    }
    if symptomatic_days <= 0.0 {
        return Err(Error::ZeroLengthPhase("duration0 - incubation_end0"));
    }
    Ok(OdeParams {
        beta: p.daily_contacts as f64 * p.infectiousness0.min(1.0),
        alpha: 1.0 / p.latent_end0,
        mu: 1.0 / presymptomatic_days,
        gamma: 1.0 / symptomatic_days,
        nu: p.symptomatic_chance0,
        lambda: 1.0 - p.fatality0,
        delta: p.social_distancing,
        isolate: p.isolate_symptomatic,
    })
}

/// Time derivative of every compartment.
pub fn derivative(s: &OdeState, p: &OdeParams) -> Result<OdeState> {
    let n = s.living();
    if n <= 0.0 {
        return Err(Error::PopulationExtinct);
    }
    let carriers = s.presymptomatic + s.asymptomatic + if p.isolate { 0.0 } else { s.symptomatic };
    let incidence = s.susceptible * p.effective_beta() * carriers / n;
    let progression = p.alpha * s.exposed;
    let onset = p.mu * s.presymptomatic;
    let asym_exit = p.gamma * s.asymptomatic;
    let sym_exit = p.gamma * s.symptomatic;
    Ok(OdeState {
        susceptible: -incidence,
        exposed: incidence - progression,
        presymptomatic: progression - onset,
        asymptomatic: onset * (1.0 - p.nu) - asym_exit,
        symptomatic: onset * p.nu - sym_exit,
        recovered: asym_exit + p.lambda * sym_exit,
        dead: (1.0 - p.lambda) * sym_exit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, state)` at t = 0 and after every step.
    pub points: Vec<(f64, OdeState)>,
    /// Number of compartment values clipped from below zero.
    pub clipped: usize,
}

impl Trajectory {
    pub fn last(&self) -> &OdeState {
        &self.points.last().expect("trajectory is never empty").1
    }

    /// State at the grid point nearest to `t`.
    pub fn state_at(&self, t: f64) -> &OdeState {
        let idx = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 .0 - t).abs().total_cmp(&(b.1 .0 - t).abs()))
            .map(|(i, _)| i)
            .expect("trajectory is never empty");
        &self.points[idx].1
    }
}

fn rk4_step(y: &OdeState, p: &OdeParams, h: f64) -> Result<OdeState> {
    let k1 = derivative(y, p)?;
    let k2 = derivative(&y.axpy(h / 2.0, k1), p)?;
    let k3 = derivative(&y.axpy(h / 2.0, k2), p)?;
    let k4 = derivative(&y.axpy(h, k3), p)?;
    let (y, k1, k2, k3, k4) = (y.to_array(), k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    Ok(OdeState::from_array(std::array::from_fn(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))))
}

/// Classical fixed-step RK4 from `t = 0` to `horizon`. When `horizon` is not a
/// multiple of `dt` the final step is shortened to land on it exactly.
pub fn integrate(s0: OdeState, p: &OdeParams, horizon: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::OutOfRange { field: "dt", range: "(0,inf)" });
    }
    if horizon.is_nan() || horizon < dt {
        return Err(Error::OutOfRange { field: "horizon", range: "[dt,inf)" });
    }
    let steps = (horizon / dt - 1e-9).ceil() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    let mut clipped = 0;
    let mut y = s0;
    points.push((0.0, y));
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * dt;
        let t = if k == steps { horizon } else { k as f64 * dt };
        let mut next = rk4_step(&y, p, t - t_prev)?.to_array();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged(t));
        }
        for x in &mut next {
            if *x < 0.0 {
                *x = 0.0;
                clipped += 1;
            }
        }
        y = OdeState::from_array(next);
        points.push((t, y));
    }
    Ok(Trajectory { points, clipped })
}

/// Expected secondary infections of one carrier in a fully susceptible
/// population, after distancing and (optionally) isolation.
pub fn basic_reproduction(p: &OdeParams) -> f64 {
    let symptomatic_window = if p.isolate { (1.0 - p.nu) / p.gamma } else { 1.0 / p.gamma };
    p.effective_beta() * (1.0 / p.mu + symptomatic_window)
}

/// Reproduction number at susceptible mass `s` in living population `n`.
pub fn rt_at(p: &OdeParams, s: f64, n: f64) -> f64 {
    basic_reproduction(p) * s / n
}

pub fn effective_reproduction(s: &OdeState, p: &OdeParams) -> Result<f64> {
    let n = s.living();
    if n <= 0.0 {
        return Err(Error::PopulationExtinct);
    }
    Ok(rt_at(p, s.susceptible, n))
}

/// Share of a carrier's transmission that happens before symptom onset.
pub fn presymptomatic_share(p: &OdeParams) -> f64 {
    p.effective_beta() / p.mu / basic_reproduction(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessInput {
    Beta,
    Gamma,
    Mu,
    Nu,
    Susceptible,
    Population,
}

impl FitnessInput {
    pub const ALL: [FitnessInput; 6] = [
        FitnessInput::Beta,
        FitnessInput::Gamma,
        FitnessInput::Mu,
        FitnessInput::Nu,
        FitnessInput::Susceptible,
        FitnessInput::Population,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub input: FitnessInput,
    pub derivative: f64,
    pub sign: Sign,
}

/// Relative finite-difference step.
const FD_REL_STEP: f64 = 1e-6;
/// Elasticities below this magnitude are reported as zero.
const ZERO_ELASTICITY: f64 = 1e-7;

/// Central finite-difference partials of R_t with respect to β, γ, μ, ν, S
/// and N (S and N are perturbed independently). The ν entry is exactly zero
/// without isolation.
pub fn fitness_sensitivities(s: &OdeState, p: &OdeParams) -> Result<[Sensitivity; 6]> {
    let n = s.living();
    if n <= 0.0 {
        return Err(Error::PopulationExtinct);
    }
    let base = rt_at(p, s.susceptible, n);
    let eval = |input: FitnessInput, x: f64| -> f64 {
        let mut q = *p;
        let (mut ss, mut nn) = (s.susceptible, n);
        match input {
            FitnessInput::Beta => q.beta = x,
            FitnessInput::Gamma => q.gamma = x,
            FitnessInput::Mu => q.mu = x,
            FitnessInput::Nu => q.nu = x,
            FitnessInput::Susceptible => ss = x,
            FitnessInput::Population => nn = x,
        }
        rt_at(&q, ss, nn)
    };
    Ok(FitnessInput::ALL.map(|input| {
        let x = match input {
            FitnessInput::Beta => p.beta,
            FitnessInput::Gamma => p.gamma,
            FitnessInput::Mu => p.mu,
            FitnessInput::Nu => p.nu,
            FitnessInput::Susceptible => s.susceptible,
            FitnessInput::Population => n,
        };
        if input == FitnessInput::Nu && !p.isolate {
            return Sensitivity { input, derivative: 0.0, sign: Sign::Zero };
        }
        let h = FD_REL_STEP * x.abs().max(f64::MIN_POSITIVE);
        let derivative = (eval(input, x + h) - eval(input, x - h)) / (2.0 * h);
        let elasticity = if base > 0.0 { derivative * x / base } else { derivative * x };
        let sign = if elasticity.abs() <= ZERO_ELASTICITY || derivative == 0.0 {
            Sign::Zero
        } else if derivative > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        };
        Sensitivity { input, derivative, sign }
    }))
}
