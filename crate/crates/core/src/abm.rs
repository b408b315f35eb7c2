//! Exact event-driven simulation of the two- and three-state agent populations.
//!
//! The population is a continuous-time Markov chain in which one agent
//! changes state per event. The aggregate rate of a `j -> i` jump is
//! `X_j * eta_ji`; waiting times are exponential in the total rate and the
//! channel is chosen in proportion to its rate.
//!
//! Internally the simulator works in scaled time (`t_s = h t`, or `h1 t`),
//! so per-agent rates are divided by `h` before use.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{HerdError, Result};
use crate::kinetics::{self, ThreeStateParams, TwoStateParams};
use crate::rng;
use crate::series::TimeSeries;

/// Integer occupation numbers of the discrete states.
///
/// Two-state populations are `[N - X, X]`; three-state populations are
/// `[fundamentalists, pessimists, optimists]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPopulation {
    pub counts: Vec<u64>,
    pub n_total: u64,
}

impl AgentPopulation {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if !(2..=3).contains(&counts.len()) {
            return Err(HerdError::config(
                "population",
                format!("expected 2 or 3 states, got {}", counts.len()),
            ));
        }
        let n_total = counts.iter().sum();
        if n_total == 0 {
            return Err(HerdError::config("population", "population is empty"));
        }
        Ok(AgentPopulation { counts, n_total })
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.n_total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    fn is_consistent(&self) -> bool {
        self.counts.iter().sum::<u64>() == self.n_total
    }
}

/// Agent model driving the jump process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentModel {
    TwoState(TwoStateParams),
    ThreeState(ThreeStateParams),
}

impl AgentModel {
    fn n_states(&self) -> usize {
        match self {
            AgentModel::TwoState(_) => 2,
            AgentModel::ThreeState(_) => 3,
        }
    }

    /// Rate of scaled time per unit of physical time.
    pub fn time_scale(&self) -> f64 {
        match self {
            AgentModel::TwoState(p) => p.h,
            AgentModel::ThreeState(p) => p.h1,
        }
    }

    fn check(&self, pop: &AgentPopulation) -> Result<()> {
        if pop.counts.len() != self.n_states() || !pop.is_consistent() {
            return Err(HerdError::config(
                "population",
                format!("population {:?} does not match a {}-state model", pop.counts, self.n_states()),
            ));
        }
        match self {
            AgentModel::TwoState(p) => {
                // Zero idiosyncratic rates are allowed here: they make the
                // pure-herding chain absorbing, which the simulator reports.
                if !(p.epsilon1 >= 0.0 && p.epsilon2 >= 0.0 && p.h > 0.0 && p.alpha >= 0.0) {
                    return Err(HerdError::config("model", "two-state rates must be nonnegative and h > 0"));
                }
                if pop.n_total != p.n_agents {
                    return Err(HerdError::config(
                        "population",
                        format!("population holds {} agents, model expects {}", pop.n_total, p.n_agents),
                    ));
                }
            }
            AgentModel::ThreeState(p) => p.validate()?,
        }
        Ok(())
    }
}

/// A `from -> to` jump of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
}

const TWO_STATE_CHANNELS: [Transition; 2] = [Transition { from: 0, to: 1 }, Transition { from: 1, to: 0 }];

const THREE_STATE_CHANNELS: [Transition; 6] = [
    Transition { from: 0, to: 1 },
    Transition { from: 0, to: 2 },
    Transition { from: 1, to: 0 },
    Transition { from: 1, to: 2 },
    Transition { from: 2, to: 0 },
    Transition { from: 2, to: 1 },
];

/// Aggregate rates `X_j * eta_ji` (physical units) for every channel.
pub fn total_transition_rates(pop: &AgentPopulation, model: &AgentModel) -> Result<Vec<(Transition, f64)>> {
    model.check(pop)?;
    match model {
        AgentModel::TwoState(p) => {
            let x = pop.counts[1] as f64 / pop.n_total as f64;
            let (eta1, eta2) = kinetics::two_state_rates(x, p)?;
            Ok(vec![
                (TWO_STATE_CHANNELS[0], pop.counts[0] as f64 * eta1),
                (TWO_STATE_CHANNELS[1], pop.counts[1] as f64 * eta2),
            ])
        }
        AgentModel::ThreeState(p) => {
            let eta = kinetics::three_state_rates(pop, &p.raw_rates());
            Ok(THREE_STATE_CHANNELS
                .iter()
                .map(|&tr| (tr, pop.counts[tr.from] as f64 * eta[tr.from][tr.to]))
                .collect())
        }
    }
}

/// Draws the next jump and its waiting time (physical units).
pub fn next_event<R: Rng + ?Sized>(pop: &AgentPopulation, model: &AgentModel, rng: &mut R) -> Result<(Transition, f64)> {
    let rates = total_transition_rates(pop, model)?;
    let total: f64 = rates.iter().map(|(_, r)| r).sum();
    if !(total > 0.0) {
        return Err(HerdError::Absorbing);
    }
    let wait = rng.sample::<f64, _>(Exp1) / total;
    let mut u = rng.random::<f64>() * total;
    for &(tr, r) in &rates {
        if u < r {
            return Ok((tr, wait));
        }
        u -= r;
    }
    // Round-off can leave u marginally above the last cumulative sum.
    let last = rates.iter().rev().find(|(_, r)| *r > 0.0).expect("positive total rate");
    Ok((last.0, wait))
}

enum Kernel {
    /// Scaled aggregate rates indexed by the number of agents in state 2.
    Two { up: Vec<f64>, down: Vec<f64> },
    /// Scaled idiosyncratic and herding rates.
    Three { sigma: [[f64; 3]; 3], herd: [[f64; 3]; 3] },
}

/// Jump process in scaled time with an owned population.
pub struct JumpProcess {
    counts: [u64; 3],
    n_states: usize,
    n_total: u64,
    kernel: Kernel,
    time: f64,
    events: u64,
}

impl JumpProcess {
    pub fn new(model: &AgentModel, initial: &AgentPopulation) -> Result<Self> {
        model.check(initial)?;
        let mut counts = [0; 3];
        counts[..initial.counts.len()].copy_from_slice(&initial.counts);
        let n_total = initial.n_total;
        let kernel = match model {
            AgentModel::TwoState(p) => {
                // Rates depend only on X, so tabulate them once.
                let n = n_total as usize;
                let mut up = Vec::with_capacity(n + 1);
                let mut down = Vec::with_capacity(n + 1);
                for x_count in 0..=n {
                    let x = x_count as f64 / n as f64;
                    let (eta1, eta2) = kinetics::two_state_rates(x, p)?;
                    up.push((n - x_count) as f64 * eta1 / p.h);
                    down.push(x_count as f64 * eta2 / p.h);
                }
                Kernel::Two { up, down }
            }
            AgentModel::ThreeState(p) => {
                let raw = ThreeStateParams { h1: 1.0, ..*p }.raw_rates();
                Kernel::Three {
                    sigma: raw.sigma,
                    herd: raw.herd,
                }
            }
        };
        Ok(JumpProcess {
            counts,
            n_states: model.n_states(),
            n_total,
            kernel,
            time: 0.0,
            events: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts[..self.n_states]
    }

    pub fn population(&self) -> AgentPopulation {
        AgentPopulation {
            counts: self.counts().to_vec(),
            n_total: self.n_total,
        }
    }

    #[inline]
    fn fill_rates(&self, out: &mut [f64; 6]) -> f64 {
        match &self.kernel {
            Kernel::Two { up, down } => {
                let x = self.counts[1] as usize;
                out[0] = up[x];
                out[1] = down[x];
                out[0] + out[1]
            }
            Kernel::Three { sigma, herd } => {
                let c = [self.counts[0] as f64, self.counts[1] as f64, self.counts[2] as f64];
                let mut total = 0.0;
                for (k, tr) in THREE_STATE_CHANNELS.iter().enumerate() {
                    // X_j (sigma_ji + N h_ji x_i) with N x_i = X_i
                    let r = c[tr.from] * (sigma[tr.from][tr.to] + herd[tr.from][tr.to] * c[tr.to]);
                    out[k] = r;
                    total += r;
                }
                total
            }
        }
    }

    fn channels(&self) -> &'static [Transition] {
        if self.n_states == 2 {
            &TWO_STATE_CHANNELS
        } else {
            &THREE_STATE_CHANNELS
        }
    }

    /// Draws the next event without applying it: `(channel, absolute time)`.
    /// Returns `None` in an absorbing state.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, f64)> {
        let mut rates = [0.0; 6];
        let total = self.fill_rates(&mut rates);
        if !(total > 0.0) {
            return None;
        }
        let wait = rng.sample::<f64, _>(Exp1) / total;
        let n_channels = self.channels().len();
        let mut u = rng.random::<f64>() * total;
        let mut chosen = n_channels - 1;
        for (k, &r) in rates[..n_channels].iter().enumerate() {
            if u < r {
                chosen = k;
                break;
            }
            u -= r;
        }
        while rates[chosen] <= 0.0 {
            chosen -= 1;
        }
        Some((chosen, self.time + wait))
    }

    /// Applies channel `k` at absolute time `t`.
    #[inline]
    pub fn apply(&mut self, k: usize, t: f64) -> Transition {
        let tr = self.channels()[k];
        debug_assert!(self.counts[tr.from] > 0);
        self.counts[tr.from] -= 1;
        self.counts[tr.to] += 1;
        self.time = t;
        self.events += 1;
        tr
    }

    /// Draws and applies one event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Transition> {
        let (k, t) = self.draw(rng).ok_or(HerdError::Absorbing)?;
        Ok(self.apply(k, t))
    }

    fn observe(&self, row: &mut [f64]) {
        let n = self.n_total as f64;
        if self.n_states == 2 {
            row[0] = self.counts[1] as f64 / n;
        } else {
            row[0] = self.counts[0] as f64 / n;
            row[1] = kinetics::mood_or_neutral(self.counts[2] as f64 / n, self.counts[1] as f64 / n);
        }
    }
}

/// Time grid and seeding for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    /// End of the trajectory in scaled time.
    pub t_end: f64,
    /// Sampling interval in scaled time.
    pub sample_dt: f64,
    pub seed: u64,
    /// Stream index, so that trajectories of one sweep are independent.
    pub stream: u64,
    pub initial: AgentPopulation,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(HerdError::config("t_end", "must be positive"));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= self.t_end) {
            return Err(HerdError::config("sample_dt", "must be positive and at most t_end"));
        }
        Ok(())
    }

    pub(crate) fn n_samples(&self) -> usize {
        (self.t_end / self.sample_dt + 1e-9).floor() as usize + 1
    }
}

/// Output of [`simulate_population`].
#[derive(Debug, Clone)]
pub struct AbmRun {
    /// `x` for two-state runs, `n_f, xi` for three-state runs.
    pub series: TimeSeries,
    pub events: u64,
    pub final_population: AgentPopulation,
    /// Scaled time at which the chain got stuck, if it did.
    pub absorbed_at: Option<f64>,
}

/// Simulates one trajectory and samples it on the grid `k * sample_dt`.
///
/// Each sample holds the population left by the latest event at or before
/// the grid time.
pub fn simulate_population(cfg: &TrajectoryConfig, model: &AgentModel) -> Result<AbmRun> {
    cfg.validate()?;
    let mut process = JumpProcess::new(model, &cfg.initial)?;
    let mut rng = rng::stream(cfg.seed, cfg.stream);
    let names: &[&str] = if process.n_states == 2 { &["x"] } else { &["n_f", "xi"] };
    let n_samples = cfg.n_samples();
    let mut series = TimeSeries::with_capacity(names, n_samples);
    let mut row = [0.0; 2];
    let mut absorbed_at = None;
    let mut k = 0;
    while k < n_samples {
        let next = process.draw(&mut rng);
        let t_next = next.map_or(f64::INFINITY, |(_, t)| t);
        process.observe(&mut row);
        while k < n_samples && (k as f64) * cfg.sample_dt < t_next {
            series.push(k as f64 * cfg.sample_dt, &row[..names.len()]);
            k += 1;
        }
        match next {
            Some((channel, t)) if k < n_samples => {
                process.apply(channel, t);
            }
            Some(_) => {}
            None => absorbed_at = Some(process.time()),
        }
    }
    Ok(AbmRun {
        series,
        events: process.events(),
        final_population: process.population(),
        absorbed_at,
    })
}
