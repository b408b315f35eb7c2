//! Adaptive Euler-Maruyama integration of the macroscopic SDEs.
//!
//! Each step uses `dt = min(max_dt, kappa^2 / R)`, where `R` is the larger of
//! `|drift| / w` and `diffusion^2 / w^2` over all components and `w` is the
//! distance to the nearest domain bound plus [`DELTA`]. Steps that leave the
//! domain are reflected back inside. Steps are truncated so that the
//! trajectory lands exactly on every sampling time.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{HerdError, Result};
use crate::kinetics::{self, MacroState, ThreeStateParams, TwoStateParams, DELTA};
use crate::rng;
use crate::series::TimeSeries;

pub const MAX_DIM: usize = 2;

pub type State = [f64; MAX_DIM];

/// A diagonal-noise SDE of dimension 1 or 2.
///
/// Component `i` evolves as `dx_i = drift_i dt + diffusion_i dW_i` with
/// independent Wiener processes `W_i`. Only the first [`SdeSystem::dim`]
/// entries of states and coefficient arrays are meaningful.
pub trait SdeSystem: Sync {
    fn dim(&self) -> usize;

    /// Column names for the sampled trajectory.
    fn names(&self) -> &'static [&'static str];

    /// Closed admissible interval of each component.
    fn bounds(&self) -> [(f64, f64); MAX_DIM];

    /// Domain whose walls set the step size. Defaults to [`SdeSystem::bounds`];
    /// systems with artificial reflecting limits return their natural domain.
    fn step_domain(&self) -> [(f64, f64); MAX_DIM] {
        self.bounds()
    }

    /// `(drift, diffusion)` at `state`.
    fn coefficients(&self, state: &State) -> Result<(State, State)>;

    /// Variability clock `tau` multiplying the event rate; 1 when absent.
    fn clock(&self, _state: &State) -> f64 {
        1.0
    }
}

/// Two-state herding SDE for the fraction `x` in state 2.
#[derive(Debug, Clone, Copy)]
pub struct TwoStateSde(pub TwoStateParams);

impl SdeSystem for TwoStateSde {
    fn dim(&self) -> usize {
        1
    }

    fn names(&self) -> &'static [&'static str] {
        &["x"]
    }

    fn bounds(&self) -> [(f64, f64); MAX_DIM] {
        [(DELTA, 1.0 - DELTA); MAX_DIM]
    }

    fn coefficients(&self, s: &State) -> Result<(State, State)> {
        let (a, b) = kinetics::two_state_drift_diffusion(s[0], &self.0)?;
        Ok(([a, 0.0], [b, 0.0]))
    }

    fn clock(&self, s: &State) -> f64 {
        self.0.tau(s[0])
    }
}

/// Two-state SDE written for `y = x / (1 - x)`, restricted to `[y_min, y_max]`.
#[derive(Debug, Clone, Copy)]
pub struct TransformedSde {
    pub params: TwoStateParams,
    pub y_min: f64,
    pub y_max: f64,
}

impl SdeSystem for TransformedSde {
    fn dim(&self) -> usize {
        1
    }

    fn names(&self) -> &'static [&'static str] {
        &["y"]
    }

    fn bounds(&self) -> [(f64, f64); MAX_DIM] {
        [(self.y_min, self.y_max); MAX_DIM]
    }

    fn coefficients(&self, s: &State) -> Result<(State, State)> {
        let (a, b) = kinetics::transformed_drift_diffusion(s[0], &self.params)?;
        Ok(([a, 0.0], [b, 0.0]))
    }

    fn clock(&self, s: &State) -> f64 {
        s[0].powf(-self.params.alpha)
    }
}

/// `dx = (eta - lambda/2) x^(2 eta - 1) dt + x^eta dW` between reflecting
/// limits `x_min` and `x_max`.
#[derive(Debug, Clone, Copy)]
pub struct GeneralClassSde {
    pub eta: f64,
    pub lambda: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl GeneralClassSde {
    pub fn new(eta: f64, lambda: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(HerdError::config("x_min, x_max", "need 0 < x_min < x_max < inf"));
        }
        if !(eta.is_finite() && lambda.is_finite()) {
            return Err(HerdError::config("eta, lambda", "must be finite"));
        }
        Ok(GeneralClassSde {
            eta,
            lambda,
            x_min,
            x_max,
        })
    }
}

impl SdeSystem for GeneralClassSde {
    fn dim(&self) -> usize {
        1
    }

    fn names(&self) -> &'static [&'static str] {
        &["x"]
    }

    fn bounds(&self) -> [(f64, f64); MAX_DIM] {
        [(self.x_min, self.x_max); MAX_DIM]
    }

    /// The limits are artificial; steps scale with the distance to the
    /// singular point `x = 0`, giving `dt ~ kappa^2 x^(2 - 2 eta)`.
    fn step_domain(&self) -> [(f64, f64); MAX_DIM] {
        [(0.0, f64::INFINITY); MAX_DIM]
    }

    fn coefficients(&self, s: &State) -> Result<(State, State)> {
        let x = s[0];
        if !(x > 0.0) {
            return Err(HerdError::Domain {
                name: "x",
                value: x,
                domain: "(0, inf)",
            });
        }
        let x_eta = x.powf(self.eta);
        let drift = (self.eta - self.lambda / 2.0) * x_eta * x_eta / x;
        Ok(([drift, 0.0], [x_eta, 0.0]))
    }
}

/// Three-group system for `(n_f, xi)` with the variable event rate `1/tau`.
#[derive(Debug, Clone, Copy)]
pub struct ThreeStateSde(pub ThreeStateParams);

impl SdeSystem for ThreeStateSde {
    fn dim(&self) -> usize {
        2
    }

    fn names(&self) -> &'static [&'static str] {
        &["n_f", "xi"]
    }

    fn bounds(&self) -> [(f64, f64); MAX_DIM] {
        [(DELTA, 1.0 - DELTA), (-1.0 + DELTA, 1.0 - DELTA)]
    }

    fn coefficients(&self, s: &State) -> Result<(State, State)> {
        kinetics::three_state_drift_diffusion(&MacroState { n_f: s[0], xi: s[1] }, &self.0)
    }

    fn clock(&self, s: &State) -> f64 {
        let state = MacroState { n_f: s[0], xi: s[1] }.floored();
        kinetics::tau_three_state(&state, self.0.alpha).unwrap_or(1.0)
    }
}

/// Step control, time grid and seeding for one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    /// Step-control constant, `0 < kappa <= 1`.
    pub kappa: f64,
    pub max_dt: f64,
    /// Lower limit on the step size. Reflection handles the boundary layer
    /// below this resolution.
    pub min_dt: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub seed: u64,
    pub stream: u64,
    pub initial: Vec<f64>,
}

impl IntegratorConfig {
    pub const DEFAULT_KAPPA: f64 = 0.1;
    pub const DEFAULT_MIN_DT: f64 = 1e-7;

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(HerdError::config("kappa", "must lie in (0, 1]"));
        }
        if !(self.max_dt > 0.0 && self.max_dt.is_finite()) {
            return Err(HerdError::config("max_dt", "must be positive"));
        }
        if !(self.min_dt >= 0.0 && self.min_dt <= self.max_dt) {
            return Err(HerdError::config("min_dt", "must lie in [0, max_dt]"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(HerdError::config("t_end", "must be positive"));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= self.t_end) {
            return Err(HerdError::config("sample_dt", "must be positive and at most t_end"));
        }
        if self.initial.len() != dim {
            return Err(HerdError::config(
                "initial",
                format!("expected {dim} components, got {}", self.initial.len()),
            ));
        }
        Ok(())
    }
}

/// Reflects `x` at the walls of `[lo, hi]`, bouncing as often as needed.
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if (lo..=hi).contains(&x) || x.is_nan() {
        return x;
    }
    let width = hi - lo;
    let u = (x - lo).rem_euclid(2.0 * width);
    let y = if u > width { lo + 2.0 * width - u } else { lo + u };
    y.clamp(lo, hi)
}

fn check_finite(drift: &State, diffusion: &State, dim: usize, t: f64) -> Result<()> {
    if drift[..dim].iter().chain(&diffusion[..dim]).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(HerdError::NumericFailure { t })
    }
}

fn advance<S: SdeSystem + ?Sized>(system: &S, state: &State, drift: &State, diffusion: &State, dt: f64, dw: &State) -> State {
    let bounds = system.bounds();
    let mut next = *state;
    for i in 0..system.dim() {
        let x = state[i] + drift[i] * dt + diffusion[i] * dw[i];
        next[i] = reflect(x, bounds[i].0, bounds[i].1);
    }
    next
}

/// One Euler-Maruyama step; `increments` are the Wiener increments
/// (standard normals already scaled by `sqrt(dt)`).
pub fn em_step<S: SdeSystem + ?Sized>(state: &State, system: &S, dt: f64, increments: &State) -> Result<State> {
    if !(dt > 0.0) {
        return Err(HerdError::config("dt", "must be positive"));
    }
    let (drift, diffusion) = system.coefficients(state)?;
    check_finite(&drift, &diffusion, system.dim(), f64::NAN)?;
    Ok(advance(system, state, &drift, &diffusion, dt, increments))
}

fn step_rate<S: SdeSystem + ?Sized>(system: &S, state: &State, drift: &State, diffusion: &State) -> f64 {
    let bounds = system.step_domain();
    let mut rate: f64 = 0.0;
    for i in 0..system.dim() {
        let (lo, hi) = bounds[i];
        let width = (state[i] - lo).min(hi - state[i]).max(0.0) + DELTA;
        rate = rate
            .max(drift[i].abs() / width)
            .max(diffusion[i] * diffusion[i] / (width * width));
    }
    rate
}

fn dt_from_rate(rate: f64, cfg: &IntegratorConfig) -> f64 {
    if rate > 0.0 {
        (cfg.kappa * cfg.kappa / rate).clamp(cfg.min_dt, cfg.max_dt)
    } else {
        cfg.max_dt
    }
}

/// Step size for `state` under the adaptive rule.
pub fn adaptive_dt<S: SdeSystem + ?Sized>(state: &State, system: &S, cfg: &IntegratorConfig) -> Result<f64> {
    let (drift, diffusion) = system.coefficients(state)?;
    check_finite(&drift, &diffusion, system.dim(), f64::NAN)?;
    Ok(dt_from_rate(step_rate(system, state, &drift, &diffusion), cfg))
}

/// What an observer sees after every accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub increments: State,
    pub state: State,
}

/// Integrates `system` and samples it on the grid `k * sample_dt`.
pub fn integrate<S: SdeSystem + ?Sized>(system: &S, cfg: &IntegratorConfig) -> Result<TimeSeries> {
    integrate_observed(system, cfg, |_| {})
}

/// [`integrate`] with a callback invoked after every step.
pub fn integrate_observed<S, F>(system: &S, cfg: &IntegratorConfig, mut observer: F) -> Result<TimeSeries>
where
    S: SdeSystem + ?Sized,
    F: FnMut(&StepRecord),
{
    let dim = system.dim();
    cfg.validate(dim)?;
    let bounds = system.bounds();
    let mut state = [0.0; MAX_DIM];
    for i in 0..dim {
        state[i] = reflect(cfg.initial[i], bounds[i].0, bounds[i].1);
    }
    let mut rng = rng::stream(cfg.seed, cfg.stream);
    let n_samples = (cfg.t_end / cfg.sample_dt + 1e-9).floor() as usize + 1;
    let names = system.names();
    let mut series = TimeSeries::with_capacity(names, n_samples);
    series.push(0.0, &state[..dim]);

    let mut t = 0.0;
    for k in 1..n_samples {
        let t_sample = k as f64 * cfg.sample_dt;
        loop {
            let (drift, diffusion) = system.coefficients(&state)?;
            check_finite(&drift, &diffusion, dim, t)?;
            let mut dt = dt_from_rate(step_rate(system, &state, &drift, &diffusion), cfg);
            let lands = t + dt >= t_sample * (1.0 - 1e-12);
            if lands {
                dt = t_sample - t;
            }
            let sqrt_dt = dt.sqrt();
            let mut dw = [0.0; MAX_DIM];
            for w in dw.iter_mut().take(dim) {
                *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
            }
            state = advance(system, &state, &drift, &diffusion, dt, &dw);
            t = if lands { t_sample } else { t + dt };
            observer(&StepRecord {
                t,
                dt,
                increments: dw,
                state,
            });
            if lands {
                break;
            }
        }
        series.push(t, &state[..dim]);
    }
    Ok(series)
}
