//! Financial observables of the three-group model.
//!
//! The relative log-price `p = ln(P_f / P)` follows from the macroscopic
//! state as `p = r0_bar * xi * (1 - n_f) / n_f`. The double-stochastic return
//! over a window `T` is a q-Gaussian draw whose scale
//! `r0 = b + a |MA(p, T)|` is set by the moving average of the log-price:
//! `b` carries the exogenous noise and `a` the endogenous herding signal.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HerdError, Result};
use crate::kinetics::{MacroState, DELTA};
use crate::series::TimeSeries;

/// Market-layer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Relative impact factor of a chartist.
    pub r0_bar: f64,
    /// Endogenous coupling of the return scale to `|MA(p)|`.
    pub a: f64,
    /// Exogenous noise scale.
    pub b: f64,
    /// Power-law exponent of the q-Gaussian density.
    pub lambda_q: f64,
    /// Return and averaging window, scaled time.
    pub window_t: f64,
    /// Geometric Brownian drift per unit time.
    pub mu: f64,
    /// Geometric Brownian volatility per sqrt(unit time).
    pub sigma: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0_bar > 0.0 && self.r0_bar.is_finite()) {
            return Err(HerdError::config("r0_bar", "must be positive"));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(HerdError::config("a", "must be nonnegative"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(HerdError::config("b", "must be nonnegative"));
        }
        if !(self.lambda_q > 3.0 && self.lambda_q.is_finite()) {
            return Err(HerdError::config("lambda", "q-Gaussian exponent must exceed 3"));
        }
        if !(self.window_t > 0.0 && self.window_t.is_finite()) {
            return Err(HerdError::config("window_T", "must be positive"));
        }
        if !(self.sigma >= 0.0 && self.mu.is_finite() && self.sigma.is_finite()) {
            return Err(HerdError::config("sigma", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Relative log-price `r0_bar * (n_o - n_p) / n_f`.
pub fn log_price(state: &MacroState, r0_bar: f64) -> Result<f64> {
    if !(state.n_f >= DELTA) {
        return Err(HerdError::Domain {
            name: "n_f",
            value: state.n_f,
            domain: "[1e-6, 1]",
        });
    }
    Ok(r0_bar * state.xi * (1.0 - state.n_f) / state.n_f)
}

/// Return over a window from the log-prices at its ends.
///
/// Since `p = ln(P_f / P)` is already scaled by `r0_bar`, the return is the
/// plain difference.
pub fn endogenous_return(p_now: f64, p_lagged: f64) -> f64 {
    p_now - p_lagged
}

/// Gaussian return of geometric Brownian motion over `window`:
/// mean `(mu - sigma^2/2) T`, variance `sigma^2 T`.
pub fn gaussian_return<R: Rng + ?Sized>(mkt: &MarketParams, window: f64, rng: &mut R) -> Result<f64> {
    if !(window > 0.0) {
        return Err(HerdError::config("T", "must be positive"));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok((mkt.mu - 0.5 * mkt.sigma * mkt.sigma) * window + mkt.sigma * window.sqrt() * z)
}

/// Return scale `r0 = b + a |x|`.
pub fn r0_scale(x: f64, a: f64, b: f64) -> f64 {
    b + a * x.abs()
}

/// Symmetric heavy-tailed law with density proportional to
/// `[1 + r^2 / ((lambda - 1) scale^2)]^(-lambda/2)`.
///
/// This is a Student t law with `lambda - 1` degrees of freedom stretched by
/// `scale`, sampled as a normal over the root of a scaled chi-square.
#[derive(Debug, Clone, Copy)]
pub struct QGaussian {
    scale: f64,
    lambda: f64,
    chi: ChiSquared<f64>,
}

impl QGaussian {
    pub fn new(scale: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 3.0 && lambda.is_finite()) {
            return Err(HerdError::config("lambda", "q-Gaussian exponent must exceed 3"));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(HerdError::config("scale", "must be nonnegative"));
        }
        let chi = ChiSquared::new(lambda - 1.0).map_err(|e| HerdError::config("lambda", e.to_string()))?;
        Ok(QGaussian { scale, lambda, chi })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Unit-scale draw, so callers with a varying scale avoid rebuilding
    /// the chi-square sampler.
    #[inline]
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let nu = self.lambda - 1.0;
        let z: f64 = rng.sample(StandardNormal);
        let c = self.chi.sample(rng);
        z / (c / nu).sqrt()
    }
}

impl Distribution<f64> for QGaussian {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * self.sample_unit(rng)
    }
}

/// One q-Gaussian draw with the given scale.
pub fn q_gaussian_sample<R: Rng + ?Sized>(scale: f64, lambda_q: f64, rng: &mut R) -> Result<f64> {
    Ok(QGaussian::new(scale, lambda_q)?.sample(rng))
}

fn window_samples(dt: f64, window_t: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(HerdError::InsufficientData("series needs at least two samples".into()));
    }
    let m = (window_t / dt).round();
    if window_t < dt * (1.0 - 1e-9) || m < 1.0 {
        return Err(HerdError::config("window_T", "window is shorter than one sample"));
    }
    Ok(m as usize)
}

/// Trailing arithmetic mean over `(t - T, t]` of the first column.
///
/// The window holds `round(T / dt)` samples; output starts at the first
/// grid time `t >= t_0 + T`.
pub fn moving_average(series: &TimeSeries, window_t: f64) -> Result<TimeSeries> {
    let dt = series.dt().unwrap_or(0.0);
    let m = window_samples(dt, window_t)?;
    let values = series
        .columns
        .first()
        .ok_or_else(|| HerdError::InsufficientData("series has no columns".into()))?;
    if values.len() <= m {
        return Err(HerdError::InsufficientData(format!(
            "{} samples cannot fill a {m}-sample window",
            values.len()
        )));
    }
    let mut out = TimeSeries::with_capacity(&[series.names[0].as_str()], values.len() - m);
    let mut sum: f64 = values[1..=m].iter().sum();
    for i in m..values.len() {
        if i > m {
            sum += values[i] - values[i - m];
        }
        out.push(series.times[i], &[sum / m as f64]);
    }
    Ok(out)
}

/// Log-price series `p(t)` from a `(n_f, xi)` trajectory.
pub fn price_series(states: &TimeSeries, r0_bar: f64) -> Result<TimeSeries> {
    let n_f = states.column("n_f")?;
    let xi = states.column("xi")?;
    let mut out = TimeSeries::with_capacity(&["p"], states.len());
    for ((&t, &n), &x) in states.times.iter().zip(n_f).zip(xi) {
        out.push(t, &[log_price(&MacroState { n_f: n, xi: x }, r0_bar)?]);
    }
    Ok(out)
}

/// Double-stochastic returns on non-overlapping windows of length `T`.
///
/// At every window end `t_j = t_0 + j T` the return is a q-Gaussian draw of
/// scale `r0_scale(|MA(p, T)(t_j)|, a, b) * sqrt(T)`. The first column of
/// `prices` is taken as the log-price.
pub fn synthesize_returns<R: Rng + ?Sized>(prices: &TimeSeries, mkt: &MarketParams, rng: &mut R) -> Result<TimeSeries> {
    mkt.validate()?;
    let dt = prices.dt().unwrap_or(0.0);
    let m = window_samples(dt, mkt.window_t)?;
    let p = prices
        .columns
        .first()
        .ok_or_else(|| HerdError::InsufficientData("series has no columns".into()))?;
    let n_windows = (p.len() - 1) / m;
    if n_windows < 2 {
        return Err(HerdError::InsufficientData(format!(
            "price series of {} samples covers fewer than two windows of {m} samples",
            p.len()
        )));
    }
    let noise = QGaussian::new(1.0, mkt.lambda_q)?;
    let sqrt_t = mkt.window_t.sqrt();
    let mut out = TimeSeries::with_capacity(&["r"], n_windows);
    for j in 1..=n_windows {
        let end = j * m;
        let ma = p[end + 1 - m..=end].iter().sum::<f64>() / m as f64;
        let scale = r0_scale(ma, mkt.a, mkt.b) * sqrt_t;
        let r = if scale == 0.0 { 0.0 } else { scale * noise.sample_unit(rng) };
        out.push(prices.times[end], &[r]);
    }
    Ok(out)
}
