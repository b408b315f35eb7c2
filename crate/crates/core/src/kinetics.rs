//! Model mathematics: transition rates, drift and diffusion terms, the
//! `y = x/(1-x)` transform and the power-law exponent predictions.
//!
//! Everything here is a pure function of its arguments. Two-state and
//! three-state SDE terms are written in scaled time `t_s = h t`
//! (`t_s = h1 t` for the three-state model); per-agent transition rates are
//! in physical units (1/time).

use serde::{Deserialize, Serialize};

use crate::abm::AgentPopulation;
use crate::error::{HerdError, Result};

/// Boundary floor applied before evaluating the inter-event time `tau`.
pub const DELTA: f64 = 1e-6;

/// Feedback exponent used when a configuration does not set one.
pub const DEFAULT_ALPHA: f64 = 2.0;

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(HerdError::Domain {
            name,
            value: x,
            domain: "[0, 1]",
        })
    }
}

fn floor_unit(x: f64) -> f64 {
    x.clamp(DELTA, 1.0 - DELTA)
}

/// Parameters of the generalized two-state (Kirman) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateParams {
    /// Scaled idiosyncratic rate toward state 2, `sigma1 / h`.
    pub epsilon1: f64,
    /// Scaled idiosyncratic rate toward state 1, `sigma2 / h`.
    pub epsilon2: f64,
    /// Herding intensity (1/time).
    pub h: f64,
    pub n_agents: u64,
    /// Exponent of the inter-event time `tau(y) = y^-alpha`.
    pub alpha: f64,
}

impl TwoStateParams {
    pub fn new(epsilon1: f64, epsilon2: f64, h: f64, n_agents: u64, alpha: f64) -> Result<Self> {
        let p = TwoStateParams {
            epsilon1,
            epsilon2,
            h,
            n_agents,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HerdError::Domain {
                    name,
                    value: v,
                    domain: "(0, inf)",
                })
            }
        };
        positive("epsilon1", self.epsilon1)?;
        positive("epsilon2", self.epsilon2)?;
        positive("h", self.h)?;
        if self.n_agents < 2 {
            return Err(HerdError::Domain {
                name: "n_agents",
                value: self.n_agents as f64,
                domain: "[2, inf)",
            });
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(HerdError::Domain {
                name: "alpha",
                value: self.alpha,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }

    pub fn sigma1(&self) -> f64 {
        self.epsilon1 * self.h
    }

    pub fn sigma2(&self) -> f64 {
        self.epsilon2 * self.h
    }

    /// Inter-event time `tau(x) = ((1-x)/x)^alpha`, identically 1 for `alpha = 0`.
    pub fn tau(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            1.0
        } else {
            let x = floor_unit(x);
            ((1.0 - x) / x).powf(self.alpha)
        }
    }
}

/// Parameters of the three-group (fundamentalist / pessimist / optimist) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateParams {
    /// Chartist to fundamentalist, `sigma_cf / h1`.
    pub eps_cf: f64,
    /// Fundamentalist to chartist, `sigma_fc / h1`.
    pub eps_fc: f64,
    /// Between chartist moods, `sigma_cc / (H h1)`.
    pub eps_cc: f64,
    /// How many times faster chartists herd among themselves.
    pub big_h: f64,
    pub alpha: f64,
    /// Base herding rate (1/s); only used to convert to physical time.
    pub h1: f64,
}

impl ThreeStateParams {
    pub fn new(eps_cf: f64, eps_fc: f64, eps_cc: f64, big_h: f64, alpha: f64, h1: f64) -> Result<Self> {
        let p = ThreeStateParams {
            eps_cf,
            eps_fc,
            eps_cc,
            big_h,
            alpha,
            h1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_cf", self.eps_cf),
            ("eps_fc", self.eps_fc),
            ("eps_cc", self.eps_cc),
            ("h1", self.h1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HerdError::Domain {
                    name,
                    value: v,
                    domain: "(0, inf)",
                });
            }
        }
        if !(self.big_h >= 1.0 && self.big_h.is_finite()) {
            return Err(HerdError::Domain {
                name: "big_h",
                value: self.big_h,
                domain: "[1, inf)",
            });
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(HerdError::Domain {
                name: "alpha",
                value: self.alpha,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }

    /// Zero-drift point of the macroscopic system with `xi = 0`.
    pub fn fixed_point(&self) -> MacroState {
        MacroState {
            n_f: self.eps_cf / (self.eps_cf + self.eps_fc),
            xi: 0.0,
        }
    }

    /// Unscaled rates `sigma_ji` and herding intensities `h_ji`.
    pub fn raw_rates(&self) -> RawThreeStateRates {
        let sigma_cf = self.eps_cf * self.h1;
        let sigma_fc = self.eps_fc * self.h1;
        let sigma_cc = self.eps_cc * self.big_h * self.h1;
        let h1 = self.h1;
        let h23 = self.big_h * self.h1;
        RawThreeStateRates {
            sigma: [
                [0.0, sigma_fc / 2.0, sigma_fc / 2.0],
                [sigma_cf, 0.0, sigma_cc],
                [sigma_cf, sigma_cc, 0.0],
            ],
            herd: [[0.0, h1, h1], [h1, 0.0, h23], [h1, h23, 0.0]],
        }
    }
}

/// Idiosyncratic rates `sigma[j][i]` and herding intensities `herd[j][i]`
/// for a jump from state `j` to state `i`.
///
/// State 0 holds fundamentalists, state 1 pessimists, state 2 optimists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawThreeStateRates {
    pub sigma: [[f64; 3]; 3],
    pub herd: [[f64; 3]; 3],
}

/// Macroscopic state of the three-group model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    /// Fraction of fundamentalists.
    pub n_f: f64,
    /// Chartist mood `(n_o - n_p) / (n_o + n_p)`.
    pub xi: f64,
}

impl MacroState {
    pub fn new(n_f: f64, xi: f64) -> Result<Self> {
        check_unit("n_f", n_f)?;
        if !(-1.0..=1.0).contains(&xi) {
            return Err(HerdError::Domain {
                name: "xi",
                value: xi,
                domain: "[-1, 1]",
            });
        }
        Ok(MacroState { n_f, xi })
    }

    /// Optimist fraction.
    pub fn n_o(&self) -> f64 {
        (1.0 - self.n_f) * (1.0 + self.xi) / 2.0
    }

    /// Pessimist fraction.
    pub fn n_p(&self) -> f64 {
        (1.0 - self.n_f) * (1.0 - self.xi) / 2.0
    }

    /// The state with `n_f` and `xi` pulled off their boundaries by [`DELTA`].
    pub fn floored(&self) -> MacroState {
        MacroState {
            n_f: floor_unit(self.n_f),
            xi: self.xi.clamp(-1.0 + DELTA, 1.0 - DELTA),
        }
    }
}

/// Exponents of the general class `dx = (eta - lambda/2) x^(2 eta - 1) dt + x^eta dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPrediction {
    pub eta: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl ExponentPrediction {
    /// PSD exponent `beta = 1 + (lambda - 3) / (2 (eta - 1))`.
    pub fn from_general_class(eta: f64, lambda: f64) -> Result<Self> {
        if eta == 1.0 || !eta.is_finite() {
            return Err(HerdError::Domain {
                name: "eta",
                value: eta,
                domain: "eta != 1",
            });
        }
        Ok(ExponentPrediction {
            eta,
            lambda,
            beta: 1.0 + (lambda - 3.0) / (2.0 * (eta - 1.0)),
        })
    }
}

/// Per-agent rates `(eta1, eta2)` of the generalized two-state model.
///
/// `eta1` moves an agent from state 1 to state 2, `eta2` the reverse; `x` is
/// the fraction in state 2. The idiosyncratic term `sigma1` sits outside the
/// `1/tau` factor while `sigma2` sits inside it, consistent with the drift of
/// [`two_state_drift_diffusion`].
pub fn two_state_rates(x: f64, p: &TwoStateParams) -> Result<(f64, f64)> {
    check_unit("x", x)?;
    let n = p.n_agents as f64;
    let tau = p.tau(x);
    let eta1 = p.sigma1() + n * p.h * x / tau;
    let eta2 = (p.sigma2() + n * p.h * (1.0 - x)) / tau;
    Ok((eta1, eta2))
}

/// Drift and diffusion of the two-state SDE in scaled time.
pub fn two_state_drift_diffusion(x: f64, p: &TwoStateParams) -> Result<(f64, f64)> {
    check_unit("x", x)?;
    let tau = p.tau(x);
    let drift = p.epsilon1 * (1.0 - x) - p.epsilon2 * x / tau;
    let diffusion = (2.0 * x * (1.0 - x) / tau).sqrt();
    Ok((drift, diffusion))
}

/// `y = x / (1 - x)`.
pub fn y_transform(x: f64) -> Result<f64> {
    if x == 1.0 {
        return Err(HerdError::Infinite);
    }
    check_unit("x", x)?;
    Ok(x / (1.0 - x))
}

/// Inverse of [`y_transform`].
pub fn y_inverse(y: f64) -> Result<f64> {
    if y.is_infinite() && y > 0.0 {
        return Ok(1.0);
    }
    if !(y >= 0.0) {
        return Err(HerdError::Domain {
            name: "y",
            value: y,
            domain: "[0, inf)",
        });
    }
    Ok(y / (1.0 + y))
}

/// Drift and diffusion of the transformed two-state SDE in `y` with
/// `tau(y) = y^-alpha`.
pub fn transformed_drift_diffusion(y: f64, p: &TwoStateParams) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(HerdError::Domain {
            name: "y",
            value: y,
            domain: "(0, inf)",
        });
    }
    let inv_tau = y.powf(p.alpha);
    let drift = (p.epsilon1 + y * (2.0 - p.epsilon2) * inv_tau) * (1.0 + y);
    let diffusion = (2.0 * y * inv_tau).sqrt() * (1.0 + y);
    Ok((drift, diffusion))
}

/// Drift `(eta - lambda/2) x^(2 eta - 1)` and diffusion `x^eta` of the general class.
pub fn general_class_terms(x: f64, eta: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(HerdError::Domain {
            name: "x",
            value: x,
            domain: "(0, inf)",
        });
    }
    let drift = (eta - lambda / 2.0) * x.powf(2.0 * eta - 1.0);
    Ok((drift, x.powf(eta)))
}

/// Asymptotic exponents of the two-state model with `tau(y) = y^-alpha`:
/// `eta = (3 + alpha)/2`, `lambda = eps2 + alpha + 1`.
pub fn predict_exponents(alpha: f64, eps2: f64) -> Result<ExponentPrediction> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(HerdError::Domain {
            name: "alpha",
            value: alpha,
            domain: "[0, inf)",
        });
    }
    ExponentPrediction::from_general_class((3.0 + alpha) / 2.0, eps2 + alpha + 1.0)
}

/// Inter-event time of the three-group model,
/// `tau = 1 / (1 + |xi (1 - n_f) / n_f|^alpha)`.
///
/// `alpha = 0` switches the feedback off (`tau = 1`).
pub fn tau_three_state(state: &MacroState, alpha: f64) -> Result<f64> {
    if !(state.n_f > 0.0) {
        return Err(HerdError::Domain {
            name: "n_f",
            value: state.n_f,
            domain: "(0, 1] (tau diverges at n_f = 0)",
        });
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let z = ((1.0 - state.n_f) / state.n_f * state.xi).abs();
    Ok(1.0 / (1.0 + z.powf(alpha)))
}

/// Chartist mood `(n_o - n_p) / (n_o + n_p)`.
pub fn mood(n_o: f64, n_p: f64) -> Result<f64> {
    if n_o < 0.0 || n_p < 0.0 {
        return Err(HerdError::Domain {
            name: "n_o, n_p",
            value: n_o.min(n_p),
            domain: "[0, 1]",
        });
    }
    let total = n_o + n_p;
    if total == 0.0 {
        return Err(HerdError::UndefinedMood);
    }
    Ok((n_o - n_p) / total)
}

/// [`mood`] with the no-chartist case mapped to a neutral mood.
pub fn mood_or_neutral(n_o: f64, n_p: f64) -> f64 {
    mood(n_o, n_p).unwrap_or(0.0)
}

/// Per-agent rates `eta[j][i] = sigma_ji + N h_ji x_i` of the three-state model.
pub fn three_state_rates(pop: &AgentPopulation, raw: &RawThreeStateRates) -> [[f64; 3]; 3] {
    debug_assert_eq!(pop.counts.len(), 3);
    let n = pop.n_total as f64;
    let mut eta = [[0.0; 3]; 3];
    for (j, row) in eta.iter_mut().enumerate() {
        for (i, rate) in row.iter_mut().enumerate() {
            if i != j {
                let x_i = pop.counts[i] as f64 / n;
                *rate = raw.sigma[j][i] + n * raw.herd[j][i] * x_i;
            }
        }
    }
    eta
}

/// Fokker-Planck drift vector and diffusion matrix for `(x1, x2)`.
pub fn fokker_planck_coefficients(x1: f64, x2: f64, raw: &RawThreeStateRates) -> Result<([f64; 2], [[f64; 2]; 2])> {
    check_unit("x1", x1)?;
    check_unit("x2", x2)?;
    let x3 = 1.0 - x1 - x2;
    if x3 < -1e-12 {
        return Err(HerdError::Domain {
            name: "x1 + x2",
            value: x1 + x2,
            domain: "[0, 1]",
        });
    }
    let x3 = x3.max(0.0);
    let s = &raw.sigma;
    let h = &raw.herd;
    let d1 = [
        s[1][0] * x2 + s[2][0] * x3 - (s[0][1] + s[0][2]) * x1,
        s[0][1] * x1 + s[2][1] * x3 - (s[1][0] + s[1][2]) * x2,
    ];
    let d11 = h[0][1] * x1 * x2 + h[0][2] * x1 * x3;
    let d22 = h[0][1] * x1 * x2 + h[1][2] * x2 * x3;
    let d12 = -h[0][1] * x1 * x2;
    Ok((d1, [[d11, d12], [d12, d22]]))
}

/// Drift and (diagonal) diffusion of `(n_f, xi)` in scaled time `t_s = h1 t`.
pub fn three_state_drift_diffusion(state: &MacroState, p: &ThreeStateParams) -> Result<([f64; 2], [f64; 2])> {
    let tau = tau_three_state(&state.floored(), p.alpha)?;
    let MacroState { n_f, xi } = *state;
    let drift = [
        (1.0 - n_f) * p.eps_cf / tau - n_f * p.eps_fc,
        -2.0 * p.big_h * p.eps_cc * xi / tau,
    ];
    let diffusion = [
        (2.0 * n_f * (1.0 - n_f) / tau).max(0.0).sqrt(),
        (2.0 * p.big_h * (1.0 - xi * xi) / tau).max(0.0).sqrt(),
    ];
    Ok((drift, diffusion))
}
