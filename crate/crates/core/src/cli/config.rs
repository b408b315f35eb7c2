//! JSON run configuration: parsing, defaults and validation.
//!
//! A document is split into blocks (`model`, `integrator`, `simulation`,
//! `market`, `analysis`, `input`, `output`). [`parse_config`] returns the
//! resolved form with every default written out, which is also what the run
//! manifest stores, so a manifest can be fed back as a configuration.

use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::kinetics::{self, ThreeStateParams, TwoStateParams, DEFAULT_ALPHA, DELTA};
use crate::market::MarketParams;
use crate::sde::IntegratorConfig;

/// Run mode, also the first command-line argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Abm2,
    Abm3,
    Sde2,
    Sde3,
    GenClass,
    Returns,
    Analyze,
    Predict,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Abm2 => "abm2",
            Mode::Abm3 => "abm3",
            Mode::Sde2 => "sde2",
            Mode::Sde3 => "sde3",
            Mode::GenClass => "gen-class",
            Mode::Returns => "returns",
            Mode::Analyze => "analyze",
            Mode::Predict => "predict",
        }
    }
}

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "{}: {}", self.path, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

type CfgResult<T> = std::result::Result<T, ConfigError>;

/// Model parameters; which keys apply depends on the mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    /// Herding intensity of the two-state model (1/s).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_cf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_fc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_cc: Option<f64>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub big_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    /// `[x]` for two-state models, `[n_f, xi]` for three-state models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
}

/// Market layer. The return scale is given either as `a` and `b`, as
/// `b_over_a` (with `a` defaulting to 1), or as `a_sqrt_T` and `b_sqrt_T`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub window_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_over_a: Option<f64>,
    #[serde(rename = "a_sqrt_T", skip_serializing_if = "Option::is_none")]
    pub a_sqrt_t: Option<f64>,
    #[serde(rename = "b_sqrt_T", skip_serializing_if = "Option::is_none")]
    pub b_sqrt_t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Column to analyse; defaults to the last column of the input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Analyse absolute values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absolute: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf_fit_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_segments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_bins_per_decade: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_fit_ranges: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hill_k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBlock {
    pub path: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Scaled,
    Seconds,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<TimeUnit>,
}

/// Complete run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Crate version; set in manifests, ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

/// Parses and resolves a configuration whose `mode` key is set.
pub fn parse_config(text: &str) -> CfgResult<RunConfig> {
    parse_config_for(text, None)
}

/// Parses and resolves a configuration. `mode` comes from the command line
/// and must agree with the document if both are given.
pub fn parse_config_for(text: &str, mode: Option<Mode>) -> CfgResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::new(path, e.inner().to_string())
    })?;
    let mode = match (raw.mode, mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::new(
                "mode",
                format!("document says `{}` but `{}` was requested", a.name(), b.name()),
            ))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(ConfigError::new("mode", "missing")),
    };
    resolve(raw, mode)
}

fn positive(path: &str, v: f64) -> CfgResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

fn nonnegative(path: &str, v: f64) -> CfgResult<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be nonnegative, got {v}")))
    }
}

fn required<T: Copy>(path: &str, v: Option<T>) -> CfgResult<T> {
    v.ok_or_else(|| ConfigError::new(path, "missing"))
}

fn block<'a, T>(path: &str, b: &'a Option<T>) -> CfgResult<&'a T> {
    b.as_ref().ok_or_else(|| ConfigError::new(path, "missing block"))
}

fn forbid(path: &str, present: bool, mode: Mode) -> CfgResult<()> {
    if present {
        Err(ConfigError::new(path, format!("not used by mode `{}`", mode.name())))
    } else {
        Ok(())
    }
}

/// Model keys each mode accepts.
fn model_keys(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Abm2 | Mode::Sde2 => &["eps1", "eps2", "h", "N", "alpha"],
        Mode::Abm3 => &["eps_cf", "eps_fc", "eps_cc", "H", "alpha", "h1", "N"],
        Mode::Sde3 | Mode::Returns => &["eps_cf", "eps_fc", "eps_cc", "H", "alpha", "h1"],
        Mode::GenClass => &["eta", "lambda", "alpha", "eps2", "x_min", "x_max"],
        Mode::Predict => &["alpha", "eps2"],
        Mode::Analyze => &[],
    }
}

fn present_model_keys(m: &ModelBlock) -> Vec<&'static str> {
    let fields: [(&'static str, bool); 14] = [
        ("eps1", m.eps1.is_some()),
        ("eps2", m.eps2.is_some()),
        ("h", m.h.is_some()),
        ("N", m.n.is_some()),
        ("alpha", m.alpha.is_some()),
        ("eps_cf", m.eps_cf.is_some()),
        ("eps_fc", m.eps_fc.is_some()),
        ("eps_cc", m.eps_cc.is_some()),
        ("H", m.big_h.is_some()),
        ("h1", m.h1.is_some()),
        ("eta", m.eta.is_some()),
        ("lambda", m.lambda.is_some()),
        ("x_min", m.x_min.is_some()),
        ("x_max", m.x_max.is_some()),
    ];
    fields.iter().filter(|f| f.1).map(|f| f.0).collect()
}

fn resolve_model(m: &ModelBlock, mode: Mode, needs_abm: bool) -> CfgResult<ModelBlock> {
    let allowed = model_keys(mode);
    for key in present_model_keys(m) {
        if !allowed.contains(&key) {
            return Err(ConfigError::new(
                format!("model.{key}"),
                format!("not used by mode `{}`", mode.name()),
            ));
        }
    }
    let alpha = nonnegative("model.alpha", m.alpha.unwrap_or(DEFAULT_ALPHA))?;
    let mut out = ModelBlock {
        alpha: Some(alpha),
        ..ModelBlock::default()
    };
    match mode {
        Mode::Abm2 | Mode::Sde2 => {
            out.eps1 = Some(positive("model.eps1", required("model.eps1", m.eps1)?)?);
            out.eps2 = Some(positive("model.eps2", required("model.eps2", m.eps2)?)?);
            out.h = Some(positive("model.h", m.h.unwrap_or(1.0))?);
            if needs_abm {
                let n = required("model.N", m.n)?;
                if n < 2 {
                    return Err(ConfigError::new("model.N", "at least 2 agents required"));
                }
                out.n = Some(n);
            }
        }
        Mode::Abm3 | Mode::Sde3 | Mode::Returns => {
            out.eps_cf = Some(positive("model.eps_cf", required("model.eps_cf", m.eps_cf)?)?);
            out.eps_fc = Some(positive("model.eps_fc", required("model.eps_fc", m.eps_fc)?)?);
            out.eps_cc = Some(positive("model.eps_cc", required("model.eps_cc", m.eps_cc)?)?);
            let big_h = required("model.H", m.big_h)?;
            if !(big_h >= 1.0 && big_h.is_finite()) {
                return Err(ConfigError::new("model.H", format!("must be at least 1, got {big_h}")));
            }
            out.big_h = Some(big_h);
            out.h1 = Some(positive("model.h1", m.h1.unwrap_or(1.0))?);
            if needs_abm {
                let n = required("model.N", m.n)?;
                if n < 2 {
                    return Err(ConfigError::new("model.N", "at least 2 agents required"));
                }
                out.n = Some(n);
            }
        }
        Mode::GenClass => {
            let (eta, lambda) = match (m.eta, m.lambda, m.eps2) {
                (Some(eta), Some(lambda), None) => {
                    out.alpha = None;
                    if m.alpha.is_some() {
                        return Err(ConfigError::new("model.alpha", "give either eta and lambda or alpha and eps2"));
                    }
                    (eta, lambda)
                }
                (None, None, Some(eps2)) => {
                    let pred = kinetics::predict_exponents(alpha, positive("model.eps2", eps2)?)
                        .map_err(|e| ConfigError::new("model", e.to_string()))?;
                    (pred.eta, pred.lambda)
                }
                _ => {
                    return Err(ConfigError::new("model", "give either eta and lambda or alpha and eps2"));
                }
            };
            if !(eta.is_finite() && lambda.is_finite()) {
                return Err(ConfigError::new("model.eta", "eta and lambda must be finite"));
            }
            out.eps2 = None;
            out.eta = Some(eta);
            out.lambda = Some(lambda);
            let x_min = positive("model.x_min", required("model.x_min", m.x_min)?)?;
            let x_max = positive("model.x_max", required("model.x_max", m.x_max)?)?;
            if x_max <= x_min {
                return Err(ConfigError::new("model.x_max", "must exceed x_min"));
            }
            out.x_min = Some(x_min);
            out.x_max = Some(x_max);
        }
        Mode::Predict => {
            out.eps2 = Some(positive("model.eps2", required("model.eps2", m.eps2)?)?);
        }
        Mode::Analyze => unreachable!("analyze has no model"),
    }
    Ok(out)
}

fn resolve_simulation(s: &SimulationBlock, dim: usize) -> CfgResult<SimulationBlock> {
    let t_end = positive("simulation.t_end", required("simulation.t_end", s.t_end)?)?;
    let sample_dt = positive("simulation.sample_dt", required("simulation.sample_dt", s.sample_dt)?)?;
    if sample_dt > t_end {
        return Err(ConfigError::new("simulation.sample_dt", "must not exceed t_end"));
    }
    if let Some(init) = &s.initial {
        if init.len() != dim {
            return Err(ConfigError::new(
                "simulation.initial",
                format!("expected {dim} components, got {}", init.len()),
            ));
        }
    }
    let replicas = s.replicas.unwrap_or(1);
    if replicas == 0 {
        return Err(ConfigError::new("simulation.replicas", "must be at least 1"));
    }
    Ok(SimulationBlock {
        t_end: Some(t_end),
        sample_dt: Some(sample_dt),
        initial: s.initial.clone(),
        replicas: Some(replicas),
    })
}

fn resolve_integrator(i: Option<&IntegratorBlock>, sample_dt: f64) -> CfgResult<IntegratorBlock> {
    let i = i.cloned().unwrap_or_default();
    let kappa = i.kappa.unwrap_or(IntegratorConfig::DEFAULT_KAPPA);
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(ConfigError::new("integrator.kappa", "must lie in (0, 1]"));
    }
    let max_dt = positive("integrator.max_dt", i.max_dt.unwrap_or(sample_dt))?;
    let min_dt = nonnegative("integrator.min_dt", i.min_dt.unwrap_or(IntegratorConfig::DEFAULT_MIN_DT.min(max_dt)))?;
    if min_dt > max_dt {
        return Err(ConfigError::new("integrator.min_dt", "must not exceed max_dt"));
    }
    let delta = i.delta.unwrap_or(DELTA);
    if delta != DELTA {
        return Err(ConfigError::new("integrator.delta", format!("only the built-in floor {DELTA} is supported")));
    }
    Ok(IntegratorBlock {
        kappa: Some(kappa),
        max_dt: Some(max_dt),
        min_dt: Some(min_dt),
        delta: Some(delta),
    })
}

fn resolve_market(m: &MarketBlock) -> CfgResult<MarketBlock> {
    let window_t = positive("market.T", required("market.T", m.window_t)?)?;
    let lambda = required("market.lambda", m.lambda)?;
    if !(lambda > 3.0 && lambda.is_finite()) {
        return Err(ConfigError::new("market.lambda", format!("must exceed 3, got {lambda}")));
    }
    let r0_bar = positive("market.r0_bar", m.r0_bar.unwrap_or(1.0))?;
    let sqrt_t = window_t.sqrt();
    let (a, b) = match (m.a, m.b, m.b_over_a, m.a_sqrt_t, m.b_sqrt_t) {
        (Some(a), Some(b), None, None, None) => (a, b),
        (a, None, Some(ratio), None, None) => {
            let a = a.unwrap_or(1.0);
            (a, a * nonnegative("market.b_over_a", ratio)?)
        }
        (None, None, None, Some(a), Some(b)) => (a / sqrt_t, b / sqrt_t),
        _ => {
            return Err(ConfigError::new(
                "market",
                "give the return scale as `a` and `b`, as `b_over_a`, or as `a_sqrt_T` and `b_sqrt_T`",
            ))
        }
    };
    let a = nonnegative("market.a", a)?;
    let b = nonnegative("market.b", b)?;
    Ok(MarketBlock {
        r0_bar: Some(r0_bar),
        lambda: Some(lambda),
        window_t: Some(window_t),
        a: Some(a),
        b: Some(b),
        ..MarketBlock::default()
    })
}

fn resolve_analysis(a: Option<&AnalysisBlock>) -> CfgResult<AnalysisBlock> {
    let a = a.cloned().unwrap_or_default();
    let burn_in = a.burn_in.unwrap_or(0.1);
    if !(0.0..1.0).contains(&burn_in) {
        return Err(ConfigError::new("analysis.burn_in", "must lie in [0, 1)"));
    }
    let pdf_bins = a.pdf_bins.unwrap_or(50);
    if pdf_bins == 0 {
        return Err(ConfigError::new("analysis.pdf_bins", "must be positive"));
    }
    let psd_segments = a.psd_segments.unwrap_or(16);
    if psd_segments == 0 {
        return Err(ConfigError::new("analysis.psd_segments", "must be positive"));
    }
    let psd_bins_per_decade = a.psd_bins_per_decade.unwrap_or(20);
    if psd_bins_per_decade == 0 {
        return Err(ConfigError::new("analysis.psd_bins_per_decade", "must be positive"));
    }
    let check_range = |path: &str, r: &[f64; 2]| {
        if r[0] > 0.0 && r[1] > r[0] && r[1].is_finite() {
            Ok(())
        } else {
            Err(ConfigError::new(path, "need 0 < lo < hi"))
        }
    };
    if let Some(r) = &a.pdf_fit_range {
        check_range("analysis.pdf_fit_range", r)?;
    }
    let psd_fit_ranges = a.psd_fit_ranges.clone().unwrap_or_default();
    for (i, r) in psd_fit_ranges.iter().enumerate() {
        check_range(&format!("analysis.psd_fit_ranges[{i}]"), r)?;
    }
    if a.hill_k == Some(0) {
        return Err(ConfigError::new("analysis.hill_k", "must be positive"));
    }
    Ok(AnalysisBlock {
        column: a.column,
        absolute: Some(a.absolute.unwrap_or(true)),
        burn_in: Some(burn_in),
        pdf_bins: Some(pdf_bins),
        pdf_fit_range: a.pdf_fit_range,
        psd_segments: Some(psd_segments),
        psd_bins_per_decade: Some(psd_bins_per_decade),
        psd_fit_ranges: Some(psd_fit_ranges),
        hill_k: a.hill_k,
    })
}

fn resolve(raw: RunConfig, mode: Mode) -> CfgResult<RunConfig> {
    let simulates = match mode {
        Mode::Abm2 | Mode::Abm3 | Mode::Sde2 | Mode::Sde3 | Mode::GenClass => true,
        Mode::Returns => raw.input.is_none(),
        Mode::Analyze | Mode::Predict => false,
    };
    let integrates = simulates && !matches!(mode, Mode::Abm2 | Mode::Abm3);
    let needs_model = mode != Mode::Analyze && (mode != Mode::Returns || simulates);

    forbid("model", !needs_model && raw.model.is_some(), mode)?;
    forbid("simulation", !simulates && raw.simulation.is_some(), mode)?;
    forbid("integrator", !integrates && raw.integrator.is_some(), mode)?;
    forbid("market", mode != Mode::Returns && raw.market.is_some(), mode)?;
    forbid("analysis", mode != Mode::Analyze && raw.analysis.is_some(), mode)?;
    let reads_input = matches!(mode, Mode::Analyze | Mode::Returns);
    forbid("input", !reads_input && raw.input.is_some(), mode)?;

    let mut out = RunConfig {
        version: None,
        mode: Some(mode),
        seed: Some(raw.seed.unwrap_or(0)),
        ..RunConfig::default()
    };
    if needs_model {
        let needs_abm = matches!(mode, Mode::Abm2 | Mode::Abm3);
        out.model = Some(resolve_model(block("model", &raw.model)?, mode, needs_abm)?);
    }
    if simulates {
        let dim = if matches!(mode, Mode::Abm3 | Mode::Sde3 | Mode::Returns) { 2 } else { 1 };
        let sim = resolve_simulation(block("simulation", &raw.simulation)?, dim)?;
        if integrates {
            out.integrator = Some(resolve_integrator(raw.integrator.as_ref(), sim.sample_dt.unwrap_or(1.0))?);
        }
        out.simulation = Some(sim);
    }
    if mode == Mode::Returns {
        out.market = Some(resolve_market(block("market", &raw.market)?)?);
    }
    if mode == Mode::Analyze {
        out.analysis = Some(resolve_analysis(raw.analysis.as_ref())?);
        out.input = Some(block("input", &raw.input)?.clone());
    }
    if mode == Mode::Returns {
        out.input = raw.input.clone();
    }
    let time_unit = raw.output.as_ref().and_then(|o| o.time_unit).unwrap_or_default();
    if time_unit == TimeUnit::Seconds {
        let m = out.model.as_ref();
        let has_rate = m.is_some_and(|m| m.h.is_some() || m.h1.is_some());
        if !has_rate || !simulates {
            return Err(ConfigError::new(
                "output.time_unit",
                "seconds need a simulated model with a herding rate `h` or `h1`",
            ));
        }
    }
    out.output = Some(OutputBlock {
        time_unit: Some(time_unit),
    });
    Ok(out)
}

/// Typed accessors on a resolved configuration.
impl RunConfig {
    pub fn mode(&self) -> Mode {
        self.mode.expect("resolved config has a mode")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn model_block(&self) -> &ModelBlock {
        self.model.as_ref().expect("resolved config has a model block")
    }

    pub fn two_state_params(&self) -> crate::Result<TwoStateParams> {
        let m = self.model_block();
        TwoStateParams::new(
            m.eps1.unwrap_or(0.0),
            m.eps2.unwrap_or(0.0),
            m.h.unwrap_or(1.0),
            m.n.unwrap_or(1000),
            m.alpha.unwrap_or(DEFAULT_ALPHA),
        )
    }

    pub fn three_state_params(&self) -> crate::Result<ThreeStateParams> {
        let m = self.model_block();
        ThreeStateParams::new(
            m.eps_cf.unwrap_or(0.0),
            m.eps_fc.unwrap_or(0.0),
            m.eps_cc.unwrap_or(0.0),
            m.big_h.unwrap_or(0.0),
            m.alpha.unwrap_or(DEFAULT_ALPHA),
            m.h1.unwrap_or(1.0),
        )
    }

    pub fn n_agents(&self) -> u64 {
        self.model_block().n.unwrap_or(0)
    }

    /// `(eta, lambda, x_min, x_max)` of the general-class SDE.
    pub fn general_class(&self) -> (f64, f64, f64, f64) {
        let m = self.model_block();
        (
            m.eta.unwrap_or(f64::NAN),
            m.lambda.unwrap_or(f64::NAN),
            m.x_min.unwrap_or(f64::NAN),
            m.x_max.unwrap_or(f64::NAN),
        )
    }

    /// `(alpha, eps2)` for the exponent prediction.
    pub fn predict_inputs(&self) -> (f64, f64) {
        let m = self.model_block();
        (m.alpha.unwrap_or(DEFAULT_ALPHA), m.eps2.unwrap_or(f64::NAN))
    }

    pub fn simulation(&self) -> &SimulationBlock {
        self.simulation.as_ref().expect("resolved config has a simulation block")
    }

    pub fn analysis(&self) -> &AnalysisBlock {
        self.analysis.as_ref().expect("resolved config has an analysis block")
    }

    /// Integrator settings for one trajectory.
    pub fn integrator_config(&self, initial: Vec<f64>, stream: u64) -> IntegratorConfig {
        let i = self.integrator.clone().unwrap_or_default();
        let s = self.simulation();
        IntegratorConfig {
            kappa: i.kappa.unwrap_or(IntegratorConfig::DEFAULT_KAPPA),
            max_dt: i.max_dt.unwrap_or(s.sample_dt.unwrap_or(1.0)),
            min_dt: i.min_dt.unwrap_or(IntegratorConfig::DEFAULT_MIN_DT),
            t_end: s.t_end.unwrap_or(0.0),
            sample_dt: s.sample_dt.unwrap_or(0.0),
            seed: self.seed(),
            stream,
            initial,
        }
    }

    pub fn market_params(&self) -> MarketParams {
        let m = self.market.clone().unwrap_or_default();
        MarketParams {
            r0_bar: m.r0_bar.unwrap_or(1.0),
            a: m.a.unwrap_or(0.0),
            b: m.b.unwrap_or(0.0),
            lambda_q: m.lambda.unwrap_or(f64::NAN),
            window_t: m.window_t.unwrap_or(f64::NAN),
            mu: 0.0,
            sigma: 0.0,
        }
    }

    pub fn time_unit(&self) -> TimeUnit {
        self.output.as_ref().and_then(|o| o.time_unit).unwrap_or_default()
    }

    /// Physical seconds per unit of scaled time.
    pub fn seconds_per_unit(&self) -> f64 {
        let m = self.model_block();
        1.0 / m.h.or(m.h1).unwrap_or(1.0)
    }
}
